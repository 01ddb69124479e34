#pragma once

#include "delala/dataset.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace delala {

using NodeIndex = std::size_t;

/**
 * Leading tree (before cutting) or optimal leading forest (after `lodog_cut`).
 *
 * Every non-root node points at its nearest strictly denser node. Density
 * ties are broken by index: node j is denser than node i when
 * (rho[j], -j) > (rho[i], -i).
 */
struct LeadingForest {
    std::vector<double> rho;
    std::vector<std::optional<NodeIndex>> parent;
    std::vector<double> delta;
    std::vector<double> gamma;
    std::vector<int> layer;  // 1 at roots
    std::vector<std::size_t> tree_id;  // 0-based granule index
    std::vector<NodeIndex> roots;  // roots[t] is the root of granule t
    NodeIndex global_root = 0;
    /// Nodes sorted from densest to sparsest under the tie-broken order.
    std::vector<NodeIndex> density_order;

    [[nodiscard]] std::size_t size() const noexcept { return rho.size(); }
    [[nodiscard]] std::size_t tree_count() const noexcept { return roots.size(); }
    [[nodiscard]] bool denser(NodeIndex j, NodeIndex i) const;
    /// Members of each granule, in ascending index order.
    [[nodiscard]] std::vector<std::vector<NodeIndex>> trees() const;
};

struct GranulationResult {
    std::size_t n_g = 1;
    std::vector<double> objective_curve;  // Q(N_g) for N_g = 1..N_max
    std::vector<double> dist_cost;        // raw sum of non-root deltas for N_g = 1..N_max
    double alpha_lodog = 0.5;
    /// Non-root nodes ranked by gamma, the first n_g - 1 of which were cut.
    std::vector<NodeIndex> cut_candidates;
};

/// Tie-broken density comparison: is j denser than i?
[[nodiscard]] bool denser_than(std::span<const double> rho, NodeIndex j, NodeIndex i);

/// rho_i = sum_{j != i} exp(-d_ij^2 / sigma^2). A single point yields {0} with a warning.
[[nodiscard]] std::vector<double> local_density(const DistanceMatrix& dist, double sigma);

struct LeadingNodes {
    std::vector<std::optional<NodeIndex>> parent;
    std::vector<double> delta;
};

/// Nearest strictly denser node of every node; the densest node gets no
/// parent and delta = its largest distance to any node.
[[nodiscard]] LeadingNodes leading_nodes(const DistanceMatrix& dist, std::span<const double> rho);

/// Breadth-first depth below each root (root = 1). Throws structural_error on cycles.
[[nodiscard]] std::vector<int> layers(std::span<const std::optional<NodeIndex>> parent);

/// Uncut leading tree: a single granule rooted at the densest node.
[[nodiscard]] LeadingForest build_leading_tree(const DistanceMatrix& dist, double sigma);

/// Non-root nodes ordered by gamma descending, ties by index.
[[nodiscard]] std::vector<NodeIndex> cut_candidates(const LeadingForest& tree);

/// Detaches `cut` nodes from their parents and recomputes layers, tree ids and roots.
[[nodiscard]] LeadingForest cut_forest(const LeadingForest& tree, std::span<const NodeIndex> cut);

/// Default candidate range: min(n, ceil(sqrt(n)) * 4).
[[nodiscard]] std::size_t default_max_granules(std::size_t n);

struct LodogResult {
    GranulationResult granulation;
    LeadingForest forest;
};

/**
 * Chooses the granule count minimizing
 *   Q(N_g) = alpha * H(N_g) + (1 - alpha) * D(N_g),
 * where H is the granule count and D the summed delta of non-root nodes, both
 * min-max normalized over N_g = 1..max_granules, then cuts the tree.
 */
[[nodiscard]] LodogResult lodog_cut(const LeadingForest& tree, double alpha_lodog,
                                    std::optional<std::size_t> max_granules = std::nullopt);

/// Writes "node,parent,rho,delta,gamma,layer,tree_id" rows; roots have parent -1.
void write_edge_list(const LeadingForest& forest, std::ostream& out);

}  // namespace delala
