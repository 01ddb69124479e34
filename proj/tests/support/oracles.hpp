#pragma once

// Straightforward reference implementations, written against plain vectors
// and loops so that they share no code with the library under test.

#include "delala/dataset.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace delala::oracle {

using Grid = std::vector<std::vector<double>>;

[[nodiscard]] Grid to_grid(const Matrix& m);
[[nodiscard]] Grid distances(const Matrix& features);
[[nodiscard]] std::vector<double> density(const Grid& dist, double sigma);

struct Leading {
    std::vector<std::optional<std::size_t>> parent;
    std::vector<double> delta;
};

/// Nearest node with (rho, -index) lexicographically larger; the top node gets its largest distance.
[[nodiscard]] Leading leading(const Grid& dist, const std::vector<double>& rho);

/// Depth of each node found by walking parent pointers to its root.
[[nodiscard]] std::vector<int> depths(const std::vector<std::optional<std::size_t>>& parent);

/// Root reached from each node by walking parent pointers.
[[nodiscard]] std::vector<std::size_t> root_of(const std::vector<std::optional<std::size_t>>& parent);

struct LodogEvaluation {
    std::vector<double> q;       // Q(N_g) for N_g = 1..n_max
    std::vector<double> cost;    // sum of delta over every non-root node after the cut
    std::size_t best = 1;
};

/**
 * Evaluates the granulation objective by actually cutting the tree for every
 * candidate granule count and summing delta over the nodes that keep a parent.
 */
[[nodiscard]] LodogEvaluation lodog_bruteforce(const std::vector<std::optional<std::size_t>>& parent,
                                               const std::vector<double>& delta, const std::vector<double>& gamma,
                                               double alpha, std::size_t n_max);

/// Pull plus c times hinge push, by enumerating all (i, j, m) triples with
/// target neighbours recomputed from `dist`.
[[nodiscard]] double klmca_loss(const Grid& omega, const Grid& kernel, const std::vector<int>& labels,
                                const Grid& dist, int k, double c);

/// Central finite-difference gradient of `f` at `x`.
[[nodiscard]] Matrix finite_difference(const std::function<double(const Matrix&)>& f, const Matrix& x, double step);

/// Label of the closest labeled column by a full scan; ties to the lowest column.
[[nodiscard]] std::vector<int> nearest_labels(const Matrix& labeled, const std::vector<int>& labels,
                                              const Matrix& queries);

}  // namespace delala::oracle
