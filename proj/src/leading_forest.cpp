#include "delala/leading_forest.hpp"

#include "delala/errors.hpp"
#include "delala/log.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>

namespace delala {

bool denser_than(std::span<const double> rho, NodeIndex j, NodeIndex i) {
    if (rho[j] != rho[i]) {
        return rho[j] > rho[i];
    }
    return j < i;
}

bool LeadingForest::denser(NodeIndex j, NodeIndex i) const {
    return denser_than(rho, j, i);
}

std::vector<std::vector<NodeIndex>> LeadingForest::trees() const {
    std::vector<std::vector<NodeIndex>> out(roots.size());
    for (NodeIndex i = 0; i < size(); ++i) {
        out[tree_id[i]].push_back(i);
    }
    return out;
}

std::vector<double> local_density(const DistanceMatrix& dist, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw config_error("density bandwidth sigma must be positive and finite");
    }
    const std::size_t n = dist.size();
    if (n == 1) {
        warn("local_density: single point, density is an empty sum");
        return {0.0};
    }
    const double inv = 1.0 / (sigma * sigma);
    std::vector<double> rho(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                const double d = dist(j, i);
                sum += std::exp(-d * d * inv);
            }
        }
        rho[i] = sum;
    }
    return rho;
}

namespace {

std::vector<NodeIndex> order_by_density(std::span<const double> rho) {
    std::vector<NodeIndex> order(rho.size());
    std::iota(order.begin(), order.end(), NodeIndex{0});
    std::sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) { return denser_than(rho, a, b); });
    return order;
}

}  // namespace

LeadingNodes leading_nodes(const DistanceMatrix& dist, std::span<const double> rho) {
    const std::size_t n = rho.size();
    if (dist.size() != n) {
        throw contract_error("leading_nodes: density and distance sizes differ");
    }
    LeadingNodes out{std::vector<std::optional<NodeIndex>>(n), std::vector<double>(n, 0.0)};
    if (n == 0) {
        return out;
    }
    const auto order = order_by_density(rho);
    const NodeIndex top = order.front();
    out.delta[top] = dist.values.col(static_cast<Eigen::Index>(top)).maxCoeff();
    for (std::size_t r = 1; r < n; ++r) {
        const NodeIndex i = order[r];
        NodeIndex best = order[0];
        double best_d = dist(best, i);
        for (std::size_t s = 1; s < r; ++s) {
            const NodeIndex j = order[s];
            const double d = dist(j, i);
            if (d < best_d || (d == best_d && j < best)) {
                best = j;
                best_d = d;
            }
        }
        out.parent[i] = best;
        out.delta[i] = best_d;
    }
    return out;
}

std::vector<int> layers(std::span<const std::optional<NodeIndex>> parent) {
    const std::size_t n = parent.size();
    std::vector<std::vector<NodeIndex>> children(n);
    std::deque<NodeIndex> queue;
    std::vector<int> layer(n, 0);
    for (NodeIndex i = 0; i < n; ++i) {
        if (!parent[i]) {
            layer[i] = 1;
            queue.push_back(i);
        } else if (*parent[i] >= n) {
            throw structural_error("parent index out of range at node " + std::to_string(i));
        } else {
            children[*parent[i]].push_back(i);
        }
    }
    std::size_t visited = 0;
    while (!queue.empty()) {
        const NodeIndex v = queue.front();
        queue.pop_front();
        ++visited;
        for (NodeIndex c : children[v]) {
            layer[c] = layer[v] + 1;
            queue.push_back(c);
        }
    }
    if (visited != n) {
        throw structural_error("parent links contain a cycle (" + std::to_string(n - visited) +
                               " nodes unreachable from any root)");
    }
    return layer;
}

namespace {

void assign_trees(LeadingForest& f) {
    const std::size_t n = f.size();
    f.layer = layers(f.parent);
    f.roots.clear();
    f.tree_id.assign(n, 0);
    // Parents are denser than their children, so density order visits a
    // parent before any of its children.
    for (NodeIndex i : f.density_order) {
        if (!f.parent[i]) {
            f.tree_id[i] = f.roots.size();
            f.roots.push_back(i);
        } else {
            f.tree_id[i] = f.tree_id[*f.parent[i]];
        }
    }
}

}  // namespace

LeadingForest build_leading_tree(const DistanceMatrix& dist, double sigma) {
    LeadingForest f;
    f.rho = local_density(dist, sigma);
    auto nodes = leading_nodes(dist, f.rho);
    f.parent = std::move(nodes.parent);
    f.delta = std::move(nodes.delta);
    f.gamma.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.gamma[i] = f.rho[i] * f.delta[i];
    }
    f.density_order = order_by_density(f.rho);
    f.global_root = f.density_order.front();
    assign_trees(f);
    return f;
}

std::vector<NodeIndex> cut_candidates(const LeadingForest& tree) {
    std::vector<NodeIndex> out;
    out.reserve(tree.size());
    for (NodeIndex i = 0; i < tree.size(); ++i) {
        if (tree.parent[i]) {
            out.push_back(i);
        }
    }
    std::sort(out.begin(), out.end(), [&](NodeIndex a, NodeIndex b) {
        if (tree.gamma[a] != tree.gamma[b]) {
            return tree.gamma[a] > tree.gamma[b];
        }
        return a < b;
    });
    return out;
}

LeadingForest cut_forest(const LeadingForest& tree, std::span<const NodeIndex> cut) {
    LeadingForest f = tree;
    for (NodeIndex c : cut) {
        if (c >= f.size()) {
            throw contract_error("cut_forest: node index out of range");
        }
        f.parent[c].reset();
    }
    assign_trees(f);
    return f;
}

std::size_t default_max_granules(std::size_t n) {
    const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    return std::max<std::size_t>(1, std::min(n, root * 4));
}

LodogResult lodog_cut(const LeadingForest& tree, double alpha_lodog, std::optional<std::size_t> max_granules) {
    if (!(alpha_lodog > 0.0 && alpha_lodog < 1.0)) {
        throw config_error("LoDOG alpha must lie strictly between 0 and 1");
    }
    const std::size_t n = tree.size();
    if (n == 0) {
        throw contract_error("lodog_cut: empty tree");
    }
    const auto candidates = cut_candidates(tree);
    std::size_t n_max = max_granules.value_or(default_max_granules(n));
    n_max = std::clamp<std::size_t>(n_max, 1, candidates.size() + 1);

    GranulationResult g;
    g.alpha_lodog = alpha_lodog;
    g.dist_cost.resize(n_max);
    double cost = 0.0;
    for (NodeIndex c : candidates) {
        cost += tree.delta[c];
    }
    g.dist_cost[0] = cost;
    for (std::size_t k = 1; k < n_max; ++k) {
        cost -= tree.delta[candidates[k - 1]];
        g.dist_cost[k] = cost;
    }

    const auto [lo, hi] = std::minmax_element(g.dist_cost.begin(), g.dist_cost.end());
    const double cost_min = *lo;
    const double cost_span = *hi - *lo;
    g.objective_curve.resize(n_max);
    for (std::size_t k = 0; k < n_max; ++k) {
        const double count_term = n_max > 1 ? static_cast<double>(k) / static_cast<double>(n_max - 1) : 0.0;
        const double cost_term = cost_span > 0.0 ? (g.dist_cost[k] - cost_min) / cost_span : 0.0;
        g.objective_curve[k] = alpha_lodog * count_term + (1.0 - alpha_lodog) * cost_term;
    }
    const auto best = std::min_element(g.objective_curve.begin(), g.objective_curve.end());
    g.n_g = static_cast<std::size_t>(best - g.objective_curve.begin()) + 1;
    g.cut_candidates = candidates;

    LodogResult out{std::move(g), {}};
    out.forest = cut_forest(tree, std::span(candidates).first(out.granulation.n_g - 1));
    return out;
}

void write_edge_list(const LeadingForest& forest, std::ostream& out) {
    out << "node,parent,rho,delta,gamma,layer,tree_id\n";
    const auto prec = out.precision(17);
    for (NodeIndex i = 0; i < forest.size(); ++i) {
        out << i << ',';
        if (forest.parent[i]) {
            out << *forest.parent[i];
        } else {
            out << -1;
        }
        out << ',' << forest.rho[i] << ',' << forest.delta[i] << ',' << forest.gamma[i] << ','
            << forest.layer[i] << ',' << forest.tree_id[i] << '\n';
    }
    out.precision(prec);
}

}  // namespace delala
