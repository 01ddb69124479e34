#include "delala/lapoleaf.hpp"

#include "delala/errors.hpp"

#include <algorithm>
#include <limits>

namespace delala {

namespace {

constexpr double min_edge_length = 1e-12;

/// Nodes grouped by layer; index 0 holds layer 1.
std::vector<std::vector<NodeIndex>> nodes_by_layer(const LeadingForest& forest) {
    int depth = 0;
    for (int v : forest.layer) {
        depth = std::max(depth, v);
    }
    std::vector<std::vector<NodeIndex>> out(static_cast<std::size_t>(depth));
    for (NodeIndex i = 0; i < forest.size(); ++i) {
        out[static_cast<std::size_t>(forest.layer[i] - 1)].push_back(i);
    }
    return out;
}

void check_size(const LeadingForest& forest, const LabelMatrix& labels) {
    if (labels.size() != forest.size() || labels.populations.size() != forest.size()) {
        throw contract_error("label matrix and forest differ in size");
    }
}

}  // namespace

bool LabelMatrix::labeled(NodeIndex i) const {
    return (vectors.row(static_cast<Eigen::Index>(i)).array() > 0.0).any();
}

ClassId LabelMatrix::predicted(NodeIndex i) const {
    Eigen::Index best = 0;
    vectors.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    return static_cast<ClassId>(best);
}

LabelMatrix seed_labels(std::size_t n, int class_count, std::span<const Seed> seeds) {
    if (class_count < 1) {
        throw contract_error("seed_labels: class_count must be positive");
    }
    LabelMatrix m{Matrix::Zero(static_cast<Eigen::Index>(n), class_count), std::vector<int>(n, 1)};
    for (const auto& [node, cls] : seeds) {
        if (node >= n || cls < 0 || cls >= class_count) {
            throw contract_error("seed_labels: seed out of range");
        }
        m.vectors.row(static_cast<Eigen::Index>(node)).setZero();
        m.vectors(static_cast<Eigen::Index>(node), cls) = 1.0;
    }
    return m;
}

LabelMatrix c2p_pass(const LeadingForest& forest, LabelMatrix labels) {
    check_size(forest, labels);
    const auto by_layer = nodes_by_layer(forest);
    std::vector<std::vector<NodeIndex>> children(forest.size());
    for (NodeIndex i = 0; i < forest.size(); ++i) {
        if (forest.parent[i]) {
            children[*forest.parent[i]].push_back(i);
        }
    }
    // A parent's children all sit one layer below it, so their rows are final
    // once the deeper layers have been processed.
    for (std::size_t layer = by_layer.size(); layer-- > 0;) {
        for (NodeIndex p : by_layer[layer]) {
            if (children[p].empty() || labels.labeled(p)) {
                continue;
            }
            Vector numer = Vector::Zero(labels.class_count());
            double total = 0.0;
            bool any = false;
            for (NodeIndex child : children[p]) {
                const double w = labels.populations[child] / std::max(forest.delta[child], min_edge_length);
                total += w;
                if (labels.labeled(child)) {
                    any = true;
                    numer += w * labels.vectors.row(static_cast<Eigen::Index>(child)).transpose();
                }
            }
            if (any) {
                labels.vectors.row(static_cast<Eigen::Index>(p)) = (numer / total).transpose();
            }
        }
    }
    return labels;
}

LabelMatrix r2r_pass(const LeadingForest& forest, const DistanceMatrix& dist, LabelMatrix labels) {
    check_size(forest, labels);
    std::vector<NodeIndex> roots = forest.roots;
    std::sort(roots.begin(), roots.end(), [&](NodeIndex a, NodeIndex b) { return forest.denser(a, b); });
    const bool any_labeled =
        std::any_of(roots.begin(), roots.end(), [&](NodeIndex r) { return labels.labeled(r); });
    if (!any_labeled) {
        throw propagation_error("no labeled root to borrow from; the seed set is empty");
    }
    for (std::size_t pos = 0; pos < roots.size(); ++pos) {
        const NodeIndex r = roots[pos];
        if (labels.labeled(r)) {
            continue;
        }
        const bool densest = pos == 0;
        std::optional<NodeIndex> lender;
        double best = std::numeric_limits<double>::infinity();
        for (NodeIndex other : roots) {
            if (other == r || !labels.labeled(other)) {
                continue;
            }
            if (!densest && !forest.denser(other, r)) {
                continue;
            }
            const double d = dist(r, other);
            if (d < best || (d == best && lender && other < *lender)) {
                best = d;
                lender = other;
            }
        }
        if (!lender) {
            throw propagation_error("root " + std::to_string(r) + " found no labeled root to borrow from");
        }
        labels.vectors.row(static_cast<Eigen::Index>(r)) = labels.vectors.row(static_cast<Eigen::Index>(*lender));
    }
    return labels;
}

LabelMatrix p2c_pass(const LeadingForest& forest, LabelMatrix labels) {
    check_size(forest, labels);
    const auto by_layer = nodes_by_layer(forest);
    for (std::size_t layer = 1; layer < by_layer.size(); ++layer) {
        for (NodeIndex i : by_layer[layer]) {
            if (!labels.labeled(i)) {
                labels.vectors.row(static_cast<Eigen::Index>(i)) =
                    labels.vectors.row(static_cast<Eigen::Index>(*forest.parent[i]));
            }
        }
    }
    return labels;
}

Propagation propagate(const LeadingForest& forest, const DistanceMatrix& dist, int class_count,
                      std::span<const Seed> seeds) {
    if (seeds.empty()) {
        throw propagation_error("propagate: no seed labels");
    }
    auto labels = seed_labels(forest.size(), class_count, seeds);
    labels = c2p_pass(forest, std::move(labels));
    labels = r2r_pass(forest, dist, std::move(labels));
    labels = p2c_pass(forest, std::move(labels));
    Propagation out{std::move(labels), {}};
    out.predicted.resize(forest.size());
    for (NodeIndex i = 0; i < forest.size(); ++i) {
        out.predicted[i] = out.labels.predicted(i);
    }
    return out;
}

}  // namespace delala
