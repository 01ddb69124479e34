#pragma once

#include "delala/dataset.hpp"
#include "delala/leading_forest.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace delala {

/// Per-node class-membership vectors; a node is labeled iff some entry is positive.
struct LabelMatrix {
    Matrix vectors;                // n x C
    std::vector<int> populations;  // pop_i, all 1 without granulation

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
    [[nodiscard]] int class_count() const noexcept { return static_cast<int>(vectors.cols()); }
    [[nodiscard]] bool labeled(NodeIndex i) const;
    /// Row argmax, ties to the lowest class id.
    [[nodiscard]] ClassId predicted(NodeIndex i) const;
};

using Seed = std::pair<NodeIndex, ClassId>;

/// One-hot rows at the seeds, zeros elsewhere.
[[nodiscard]] LabelMatrix seed_labels(std::size_t n, int class_count, std::span<const Seed> seeds);

/**
 * Bottom-up pass. Every unlabeled parent with a labeled child becomes
 * sum_i W_i L_i / sum_i W_i over all its children, W_i = pop_i / dist(i, parent).
 */
[[nodiscard]] LabelMatrix c2p_pass(const LeadingForest& forest, LabelMatrix labels);

/// Unlabeled roots, densest first, copy the row of the nearest denser labeled
/// root; the densest root falls back to the nearest labeled root.
[[nodiscard]] LabelMatrix r2r_pass(const LeadingForest& forest, const DistanceMatrix& dist, LabelMatrix labels);

/// Top-down pass: unlabeled nodes copy their parent's row.
[[nodiscard]] LabelMatrix p2c_pass(const LeadingForest& forest, LabelMatrix labels);

struct Propagation {
    LabelMatrix labels;
    std::vector<ClassId> predicted;
};

[[nodiscard]] Propagation propagate(const LeadingForest& forest, const DistanceMatrix& dist, int class_count,
                                    std::span<const Seed> seeds);

}  // namespace delala
