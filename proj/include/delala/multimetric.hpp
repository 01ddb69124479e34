#pragma once

#include "delala/pipeline.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace delala {

struct MultiMetricParams {
    DelalaParams base;
    /// Subtrees whose labeled samples span more classes than this get their own sub-forest.
    std::size_t class_threshold = 5;
    int max_depth = 3;
    /// Cap every class at `base.k` during a subtree's first ranking pass; otherwise take the top of the ranking.
    bool class_quota = false;

    void validate() const;
};

enum class LeafKind {
    recurse,   // split into child subtrees
    klmca,     // local metric plus 1NN in the projection
    constant,  // a single labeled class
    input_nn,  // too few labels for a metric: 1NN on the input distances
    borrowed,  // no labels: classified by another leaf's classifier
};

[[nodiscard]] std::string_view to_string(LeafKind kind);

struct MetricNode {
    std::size_t id = 0;
    int depth = 0;
    std::optional<std::size_t> parent;
    NodeIndex root = 0;  // densest member, a global sample index
    std::vector<NodeIndex> members;
    std::size_t budget = 0;  // labels granted to this subtree
    std::vector<NodeIndex> labeled;
    std::vector<ClassId> labeled_classes;
    std::vector<NodeIndex> unlabeled;
    std::vector<ClassId> predictions;  // parallel to unlabeled; empty for recurse nodes
    int local_classes = 0;
    LeafKind kind = LeafKind::constant;
    std::optional<std::size_t> borrowed_from;  // lending leaf
    std::vector<std::size_t> children;
    std::optional<KlmcaModel> model;
};

/// Recursion tree; nodes[0..top_level) are the top-level subtrees.
struct MetricTree {
    std::vector<MetricNode> nodes;
    std::size_t top_level = 0;

    /// Labels drawn from the oracle; recursion reuses its parent's labels.
    [[nodiscard]] std::size_t budget_used() const;
    [[nodiscard]] std::vector<std::size_t> leaves() const;
};

/// Distinct classes among the labeled samples of one subtree.
[[nodiscard]] int subtree_class_count(std::span<const ClassId> labeled_classes);

struct MultiMetricResult {
    Classification classification;
    MetricTree tree;
    /// Top-level forest; empty when the flat pipeline ran.
    LeadingForest forest;
    GranulationResult granulation;
    Bandwidths bandwidths;
    StageTimes times;
    /// Set when class_count <= class_threshold and the flat pipeline ran instead.
    std::optional<DelalaResult> flat;
};

/**
 * Per-subtree metric learning over the optimal leading forest. The budget l
 * is split over the top-level subtrees by largest remainder on their sizes,
 * each subtree ranks its own members and draws its share from `oracle`, and a
 * subtree whose labels span more than `class_threshold` classes is split again
 * with a fresh forest on its members, reusing the labels it already holds.
 * Subtrees without labels borrow the classifier of the nearest denser labeled
 * sibling.
 */
[[nodiscard]] MultiMetricResult multi_metric_classify(const Dataset& ds, const DistanceMatrix& dist,
                                                      const LabelOracle& oracle, int class_count,
                                                      const MultiMetricParams& params);

/// Largest-remainder split of `budget` proportional to `sizes`; ties favour lower positions.
[[nodiscard]] std::vector<std::size_t> proportional_budget(std::span<const std::size_t> sizes, std::size_t budget);

}  // namespace delala
