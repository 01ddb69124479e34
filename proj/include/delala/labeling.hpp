#pragma once

#include "delala/dataset.hpp"
#include "delala/leading_forest.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace delala {

/// Scores used to rank nodes for labeling.
struct SelectionScores {
    /// h(gamma) = 1 / log(gamma'), gamma' being gamma min-max rescaled to [1 + 1e-6, e].
    std::vector<double> typicalness;
    /// psi = rho / layer.
    std::vector<double> divergence;
    double w = 0.5;
    std::vector<double> typicalness_norm;
    std::vector<double> divergence_norm;
};

[[nodiscard]] SelectionScores selection_scores(const LeadingForest& forest, double w);
/// Same scores from parallel arrays, e.g. restricted to the members of one granule.
[[nodiscard]] SelectionScores selection_scores(std::span<const double> gamma, std::span<const double> rho,
                                               std::span<const int> layer, double w);

/// Maps values affinely onto [0, 1]; a constant array maps to all zeros.
[[nodiscard]] std::vector<double> min_max_normalize(std::span<const double> values);

struct XorRanking {
    std::vector<std::size_t> order;  // indices by composite descending, ties by index
    std::vector<double> composite;
    std::vector<double> a_term;  // w * a* (1 - b*)
    std::vector<double> b_term;  // (1 - w) * b* (1 - a*)
};

/// Weighted continuous XOR of two min-max normalized arrays.
[[nodiscard]] XorRanking conti_xor_rank(std::span<const double> a, std::span<const double> b, double w);
[[nodiscard]] std::vector<std::size_t> conti_xor_small(std::span<const double> a, std::span<const double> b, double w);

enum class Role { central, divergent };

[[nodiscard]] std::string_view to_string(Role role);

struct SelectionResult {
    std::vector<NodeIndex> selected;  // in acceptance order
    std::vector<ClassId> selected_labels;
    std::vector<Role> roles;  // parallel to selected
    std::map<ClassId, std::vector<NodeIndex>> per_class;
    std::vector<NodeIndex> global_extras;
    std::size_t budget = 0;
    std::size_t per_class_minimum = 0;
    /// Number of samples whose label was revealed, including skipped ones.
    std::size_t queries = 0;
};

/// Reveals the class of a sample when it is popped from the ranking.
using LabelOracle = std::function<std::optional<ClassId>(NodeIndex)>;

/// Oracle backed by the ground-truth labels of `ds`.
[[nodiscard]] LabelOracle dataset_oracle(const Dataset& ds);

/**
 * Walks the XOR ranking of (typicalness, divergence). A popped sample joins
 * its class set while that class holds fewer than k samples, else the global
 * set while it holds fewer than l - k * class_count, else it is skipped for
 * good. Stops once l samples are selected.
 *
 * Throws infeasible_budget_error when l < k * class_count and
 * deficient_class_error when the ranking runs out first.
 */
[[nodiscard]] SelectionResult select_labeled(const LabelOracle& oracle, int class_count, const SelectionScores& scores,
                                             std::size_t l, std::size_t k);

[[nodiscard]] SelectionResult select_labeled(const Dataset& ds, const LeadingForest& forest,
                                             const SelectionScores& scores, std::size_t l, std::size_t k);

/// alpha * sum_{central} h(gamma) + (1 - alpha) * sum_{divergent} rho / layer.
[[nodiscard]] double objective_value(const SelectionResult& sel, const SelectionScores& scores, double alpha);

/// Continuous-XOR form: sum over L of alpha h*(1 - psi*) + (1 - alpha)(1 - h*) psi*.
[[nodiscard]] double xor_objective_value(const SelectionResult& sel, const SelectionScores& scores, double alpha);

}  // namespace delala
