#pragma once

#include "delala/dataset.hpp"
#include "delala/klmca.hpp"
#include "delala/labeling.hpp"
#include "delala/leading_forest.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace delala {

/// Parameters shared by every stage of the deterministic-labeling pipeline.
struct DelalaParams {
    /// Density bandwidth; when empty, the `sigma_percentile` quantile of the distances.
    std::optional<double> sigma;
    double sigma_percentile = 0.02;
    /// Kernel bandwidth; when empty, the `kernel_percentile` quantile of the distances.
    std::optional<double> kernel_bandwidth;
    double kernel_percentile = 0.5;
    double w = 0.5;  // XOR weight between typicalness and divergence
    std::size_t l = 12;
    std::size_t k = 3;  // per-class label minimum and KLMCA target neighbours
    double alpha_lodog = 0.5;
    std::optional<std::size_t> max_granules;
    KlmcaConfig klmca;  // k and bandwidth are overwritten from the fields above

    void validate() const;
};

struct StageTimes {
    double forest_ms = 0.0;
    double selection_ms = 0.0;
    double training_ms = 0.0;
    double inference_ms = 0.0;

    StageTimes& operator+=(const StageTimes& other);
    [[nodiscard]] double total_ms() const { return forest_ms + selection_ms + training_ms + inference_ms; }
};

/// Resolved bandwidths for one distance matrix.
struct Bandwidths {
    double sigma = 1.0;
    double kernel = 1.0;
};

[[nodiscard]] Bandwidths resolve_bandwidths(const DistanceMatrix& dist, const DelalaParams& params);

/// Leading tree plus LoDOG cut.
[[nodiscard]] LodogResult build_forest(const DistanceMatrix& dist, double sigma, const DelalaParams& params);

/// Labeled training set and predictions for every other sample.
struct Classification {
    std::vector<NodeIndex> labeled;
    std::vector<ClassId> labeled_classes;
    std::vector<NodeIndex> unlabeled;
    std::vector<ClassId> predictions;  // parallel to unlabeled
};

/// Trains KLMCA on `labeled` and labels every index in `unlabeled` by 1NN in the projection.
struct MetricClassification {
    KlmcaModel model;
    std::vector<ClassId> predictions;
    double training_ms = 0.0;
    double inference_ms = 0.0;
};

[[nodiscard]] MetricClassification train_and_classify(const Dataset& ds, const DistanceMatrix& dist,
                                                      std::span<const NodeIndex> labeled,
                                                      std::span<const ClassId> labeled_classes,
                                                      std::span<const NodeIndex> unlabeled,
                                                      const DelalaParams& params, double kernel_bandwidth);

struct DelalaResult {
    Classification classification;
    LeadingForest forest;
    GranulationResult granulation;
    SelectionScores scores;
    SelectionResult selection;
    KlmcaModel model;
    Bandwidths bandwidths;
    StageTimes times;
};

/**
 * Full pipeline on one dataset: forest, deterministic selection through
 * `oracle`, KLMCA on the selected samples, 1NN on the rest. `ds` is only read
 * for features; labels are obtained exclusively from the oracle.
 */
[[nodiscard]] DelalaResult run_delala(const Dataset& ds, const DistanceMatrix& dist, const LabelOracle& oracle,
                                      int class_count, const DelalaParams& params);

/// Same downstream as run_delala with a caller-chosen labeled set.
[[nodiscard]] DelalaResult run_with_labeled_set(const Dataset& ds, const DistanceMatrix& dist,
                                                const LabelOracle& oracle, std::span<const NodeIndex> labeled,
                                                const DelalaParams& params);

/// Indices of [0, n) not in `labeled`, ascending.
[[nodiscard]] std::vector<NodeIndex> complement(std::size_t n, std::span<const NodeIndex> labeled);

}  // namespace delala
