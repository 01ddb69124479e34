#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace delala {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Class ids are dense, zero-based, and assigned in order of first appearance.
using ClassId = int;

/**
 * Feature matrix plus optional per-sample labels.
 *
 * `labels[i]` is empty when sample i is unlabeled. `class_names[c]` keeps the
 * original spelling of class c so that reports can map ids back.
 */
struct Dataset {
    Matrix features;  // n x d
    std::vector<std::optional<ClassId>> labels;
    int class_count = 0;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;
    std::string name;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
    [[nodiscard]] std::size_t dims() const noexcept { return static_cast<std::size_t>(features.cols()); }

    /// Rows `indices` in the given order. Labels are copied only if `keep_labels`.
    [[nodiscard]] Dataset subset(std::span<const std::size_t> indices, bool keep_labels = true) const;

    /// Same samples with every label removed.
    [[nodiscard]] Dataset without_labels() const;
};

/// Column layout of a CSV file.
struct CsvSchema {
    bool has_header = true;
    /// Index of the label column; negative values count from the end (-1 = last).
    /// Empty means the file has no label column.
    std::optional<int> label_column = -1;
};

[[nodiscard]] Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
[[nodiscard]] Dataset parse_csv(std::string_view text, const CsvSchema& schema = {}, std::string name = {});

/// Writes features with shortest round-trip decimals; the label column (class
/// names) is appended last when the dataset has any class.
void save_csv(const Dataset& ds, const std::filesystem::path& path);
[[nodiscard]] std::string format_csv(const Dataset& ds);

/// Per-column (x - mean) / std with the population std. Constant columns become zero.
[[nodiscard]] Dataset zscore_normalize(const Dataset& ds);
[[nodiscard]] Matrix zscore_columns(const Matrix& values);

/// Symmetric n x n Euclidean distance matrix.
struct DistanceMatrix {
    Matrix values;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
};

struct KernelMatrix {
    Matrix values;
    double bandwidth = 1.0;
};

[[nodiscard]] DistanceMatrix pairwise_distances(const Dataset& ds);
[[nodiscard]] DistanceMatrix pairwise_distances(const Matrix& rows);

/// Block of an existing distance matrix: rows `row_idx`, columns `col_idx`.
[[nodiscard]] Matrix distance_block(const DistanceMatrix& dist,
                                    std::span<const std::size_t> row_idx,
                                    std::span<const std::size_t> col_idx);

/// Distance matrix restricted to `idx` (same order).
[[nodiscard]] DistanceMatrix restrict_distances(const DistanceMatrix& dist, std::span<const std::size_t> idx);

/// Euclidean distances between the rows of `a` and the rows of `b`.
[[nodiscard]] Matrix cross_distances(const Matrix& a, const Matrix& b);

/// Entrywise exp(-d^2 / bandwidth^2). Throws config_error for bandwidth <= 0.
[[nodiscard]] KernelMatrix gaussian_kernel(const Matrix& dist, double bandwidth);
[[nodiscard]] KernelMatrix gaussian_kernel(const DistanceMatrix& dist, double bandwidth);

/**
 * Nearest-rank percentile (q in (0, 1]) of the off-diagonal entries i < j.
 *
 * A zero result (duplicated points dominate the low tail) is replaced by the
 * smallest positive distance, and by 1 when every distance is zero, so that
 * the value is always usable as a bandwidth.
 */
[[nodiscard]] double distance_percentile(const DistanceMatrix& dist, double q);

}  // namespace delala
