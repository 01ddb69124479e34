#pragma once

#include "delala/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace delala {

/// Hyper-parameters of kernelized large margin component analysis.
struct KlmcaConfig {
    int k = 3;                // target neighbours per sample
    double c = 1.0;           // push-loss weight
    double lambda = 1e-3;     // learning rate
    int max_iters = 100;
    int p = 0;                // projected dimension; 0 means min(C + 2, l - 1)
    double bandwidth = 1.0;   // Gaussian kernel width
    double tol = 1e-7;        // relative loss change that stops training
    std::uint64_t seed = 42;  // used only by the degenerate KPCA fallback

    void validate() const;
};

/// eta(i, j) = 1 iff j is one of the k nearest same-class samples of i.
struct TargetNeighbors {
    Matrix eta;
    Matrix same_class;
    std::vector<std::vector<std::size_t>> lists;  // lists[i] = target neighbours of i, nearest first

    [[nodiscard]] std::size_t size() const noexcept { return lists.size(); }
};

[[nodiscard]] TargetNeighbors target_neighbors(std::span<const ClassId> labels, const Matrix& dist, int k);

struct KpcaInit {
    Matrix omega;           // p_effective x l
    int p_effective = 0;
    bool random_fallback = false;
};

/**
 * Omega_0 = Lambda_p^{-1/2} V_p^T H from the top-p eigenpairs of H K H with
 * H = I - 11^T / l. Eigenvalues <= 1e-12 truncate p with a warning; when
 * nothing survives, a small seeded random matrix with the requested p rows
 * is returned instead.
 */
[[nodiscard]] KpcaInit kpca_init(const KernelMatrix& train_kernel, int p, std::uint64_t seed = 42);

struct LossTerms {
    double pull = 0.0;
    double push = 0.0;  // before multiplying by c
    double total = 0.0;
    std::size_t active_triples = 0;
};

/// Pull + c * hinge push loss of projection omega over the kernel basis.
[[nodiscard]] LossTerms loss_terms(const Matrix& omega, const Matrix& kernel, const TargetNeighbors& nb, double c);
[[nodiscard]] double loss(const Matrix& omega, const Matrix& kernel, const TargetNeighbors& nb, double c);

/// Gradient of `loss` with respect to omega (p x l); the hinge derivative is 0 at s = 0.
[[nodiscard]] Matrix gamma_step(const Matrix& omega, const Matrix& kernel, const TargetNeighbors& nb, double c);

struct KlmcaModel {
    Matrix omega;  // p x l
    KernelMatrix train_kernel;
    std::vector<std::size_t> train_indices;
    std::vector<ClassId> train_labels;
    Matrix train_features;  // l x d, rows ordered as train_indices
    std::vector<double> loss_history;
    bool kpca_fallback = false;

    [[nodiscard]] int p() const noexcept { return static_cast<int>(omega.rows()); }
    [[nodiscard]] std::size_t l() const noexcept { return static_cast<std::size_t>(omega.cols()); }
};

/// Gradient descent from the KPCA start with step halving on loss increase.
/// `features` and `dist` describe the labeled samples, in the same order as `labels`.
[[nodiscard]] KlmcaModel train(const Matrix& features, const Matrix& dist, std::span<const ClassId> labels,
                               const KlmcaConfig& config);

/// Omega * kernel_block, with kernel_block rows ordered as the training set.
[[nodiscard]] Matrix project(const KlmcaModel& model, const Matrix& kernel_block);

/// Kernel columns of `queries` against the training samples, then projection.
[[nodiscard]] Matrix project_features(const KlmcaModel& model, const Matrix& queries);

/// Class of the nearest labeled column in the projected space; ties go to the lower index.
[[nodiscard]] std::vector<ClassId> classify_1nn(const Matrix& proj_labeled, std::span<const ClassId> labels,
                                                const Matrix& proj_unlabeled);

[[nodiscard]] nlohmann::json model_to_json(const KlmcaModel& model);
[[nodiscard]] KlmcaModel model_from_json(const nlohmann::json& j);
void save_model(const KlmcaModel& model, const std::filesystem::path& path);
[[nodiscard]] KlmcaModel load_model(const std::filesystem::path& path);

}  // namespace delala
