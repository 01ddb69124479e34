#include "delala/klmca.hpp"

#include "delala/errors.hpp"
#include "delala/log.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace delala {

void KlmcaConfig::validate() const {
    if (k < 1) {
        throw config_error("KLMCA k must be at least 1");
    }
    if (!(c > 0.0)) {
        throw config_error("KLMCA push weight c must be positive");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw config_error("KLMCA learning rate must be positive and finite");
    }
    if (max_iters < 1) {
        throw config_error("KLMCA max_iters must be at least 1");
    }
    if (p < 0) {
        throw config_error("KLMCA p must be non-negative (0 selects the default)");
    }
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw config_error("KLMCA kernel bandwidth must be positive and finite");
    }
    if (!(tol > 0.0)) {
        throw config_error("KLMCA tol must be positive");
    }
}

TargetNeighbors target_neighbors(std::span<const ClassId> labels, const Matrix& dist, int k) {
    const std::size_t l = labels.size();
    if (static_cast<std::size_t>(dist.rows()) != l || static_cast<std::size_t>(dist.cols()) != l) {
        throw contract_error("target_neighbors: distance block must be l x l");
    }
    if (k < 1) {
        throw config_error("target neighbour count k must be at least 1");
    }
    TargetNeighbors nb;
    const auto L = static_cast<Eigen::Index>(l);
    nb.eta = Matrix::Zero(L, L);
    nb.same_class = Matrix::Zero(L, L);
    nb.lists.resize(l);
    for (std::size_t i = 0; i < l; ++i) {
        std::vector<std::size_t> peers;
        for (std::size_t j = 0; j < l; ++j) {
            if (labels[j] == labels[i]) {
                nb.same_class(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
                if (j != i) {
                    peers.push_back(j);
                }
            }
        }
        const auto row = static_cast<Eigen::Index>(i);
        std::sort(peers.begin(), peers.end(), [&](std::size_t a, std::size_t b) {
            const double da = dist(row, static_cast<Eigen::Index>(a));
            const double db = dist(row, static_cast<Eigen::Index>(b));
            return da != db ? da < db : a < b;
        });
        peers.resize(std::min(peers.size(), static_cast<std::size_t>(k)));
        for (std::size_t j : peers) {
            nb.eta(row, static_cast<Eigen::Index>(j)) = 1.0;
        }
        nb.lists[i] = std::move(peers);
    }
    return nb;
}

KpcaInit kpca_init(const KernelMatrix& train_kernel, int p, std::uint64_t seed) {
    const Matrix& K = train_kernel.values;
    if (K.rows() != K.cols() || K.rows() == 0) {
        throw contract_error("kpca_init: kernel must be square and non-empty");
    }
    if (p < 1) {
        throw config_error("kpca_init: p must be at least 1");
    }
    const Eigen::Index l = K.rows();
    const Matrix H = Matrix::Identity(l, l) - Matrix::Constant(l, l, 1.0 / static_cast<double>(l));
    Matrix centered = H * K * H;
    centered = 0.5 * (centered + centered.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(centered);
    const Vector& values = solver.eigenvalues();  // ascending
    const Matrix& vectors = solver.eigenvectors();

    int usable = 0;
    for (int r = 0; r < p && r < l; ++r) {
        if (values(l - 1 - r) > 1e-12) {
            ++usable;
        } else {
            break;
        }
    }
    KpcaInit out;
    if (usable < p) {
        warn("kpca_init: only " + std::to_string(usable) + " of " + std::to_string(p) +
             " components have positive variance; p truncated");
    }
    if (usable == 0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, 1e-2);
        out.omega.resize(p, l);
        for (Eigen::Index c = 0; c < l; ++c) {
            for (Eigen::Index r = 0; r < p; ++r) {
                out.omega(r, c) = noise(rng);
            }
        }
        out.p_effective = p;
        out.random_fallback = true;
        return out;
    }
    Matrix top(usable, l);
    for (int r = 0; r < usable; ++r) {
        const Eigen::Index col = l - 1 - r;
        top.row(r) = vectors.col(col).transpose() / std::sqrt(values(col));
    }
    out.omega = top * H;
    out.p_effective = usable;
    return out;
}

namespace {

/// Squared projected distances between all kernel columns.
Matrix projected_sq_distances(const Matrix& projected) {
    const Eigen::Index l = projected.cols();
    Matrix sq(l, l);
    for (Eigen::Index j = 0; j < l; ++j) {
        sq(j, j) = 0.0;
        for (Eigen::Index i = j + 1; i < l; ++i) {
            const double d = (projected.col(i) - projected.col(j)).squaredNorm();
            sq(i, j) = d;
            sq(j, i) = d;
        }
    }
    return sq;
}

void check_shapes(const Matrix& omega, const Matrix& kernel, const TargetNeighbors& nb) {
    if (kernel.rows() != kernel.cols() || omega.cols() != kernel.rows() ||
        static_cast<std::size_t>(kernel.rows()) != nb.size()) {
        throw contract_error("KLMCA: omega, kernel and neighbour sizes disagree");
    }
}

/// Visits every (i, j, m) with j a target neighbour of i and m of another class.
template <typename F>
void for_each_triple(const TargetNeighbors& nb, F&& f) {
    const std::size_t l = nb.size();
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j : nb.lists[i]) {
            for (std::size_t m = 0; m < l; ++m) {
                if (nb.same_class(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) == 0.0) {
                    f(i, j, m);
                }
            }
        }
    }
}

}  // namespace

LossTerms loss_terms(const Matrix& omega, const Matrix& kernel, const TargetNeighbors& nb, double c) {
    check_shapes(omega, kernel, nb);
    const Matrix sq = projected_sq_distances(omega * kernel);
    LossTerms t;
    for (std::size_t i = 0; i < nb.size(); ++i) {
        for (std::size_t j : nb.lists[i]) {
            t.pull += sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    for_each_triple(nb, [&](std::size_t i, std::size_t j, std::size_t m) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double s = sq(ii, static_cast<Eigen::Index>(j)) - sq(ii, static_cast<Eigen::Index>(m)) + 1.0;
        if (s > 0.0) {
            t.push += s;
            ++t.active_triples;
        }
    });
    t.total = t.pull + c * t.push;
    return t;
}

double loss(const Matrix& omega, const Matrix& kernel, const TargetNeighbors& nb, double c) {
    return loss_terms(omega, kernel, nb, c).total;
}

Matrix gamma_step(const Matrix& omega, const Matrix& kernel, const TargetNeighbors& nb, double c) {
    check_shapes(omega, kernel, nb);
    const Matrix sq = projected_sq_distances(omega * kernel);
    const Eigen::Index l = kernel.rows();
    // sum_pairs w (e_a - e_b)(e_a - e_b)^T, so that
    // sum_pairs w (k_a - k_b)(k_a - k_b)^T = K A K.
    Matrix A = Matrix::Zero(l, l);
    auto add_pair = [&A](Eigen::Index a, Eigen::Index b, double w) {
        A(a, a) += w;
        A(b, b) += w;
        A(a, b) -= w;
        A(b, a) -= w;
    };
    for (std::size_t i = 0; i < nb.size(); ++i) {
        for (std::size_t j : nb.lists[i]) {
            add_pair(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), 1.0);
        }
    }
    for_each_triple(nb, [&](std::size_t i, std::size_t j, std::size_t m) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        const auto mm = static_cast<Eigen::Index>(m);
        if (sq(ii, jj) - sq(ii, mm) + 1.0 > 0.0) {
            add_pair(ii, jj, c);
            add_pair(ii, mm, -c);
        }
    });
    return 2.0 * omega * kernel * A * kernel;
}

KlmcaModel train(const Matrix& features, const Matrix& dist, std::span<const ClassId> labels,
                 const KlmcaConfig& config) {
    config.validate();
    const std::size_t l = labels.size();
    if (l == 0 || static_cast<std::size_t>(features.rows()) != l || static_cast<std::size_t>(dist.rows()) != l ||
        dist.rows() != dist.cols()) {
        throw contract_error("KLMCA train: features, distances and labels must describe the same l samples");
    }
    const auto classes = std::set<ClassId>(labels.begin(), labels.end()).size();
    int p = config.p;
    if (p == 0) {
        p = std::min(static_cast<int>(classes) + 2, static_cast<int>(l) - 1);
    }
    p = std::clamp(p, 1, static_cast<int>(l));

    KlmcaModel model;
    model.train_kernel = gaussian_kernel(dist, config.bandwidth);
    model.train_labels.assign(labels.begin(), labels.end());
    model.train_features = features;
    const Matrix& K = model.train_kernel.values;
    const auto nb = target_neighbors(labels, dist, config.k);

    auto init = kpca_init(model.train_kernel, p, config.seed);
    model.kpca_fallback = init.random_fallback;
    Matrix omega = std::move(init.omega);

    double current = loss(omega, K, nb, config.c);
    if (!std::isfinite(current)) {
        throw training_error("KLMCA: initial loss is not finite");
    }
    model.loss_history.push_back(current);
    for (int it = 0; it < config.max_iters; ++it) {
        const Matrix grad = gamma_step(omega, K, nb, config.c);
        double step = config.lambda;
        bool accepted = false;
        Matrix candidate;
        double next = current;
        for (int halving = 0; halving <= 20; ++halving) {
            candidate = omega - step * grad;
            next = loss(candidate, K, nb, config.c);
            if (!std::isfinite(next)) {
                throw training_error("KLMCA: loss became non-finite at iteration " + std::to_string(it + 1) +
                                     " (step " + std::to_string(step) + ")");
            }
            if (next <= current) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;
        }
        const double change = std::abs(current - next) / std::max(current, 1e-12);
        omega = std::move(candidate);
        current = next;
        model.loss_history.push_back(current);
        if (change < config.tol) {
            break;
        }
    }
    model.omega = std::move(omega);
    return model;
}

Matrix project(const KlmcaModel& model, const Matrix& kernel_block) {
    if (kernel_block.rows() != model.omega.cols()) {
        throw contract_error("project: kernel block has " + std::to_string(kernel_block.rows()) +
                             " rows, model expects " + std::to_string(model.omega.cols()));
    }
    return model.omega * kernel_block;
}

Matrix project_features(const KlmcaModel& model, const Matrix& queries) {
    const Matrix dist = cross_distances(model.train_features, queries);
    return project(model, gaussian_kernel(dist, model.train_kernel.bandwidth).values);
}

std::vector<ClassId> classify_1nn(const Matrix& proj_labeled, std::span<const ClassId> labels,
                                  const Matrix& proj_unlabeled) {
    if (proj_labeled.cols() == 0) {
        throw contract_error("classify_1nn: no labeled samples");
    }
    if (static_cast<std::size_t>(proj_labeled.cols()) != labels.size()) {
        throw contract_error("classify_1nn: label count does not match labeled columns");
    }
    if (proj_labeled.rows() != proj_unlabeled.rows()) {
        throw contract_error("classify_1nn: projected dimensions differ");
    }
    std::vector<ClassId> out(static_cast<std::size_t>(proj_unlabeled.cols()));
    for (Eigen::Index u = 0; u < proj_unlabeled.cols(); ++u) {
        Eigen::Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < proj_labeled.cols(); ++j) {
            const double d = (proj_unlabeled.col(u) - proj_labeled.col(j)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        out[static_cast<std::size_t>(u)] = labels[static_cast<std::size_t>(best)];
    }
    return out;
}

namespace {

nlohmann::json flatten(const Matrix& m) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            arr.push_back(m(r, c));
        }
    }
    return arr;
}

Matrix unflatten(const nlohmann::json& arr, Eigen::Index rows, Eigen::Index cols) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols) {
        throw data_error("model file: matrix payload has the wrong size");
    }
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = arr[static_cast<std::size_t>(r * cols + c)].get<double>();
        }
    }
    return m;
}

constexpr int model_format_version = 1;

}  // namespace

nlohmann::json model_to_json(const KlmcaModel& model) {
    nlohmann::json j;
    j["format"] = "delala-klmca";
    j["version"] = model_format_version;
    j["bandwidth"] = model.train_kernel.bandwidth;
    j["p"] = model.omega.rows();
    j["l"] = model.omega.cols();
    j["dims"] = model.train_features.cols();
    j["train_indices"] = model.train_indices;
    j["train_labels"] = model.train_labels;
    j["omega"] = flatten(model.omega);
    j["train_features"] = flatten(model.train_features);
    j["loss_history"] = model.loss_history;
    j["kpca_fallback"] = model.kpca_fallback;
    return j;
}

KlmcaModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "delala-klmca") {
            throw data_error("model file: unknown format tag");
        }
        if (j.at("version").get<int>() != model_format_version) {
            throw data_error("model file: unsupported version " + j.at("version").dump());
        }
        KlmcaModel m;
        const auto p = j.at("p").get<Eigen::Index>();
        const auto l = j.at("l").get<Eigen::Index>();
        const auto dims = j.at("dims").get<Eigen::Index>();
        m.omega = unflatten(j.at("omega"), p, l);
        m.train_features = unflatten(j.at("train_features"), l, dims);
        m.train_indices = j.at("train_indices").get<std::vector<std::size_t>>();
        m.train_labels = j.at("train_labels").get<std::vector<ClassId>>();
        m.loss_history = j.at("loss_history").get<std::vector<double>>();
        m.kpca_fallback = j.value("kpca_fallback", false);
        const double bandwidth = j.at("bandwidth").get<double>();
        m.train_kernel = gaussian_kernel(pairwise_distances(m.train_features), bandwidth);
        if (static_cast<Eigen::Index>(m.train_labels.size()) != l) {
            throw data_error("model file: label count does not match l");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("model file: ") + e.what());
    }
}

void save_model(const KlmcaModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot write " + path.string());
    }
    out << model_to_json(model).dump(2) << '\n';
}

KlmcaModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("model file: ") + e.what());
    }
    return model_from_json(j);
}

}  // namespace delala
