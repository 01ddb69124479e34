#include "delala/pipeline.hpp"

#include "delala/errors.hpp"

#include <algorithm>
#include <chrono>

namespace delala {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point start) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - start).count();
}

}  // namespace

void DelalaParams::validate() const {
    if (sigma && !(*sigma > 0.0)) {
        throw config_error("sigma must be positive");
    }
    if (kernel_bandwidth && !(*kernel_bandwidth > 0.0)) {
        throw config_error("kernel bandwidth must be positive");
    }
    if (!(sigma_percentile > 0.0 && sigma_percentile <= 1.0) ||
        !(kernel_percentile > 0.0 && kernel_percentile <= 1.0)) {
        throw config_error("bandwidth percentiles must lie in (0, 1]");
    }
    if (!(w >= 0.0 && w <= 1.0)) {
        throw config_error("w must lie in [0, 1]");
    }
    if (!(alpha_lodog > 0.0 && alpha_lodog < 1.0)) {
        throw config_error("alpha_lodog must lie strictly between 0 and 1");
    }
    if (k < 1) {
        throw config_error("k must be at least 1");
    }
    if (l < 1) {
        throw config_error("l must be at least 1");
    }
    if (max_granules && *max_granules < 1) {
        throw config_error("max_granules must be at least 1");
    }
    KlmcaConfig probe = klmca;
    probe.k = static_cast<int>(k);
    probe.validate();
}

StageTimes& StageTimes::operator+=(const StageTimes& other) {
    forest_ms += other.forest_ms;
    selection_ms += other.selection_ms;
    training_ms += other.training_ms;
    inference_ms += other.inference_ms;
    return *this;
}

Bandwidths resolve_bandwidths(const DistanceMatrix& dist, const DelalaParams& params) {
    Bandwidths b;
    b.sigma = params.sigma ? *params.sigma : distance_percentile(dist, params.sigma_percentile);
    b.kernel = params.kernel_bandwidth ? *params.kernel_bandwidth : distance_percentile(dist, params.kernel_percentile);
    return b;
}

LodogResult build_forest(const DistanceMatrix& dist, double sigma, const DelalaParams& params) {
    const auto tree = build_leading_tree(dist, sigma);
    return lodog_cut(tree, params.alpha_lodog, params.max_granules);
}

std::vector<NodeIndex> complement(std::size_t n, std::span<const NodeIndex> labeled) {
    std::vector<char> taken(n, 0);
    for (NodeIndex i : labeled) {
        taken.at(i) = 1;
    }
    std::vector<NodeIndex> out;
    out.reserve(n - std::min(n, labeled.size()));
    for (NodeIndex i = 0; i < n; ++i) {
        if (!taken[i]) {
            out.push_back(i);
        }
    }
    return out;
}

MetricClassification train_and_classify(const Dataset& ds, const DistanceMatrix& dist,
                                        std::span<const NodeIndex> labeled, std::span<const ClassId> labeled_classes,
                                        std::span<const NodeIndex> unlabeled, const DelalaParams& params,
                                        double kernel_bandwidth) {
    if (labeled.size() != labeled_classes.size()) {
        throw contract_error("train_and_classify: labeled indices and classes differ in length");
    }
    MetricClassification out;
    auto start = clock_type::now();
    KlmcaConfig cfg = params.klmca;
    cfg.k = static_cast<int>(params.k);
    cfg.bandwidth = kernel_bandwidth;
    const Dataset train_set = ds.subset(labeled, false);
    out.model = train(train_set.features, distance_block(dist, labeled, labeled), labeled_classes, cfg);
    out.model.train_indices.assign(labeled.begin(), labeled.end());
    out.training_ms = elapsed_ms(start);

    start = clock_type::now();
    const Matrix cross = distance_block(dist, labeled, unlabeled);
    const Matrix proj_u = project(out.model, gaussian_kernel(cross, kernel_bandwidth).values);
    const Matrix proj_l = project(out.model, out.model.train_kernel.values);
    out.predictions = classify_1nn(proj_l, labeled_classes, proj_u);
    out.inference_ms = elapsed_ms(start);
    return out;
}

namespace {

DelalaResult finish(const Dataset& ds, const DistanceMatrix& dist, DelalaResult r, const DelalaParams& params) {
    auto& cls = r.classification;
    cls.unlabeled = complement(ds.size(), cls.labeled);
    auto mc = train_and_classify(ds, dist, cls.labeled, cls.labeled_classes, cls.unlabeled, params,
                                 r.bandwidths.kernel);
    cls.predictions = std::move(mc.predictions);
    r.model = std::move(mc.model);
    r.times.training_ms = mc.training_ms;
    r.times.inference_ms = mc.inference_ms;
    return r;
}

}  // namespace

DelalaResult run_delala(const Dataset& ds, const DistanceMatrix& dist, const LabelOracle& oracle, int class_count,
                        const DelalaParams& params) {
    params.validate();
    if (dist.size() != ds.size()) {
        throw contract_error("run_delala: distance matrix does not match the dataset");
    }
    DelalaResult r;
    auto start = clock_type::now();
    r.bandwidths = resolve_bandwidths(dist, params);
    auto cut = build_forest(dist, r.bandwidths.sigma, params);
    r.forest = std::move(cut.forest);
    r.granulation = std::move(cut.granulation);
    r.times.forest_ms = elapsed_ms(start);

    start = clock_type::now();
    r.scores = selection_scores(r.forest, params.w);
    r.selection = select_labeled(oracle, class_count, r.scores, params.l, params.k);
    r.times.selection_ms = elapsed_ms(start);

    r.classification.labeled = r.selection.selected;
    r.classification.labeled_classes = r.selection.selected_labels;
    return finish(ds, dist, std::move(r), params);
}

DelalaResult run_with_labeled_set(const Dataset& ds, const DistanceMatrix& dist, const LabelOracle& oracle,
                                  std::span<const NodeIndex> labeled, const DelalaParams& params) {
    params.validate();
    DelalaResult r;
    r.bandwidths = resolve_bandwidths(dist, params);
    auto start = clock_type::now();
    r.classification.labeled.assign(labeled.begin(), labeled.end());
    for (NodeIndex i : labeled) {
        const auto c = oracle(i);
        if (!c) {
            throw data_error("labeled sample " + std::to_string(i) + " has no class");
        }
        r.classification.labeled_classes.push_back(*c);
    }
    r.times.selection_ms = elapsed_ms(start);
    return finish(ds, dist, std::move(r), params);
}

}  // namespace delala
