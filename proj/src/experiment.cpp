#include "delala/experiment.hpp"

#include "delala/errors.hpp"
#include "delala/labeling.hpp"
#include "delala/lapoleaf.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

namespace delala {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point start) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - start).count();
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

double parse_double(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw config_error("'" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
    }
    return v;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
    Int v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw config_error("'" + std::string(key) + "' expects an integer, got '" + std::string(text) + "'");
    }
    return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no" || text == "off") {
        return false;
    }
    throw config_error("'" + std::string(key) + "' expects true or false, got '" + std::string(text) + "'");
}

std::optional<double> parse_auto_double(std::string_view key, std::string_view text) {
    if (text == "auto") {
        return std::nullopt;
    }
    return parse_double(key, text);
}

}  // namespace

std::string_view to_string(PipelineKind kind) {
    switch (kind) {
        case PipelineKind::delala:
            return "delala";
        case PipelineKind::multimetric:
            return "multimetric";
        case PipelineKind::lapoleaf:
            return "lapoleaf";
        case PipelineKind::random_baseline:
            return "random-baseline";
    }
    return "unknown";
}

PipelineKind parse_pipeline(std::string_view text) {
    for (auto kind : {PipelineKind::delala, PipelineKind::multimetric, PipelineKind::lapoleaf,
                      PipelineKind::random_baseline}) {
        if (text == to_string(kind)) {
            return kind;
        }
    }
    throw config_error("unknown pipeline '" + std::string(text) +
                       "' (expected delala, multimetric, lapoleaf or random-baseline)");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "dataset",     "has_header",      "label_column",     "normalize", "pipeline",  "sigma",
        "sigma_percentile", "kernel_bandwidth", "kernel_percentile", "w",   "k",         "l",
        "p",           "c",               "lambda",           "max_iters", "tol",       "class_threshold",
        "max_depth",   "class_quota",     "alpha_lodog",      "max_granules", "seed",   "repeats",
    };
    return keys;
}

bool is_config_key(std::string_view key) {
    const auto& keys = config_keys();
    return key == "alpha" || std::find(keys.begin(), keys.end(), key) != keys.end();
}

void ExperimentConfig::set(std::string_view key, std::string_view raw) {
    const auto value = trim(raw);
    auto& base = params.base;
    auto& km = base.klmca;
    if (key == "dataset") {
        dataset = std::string(value);
    } else if (key == "has_header") {
        has_header = parse_bool(key, value);
    } else if (key == "label_column") {
        label_column = parse_int<int>(key, value);
    } else if (key == "normalize") {
        normalize = parse_bool(key, value);
    } else if (key == "pipeline") {
        pipeline = parse_pipeline(value);
    } else if (key == "sigma") {
        base.sigma = parse_auto_double(key, value);
    } else if (key == "sigma_percentile") {
        base.sigma_percentile = parse_double(key, value);
    } else if (key == "kernel_bandwidth") {
        base.kernel_bandwidth = parse_auto_double(key, value);
    } else if (key == "kernel_percentile") {
        base.kernel_percentile = parse_double(key, value);
    } else if (key == "w" || key == "alpha") {
        base.w = parse_double(key, value);
    } else if (key == "k") {
        base.k = parse_int<std::size_t>(key, value);
    } else if (key == "l") {
        base.l = parse_int<std::size_t>(key, value);
    } else if (key == "p") {
        km.p = value == "auto" ? 0 : parse_int<int>(key, value);
    } else if (key == "c") {
        km.c = parse_double(key, value);
    } else if (key == "lambda") {
        km.lambda = parse_double(key, value);
    } else if (key == "max_iters") {
        km.max_iters = parse_int<int>(key, value);
    } else if (key == "tol") {
        km.tol = parse_double(key, value);
    } else if (key == "class_threshold") {
        params.class_threshold = parse_int<std::size_t>(key, value);
    } else if (key == "max_depth") {
        params.max_depth = parse_int<int>(key, value);
    } else if (key == "class_quota") {
        params.class_quota = parse_bool(key, value);
    } else if (key == "alpha_lodog") {
        base.alpha_lodog = parse_double(key, value);
    } else if (key == "max_granules") {
        base.max_granules = value == "auto" ? std::nullopt
                                            : std::optional<std::size_t>(parse_int<std::size_t>(key, value));
    } else if (key == "seed") {
        seed = parse_int<std::uint64_t>(key, value);
        km.seed = seed;
    } else if (key == "repeats") {
        repeats = parse_int<std::size_t>(key, value);
    } else {
        throw config_error("unknown parameter '" + std::string(key) + "'");
    }
}

void ExperimentConfig::validate() const {
    if (dataset.empty()) {
        throw config_error("no dataset given");
    }
    if (repeats < 1) {
        throw config_error("repeats must be at least 1");
    }
    params.validate();
}

std::map<std::string, std::string> ExperimentConfig::effective() const {
    const auto& base = params.base;
    const auto& km = base.klmca;
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("auto"); };
    return {
        {"dataset", dataset.generic_string()},
        {"has_header", has_header ? "true" : "false"},
        {"label_column", std::to_string(label_column)},
        {"normalize", normalize ? "true" : "false"},
        {"pipeline", std::string(to_string(pipeline))},
        {"sigma", opt(base.sigma)},
        {"sigma_percentile", format_double(base.sigma_percentile)},
        {"kernel_bandwidth", opt(base.kernel_bandwidth)},
        {"kernel_percentile", format_double(base.kernel_percentile)},
        {"w", format_double(base.w)},
        {"k", std::to_string(base.k)},
        {"l", std::to_string(base.l)},
        {"p", km.p == 0 ? std::string("auto") : std::to_string(km.p)},
        {"c", format_double(km.c)},
        {"lambda", format_double(km.lambda)},
        {"max_iters", std::to_string(km.max_iters)},
        {"tol", format_double(km.tol)},
        {"class_threshold", std::to_string(params.class_threshold)},
        {"max_depth", std::to_string(params.max_depth)},
        {"class_quota", params.class_quota ? "true" : "false"},
        {"alpha_lodog", format_double(base.alpha_lodog)},
        {"max_granules", base.max_granules ? std::to_string(*base.max_granules) : std::string("auto")},
        {"seed", std::to_string(seed)},
        {"repeats", std::to_string(repeats)},
    };
}

void apply_config_text(ExperimentConfig& config, std::string_view text, const std::filesystem::path& base_dir) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        const auto line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            config.set(key, value);
        } catch (const config_error& e) {
            throw config_error("config line " + std::to_string(line_no) + ": " + e.what());
        }
        if (key == "dataset" && config.dataset.is_relative() && !base_dir.empty()) {
            config.dataset = (base_dir / config.dataset).lexically_normal();
        }
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    ExperimentConfig config;
    apply_config_text(config, text.str(), path.parent_path());
    return config;
}

Dataset load_experiment_data(const ExperimentConfig& config) {
    CsvSchema schema;
    schema.has_header = config.has_header;
    schema.label_column = config.label_column;
    auto ds = load_csv(config.dataset, schema);
    if (ds.class_count < 1) {
        throw data_error("dataset " + config.dataset.string() + " has no labeled samples to score against");
    }
    return config.normalize ? zscore_normalize(ds) : ds;
}

namespace {

std::vector<NodeIndex> random_labeled_set(std::size_t n, std::size_t l, std::uint64_t seed) {
    std::vector<NodeIndex> all(n);
    std::iota(all.begin(), all.end(), NodeIndex{0});
    std::mt19937_64 rng(seed);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::min(l, n));
    std::sort(all.begin(), all.end());
    return all;
}

/// Scores predictions for the unlabeled samples against the withheld truth.
void score(RunReport& run, const Dataset& truth, std::span<const NodeIndex> unlabeled,
           std::span<const ClassId> predictions) {
    std::vector<std::size_t> hits(static_cast<std::size_t>(truth.class_count), 0);
    std::vector<std::size_t> seen(static_cast<std::size_t>(truth.class_count), 0);
    std::size_t total_hits = 0;
    std::size_t total = 0;
    for (std::size_t q = 0; q < unlabeled.size(); ++q) {
        const auto& y = truth.labels[unlabeled[q]];
        if (!y) {
            continue;
        }
        ++total;
        ++seen[static_cast<std::size_t>(*y)];
        if (predictions[q] == *y) {
            ++total_hits;
            ++hits[static_cast<std::size_t>(*y)];
        }
    }
    run.accuracy = total == 0 ? 0.0 : 100.0 * static_cast<double>(total_hits) / static_cast<double>(total);
    run.per_class_accuracy.clear();
    for (std::size_t c = 0; c < seen.size(); ++c) {
        run.per_class_accuracy.push_back(
            seen[c] == 0 ? std::nullopt
                         : std::optional<double>(100.0 * static_cast<double>(hits[c]) / static_cast<double>(seen[c])));
    }
}

void fill_from_delala(RunReport& run, const DelalaResult& r, double w) {
    run.times = r.times;
    run.selected = r.selection.selected;
    run.selected_classes = r.selection.selected_labels;
    for (Role role : r.selection.roles) {
        run.roles.emplace_back(to_string(role));
    }
    run.objective = objective_value(r.selection, r.scores, w);
    run.xor_objective = xor_objective_value(r.selection, r.scores, w);
    run.granules = r.granulation.n_g;
    run.loss_history = r.model.loss_history;
}

std::vector<SubtreeReport> subtree_reports(const MetricTree& tree, const Dataset& truth) {
    std::vector<SubtreeReport> out;
    for (const auto& node : tree.nodes) {
        SubtreeReport s;
        s.id = node.id;
        s.depth = node.depth;
        s.size = node.members.size();
        s.local_classes = node.local_classes;
        s.labels_used = node.labeled.size();
        s.kind = std::string(to_string(node.kind));
        s.borrowed_from = node.borrowed_from;
        if (node.kind != LeafKind::recurse && !node.unlabeled.empty()) {
            RunReport scratch;
            score(scratch, truth, node.unlabeled, node.predictions);
            s.accuracy = scratch.accuracy;
        }
        out.push_back(std::move(s));
    }
    return out;
}

RunReport run_once(const ExperimentConfig& config, const Dataset& truth, const Dataset& hidden,
                   const DistanceMatrix& dist, double dist_ms, std::size_t repeat) {
    const auto oracle = dataset_oracle(truth);
    const int classes = truth.class_count;
    const auto& base = config.params.base;
    RunReport run;
    run.repeat = repeat;
    switch (config.pipeline) {
        case PipelineKind::delala: {
            const auto r = run_delala(hidden, dist, oracle, classes, base);
            fill_from_delala(run, r, base.w);
            score(run, truth, r.classification.unlabeled, r.classification.predictions);
            break;
        }
        case PipelineKind::multimetric: {
            const auto r = multi_metric_classify(hidden, dist, oracle, classes, config.params);
            if (r.flat) {
                fill_from_delala(run, *r.flat, base.w);
            } else {
                run.times = r.times;
                run.selected = r.classification.labeled;
                run.selected_classes = r.classification.labeled_classes;
                run.granules = r.granulation.n_g;
            }
            run.subtrees = subtree_reports(r.tree, truth);
            score(run, truth, r.classification.unlabeled, r.classification.predictions);
            break;
        }
        case PipelineKind::lapoleaf: {
            if (base.l > truth.size()) {
                throw infeasible_budget_error("label budget exceeds the sample count");
            }
            auto start = clock_type::now();
            const auto bw = resolve_bandwidths(dist, base);
            const auto cut = build_forest(dist, bw.sigma, base);
            run.times.forest_ms = elapsed_ms(start);
            run.granules = cut.granulation.n_g;
            start = clock_type::now();
            run.selected = random_labeled_set(truth.size(), base.l, config.seed + repeat);
            std::vector<Seed> seeds;
            for (NodeIndex i : run.selected) {
                const auto c = oracle(i);
                if (c) {
                    seeds.emplace_back(i, *c);
                    run.selected_classes.push_back(*c);
                }
            }
            run.times.selection_ms = elapsed_ms(start);
            start = clock_type::now();
            const auto prop = propagate(cut.forest, dist, classes, seeds);
            const auto unlabeled = complement(truth.size(), run.selected);
            std::vector<ClassId> predictions;
            for (NodeIndex i : unlabeled) {
                predictions.push_back(prop.predicted[i]);
            }
            run.times.inference_ms = elapsed_ms(start);
            score(run, truth, unlabeled, predictions);
            break;
        }
        case PipelineKind::random_baseline: {
            if (base.l > truth.size()) {
                throw infeasible_budget_error("label budget exceeds the sample count");
            }
            const auto labeled = random_labeled_set(truth.size(), base.l, config.seed + repeat);
            const auto r = run_with_labeled_set(hidden, dist, oracle, labeled, base);
            run.times = r.times;
            run.selected = r.classification.labeled;
            run.selected_classes = r.classification.labeled_classes;
            run.loss_history = r.model.loss_history;
            score(run, truth, r.classification.unlabeled, r.classification.predictions);
            break;
        }
    }
    run.times.forest_ms += dist_ms;
    return run;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const Dataset& data) {
    config.validate();
    ExperimentReport report;
    report.config = config.effective();
    report.dataset_name = data.name;
    report.pipeline = std::string(to_string(config.pipeline));
    report.samples = data.size();
    report.classes = data.class_count;
    report.class_names = data.class_names;

    const auto start = clock_type::now();
    const auto dist = pairwise_distances(data);
    const double dist_ms = elapsed_ms(start);
    // Pipelines see features only; labels are revealed one query at a time by the oracle.
    const Dataset hidden = data.without_labels();
    for (std::size_t r = 0; r < config.repeats; ++r) {
        report.runs.push_back(run_once(config, data, hidden, dist, dist_ms, r));
    }

    const double n = static_cast<double>(report.runs.size());
    double sum = 0.0;
    double time_sum = 0.0;
    for (const auto& run : report.runs) {
        sum += run.accuracy;
        time_sum += run.times.total_ms();
    }
    report.mean_accuracy = sum / n;
    report.mean_total_ms = time_sum / n;
    if (report.runs.size() > 1) {
        // Shifted by the first run so that identical accuracies give exactly 0.
        const double origin = report.runs.front().accuracy;
        double shift = 0.0;
        for (const auto& run : report.runs) {
            shift += run.accuracy - origin;
        }
        shift /= n;
        double ss = 0.0;
        for (const auto& run : report.runs) {
            const double d = run.accuracy - origin - shift;
            ss += d * d;
        }
        report.std_accuracy = std::sqrt(ss / (n - 1.0));
    }
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    return run_experiment(config, load_experiment_data(config));
}

SweepResult sweep(const ExperimentConfig& config, const Dataset& data, std::string_view parameter,
                  const std::vector<std::string>& values) {
    if (!is_config_key(parameter) || parameter == "dataset") {
        throw config_error("unknown sweep parameter '" + std::string(parameter) + "'");
    }
    if (values.empty()) {
        throw config_error("sweep needs at least one value");
    }
    SweepResult out;
    out.parameter = std::string(parameter);
    out.values = values;
    for (const auto& v : values) {
        ExperimentConfig c = config;
        c.set(parameter, v);
        out.reports.push_back(run_experiment(c, data));
    }
    return out;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
    out << "value,accuracy\n";
    for (std::size_t i = 0; i < result.values.size(); ++i) {
        out << result.values[i] << ',' << format_double(result.reports[i].mean_accuracy) << '\n';
    }
}

ReportFormat parse_format(std::string_view text) {
    if (text == "json") {
        return ReportFormat::json;
    }
    if (text == "csv") {
        return ReportFormat::csv;
    }
    if (text == "human") {
        return ReportFormat::human;
    }
    throw config_error("unknown report format '" + std::string(text) + "' (expected json, csv or human)");
}

namespace {

nlohmann::json times_to_json(const StageTimes& t) {
    return {{"forest_ms", t.forest_ms},
            {"selection_ms", t.selection_ms},
            {"training_ms", t.training_ms},
            {"inference_ms", t.inference_ms},
            {"total_ms", t.total_ms()}};
}

template <typename T>
nlohmann::json optional_to_json(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const nlohmann::json& j) {
    return j.is_null() ? std::nullopt : std::optional<T>(j.get<T>());
}

}  // namespace

nlohmann::json report_to_json(const ExperimentReport& report, bool canonical) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : report.runs) {
        nlohmann::json per_class = nlohmann::json::array();
        for (const auto& a : run.per_class_accuracy) {
            per_class.push_back(optional_to_json(a));
        }
        nlohmann::json subtrees = nlohmann::json::array();
        for (const auto& s : run.subtrees) {
            subtrees.push_back({{"id", s.id},
                                {"depth", s.depth},
                                {"size", s.size},
                                {"local_classes", s.local_classes},
                                {"labels_used", s.labels_used},
                                {"kind", s.kind},
                                {"borrowed_from", optional_to_json(s.borrowed_from)},
                                {"accuracy", optional_to_json(s.accuracy)}});
        }
        nlohmann::json j = {{"repeat", run.repeat},
                            {"accuracy", run.accuracy},
                            {"per_class_accuracy", per_class},
                            {"selected", run.selected},
                            {"selected_classes", run.selected_classes},
                            {"roles", run.roles},
                            {"objective", optional_to_json(run.objective)},
                            {"xor_objective", optional_to_json(run.xor_objective)},
                            {"granules", run.granules},
                            {"loss_history", run.loss_history},
                            {"subtrees", subtrees}};
        if (!canonical) {
            j["times"] = times_to_json(run.times);
        }
        runs.push_back(std::move(j));
    }
    nlohmann::json summary = {{"mean_accuracy", report.mean_accuracy}, {"std_accuracy", report.std_accuracy}};
    if (!canonical) {
        summary["mean_total_ms"] = report.mean_total_ms;
    }
    return {{"config", report.config},
            {"dataset", report.dataset_name},
            {"pipeline", report.pipeline},
            {"samples", report.samples},
            {"classes", report.classes},
            {"class_names", report.class_names},
            {"summary", summary},
            {"runs", runs}};
}

ExperimentReport report_from_json(const nlohmann::json& j) {
    try {
        ExperimentReport r;
        r.config = j.at("config").get<std::map<std::string, std::string>>();
        r.dataset_name = j.at("dataset").get<std::string>();
        r.pipeline = j.at("pipeline").get<std::string>();
        r.samples = j.at("samples").get<std::size_t>();
        r.classes = j.at("classes").get<int>();
        r.class_names = j.at("class_names").get<std::vector<std::string>>();
        const auto& summary = j.at("summary");
        r.mean_accuracy = summary.at("mean_accuracy").get<double>();
        r.std_accuracy = summary.at("std_accuracy").get<double>();
        r.mean_total_ms = summary.value("mean_total_ms", 0.0);
        for (const auto& jr : j.at("runs")) {
            RunReport run;
            run.repeat = jr.at("repeat").get<std::size_t>();
            run.accuracy = jr.at("accuracy").get<double>();
            for (const auto& a : jr.at("per_class_accuracy")) {
                run.per_class_accuracy.push_back(optional_from_json<double>(a));
            }
            run.selected = jr.at("selected").get<std::vector<NodeIndex>>();
            run.selected_classes = jr.at("selected_classes").get<std::vector<ClassId>>();
            run.roles = jr.at("roles").get<std::vector<std::string>>();
            run.objective = optional_from_json<double>(jr.at("objective"));
            run.xor_objective = optional_from_json<double>(jr.at("xor_objective"));
            run.granules = jr.at("granules").get<std::size_t>();
            run.loss_history = jr.at("loss_history").get<std::vector<double>>();
            for (const auto& js : jr.at("subtrees")) {
                SubtreeReport s;
                s.id = js.at("id").get<std::size_t>();
                s.depth = js.at("depth").get<int>();
                s.size = js.at("size").get<std::size_t>();
                s.local_classes = js.at("local_classes").get<int>();
                s.labels_used = js.at("labels_used").get<std::size_t>();
                s.kind = js.at("kind").get<std::string>();
                s.borrowed_from = optional_from_json<std::size_t>(js.at("borrowed_from"));
                s.accuracy = optional_from_json<double>(js.at("accuracy"));
                run.subtrees.push_back(std::move(s));
            }
            if (jr.contains("times")) {
                const auto& t = jr.at("times");
                run.times.forest_ms = t.at("forest_ms").get<double>();
                run.times.selection_ms = t.at("selection_ms").get<double>();
                run.times.training_ms = t.at("training_ms").get<double>();
                run.times.inference_ms = t.at("inference_ms").get<double>();
            }
            r.runs.push_back(std::move(run));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("malformed report: ") + e.what());
    }
}

void emit_report(const ExperimentReport& report, ReportFormat format, std::ostream& out, bool canonical) {
    switch (format) {
        case ReportFormat::json:
            out << report_to_json(report, canonical).dump(2) << '\n';
            break;
        case ReportFormat::csv:
            out << report_csv_header << '\n';
            for (const auto& run : report.runs) {
                const auto& t = run.times;
                out << report.dataset_name << ',' << report.pipeline << ',' << run.repeat << ','
                    << format_double(run.accuracy) << ',' << run.selected.size() << ',' << run.granules << ','
                    << format_double(t.forest_ms) << ',' << format_double(t.selection_ms) << ','
                    << format_double(t.training_ms) << ',' << format_double(t.inference_ms) << ','
                    << format_double(t.total_ms()) << '\n';
            }
            break;
        case ReportFormat::human: {
            out << "dataset " << report.dataset_name << " (" << report.samples << " samples, " << report.classes
                << " classes), pipeline " << report.pipeline << '\n';
            out << std::left << std::setw(8) << "repeat" << std::right << std::setw(10) << "accuracy"
                << std::setw(8) << "labels" << std::setw(12) << "forest_ms" << std::setw(14) << "selection_ms"
                << std::setw(13) << "training_ms" << std::setw(14) << "inference_ms" << '\n';
            out << std::fixed;
            for (const auto& run : report.runs) {
                const auto& t = run.times;
                out << std::left << std::setw(8) << run.repeat << std::right << std::setprecision(2)
                    << std::setw(10) << run.accuracy << std::setw(8) << run.selected.size() << std::setprecision(3)
                    << std::setw(12) << t.forest_ms << std::setw(14) << t.selection_ms << std::setw(13)
                    << t.training_ms << std::setw(14) << t.inference_ms << '\n';
            }
            out << std::setprecision(2) << "accuracy " << report.mean_accuracy << " +/- " << report.std_accuracy
                << " over " << report.runs.size() << " run(s)\n";
            if (!report.runs.empty()) {
                out << "per-class accuracy (run 0):\n";
                const auto& per_class = report.runs.front().per_class_accuracy;
                for (std::size_t c = 0; c < per_class.size(); ++c) {
                    const auto& name = c < report.class_names.size() ? report.class_names[c] : std::to_string(c);
                    out << "  " << std::left << std::setw(16) << name << std::right;
                    if (per_class[c]) {
                        out << std::setw(8) << *per_class[c] << '\n';
                    } else {
                        out << std::setw(8) << "-" << '\n';
                    }
                }
            }
            out << std::defaultfloat;
            break;
        }
    }
}

void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path,
                 bool canonical) {
    if (path.empty() || path == "-") {
        emit_report(report, format, std::cout, canonical);
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot write report to " + path.string());
    }
    emit_report(report, format, out, canonical);
    if (!out) {
        throw data_error("failed writing report to " + path.string());
    }
}

}  // namespace delala
