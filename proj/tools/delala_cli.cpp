// Command-line front end: run, sweep, inspect-forest and select.

#include "delala/errors.hpp"
#include "delala/experiment.hpp"
#include "delala/labeling.hpp"
#include "delala/leading_forest.hpp"
#include "delala/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_data = 3;
constexpr int exit_training = 4;

/// Options shared by every verb: a config file plus one flag per config key.
struct CommonOptions {
    std::string config_file;
    std::map<std::string, std::string> overrides;
};

std::string flag_name(const std::string& key) {
    std::string out = key;
    std::replace(out.begin(), out.end(), '_', '-');
    return "--" + out;
}

void add_common(CLI::App* app, CommonOptions& opts) {
    app->add_option("--config", opts.config_file, "key = value config file supplying defaults");
    for (const auto& key : delala::config_keys()) {
        app->add_option_function<std::string>(
            flag_name(key), [&opts, key](const std::string& v) { opts.overrides[key] = v; },
            "overrides '" + key + "' from the config file");
    }
}

delala::ExperimentConfig resolve_config(const CommonOptions& opts) {
    delala::ExperimentConfig config;
    if (!opts.config_file.empty()) {
        config = delala::load_config(opts.config_file);
    }
    for (const auto& [key, value] : opts.overrides) {
        config.set(key, value);
    }
    config.validate();
    return config;
}

std::ostream& open_output(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
    if (path.empty() || path == "-") {
        return std::cout;
    }
    holder = std::make_unique<std::ofstream>(path);
    if (!*holder) {
        throw delala::data_error("cannot write to " + path);
    }
    return *holder;
}

int run_verb(const CommonOptions& opts, const std::string& format, const std::string& output, bool canonical) {
    const auto config = resolve_config(opts);
    const auto report = delala::run_experiment(config);
    delala::emit_report(report, delala::parse_format(format), std::filesystem::path(output), canonical);
    return exit_ok;
}

int sweep_verb(const CommonOptions& opts, const std::string& param, const std::vector<std::string>& values,
               const std::string& format, const std::string& output, const std::string& csv_path, bool canonical) {
    const auto config = resolve_config(opts);
    const auto data = delala::load_experiment_data(config);
    const auto result = delala::sweep(config, data, param, values);
    const auto fmt = delala::parse_format(format);
    std::unique_ptr<std::ofstream> holder;
    auto& out = open_output(output, holder);
    if (fmt == delala::ReportFormat::json) {
        nlohmann::json j = {{"parameter", result.parameter}, {"values", result.values}};
        j["reports"] = nlohmann::json::array();
        for (const auto& r : result.reports) {
            j["reports"].push_back(delala::report_to_json(r, canonical));
        }
        out << j.dump(2) << '\n';
    } else {
        for (std::size_t i = 0; i < result.reports.size(); ++i) {
            if (fmt == delala::ReportFormat::human) {
                out << result.parameter << " = " << result.values[i] << '\n';
            }
            delala::emit_report(result.reports[i], fmt, out, canonical);
        }
    }
    if (!csv_path.empty()) {
        std::unique_ptr<std::ofstream> csv_holder;
        delala::write_sweep_csv(result, open_output(csv_path, csv_holder));
    } else if (fmt == delala::ReportFormat::human) {
        delala::write_sweep_csv(result, out);
    }
    return exit_ok;
}

int inspect_verb(const CommonOptions& opts, const std::string& output) {
    const auto config = resolve_config(opts);
    const auto data = delala::load_experiment_data(config);
    const auto dist = delala::pairwise_distances(data);
    const auto bw = delala::resolve_bandwidths(dist, config.params.base);
    const auto cut = delala::build_forest(dist, bw.sigma, config.params.base);
    std::unique_ptr<std::ofstream> holder;
    delala::write_edge_list(cut.forest, open_output(output, holder));
    std::cerr << "sigma " << bw.sigma << ", " << cut.granulation.n_g << " granule(s)\n";
    return exit_ok;
}

int select_verb(const CommonOptions& opts, const std::string& output) {
    const auto config = resolve_config(opts);
    const auto data = delala::load_experiment_data(config);
    const auto dist = delala::pairwise_distances(data);
    const auto& base = config.params.base;
    const auto bw = delala::resolve_bandwidths(dist, base);
    const auto cut = delala::build_forest(dist, bw.sigma, base);
    const auto scores = delala::selection_scores(cut.forest, base.w);
    const auto sel = delala::select_labeled(delala::dataset_oracle(data), data.class_count, scores, base.l, base.k);
    std::unique_ptr<std::ofstream> holder;
    auto& out = open_output(output, holder);
    out << "rank,index,class,role\n";
    for (std::size_t s = 0; s < sel.selected.size(); ++s) {
        out << s << ',' << sel.selected[s] << ','
            << data.class_names[static_cast<std::size_t>(sel.selected_labels[s])] << ','
            << delala::to_string(sel.roles[s]) << '\n';
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic labeling and metric learning over optimal leading forests"};
    app.require_subcommand(1);

    std::string format = "human";
    std::string output;
    bool canonical = false;

    CommonOptions run_opts;
    auto* run = app.add_subcommand("run", "run the configured pipeline and print a report");
    add_common(run, run_opts);
    run->add_option("--format", format, "json, csv or human")->capture_default_str();
    run->add_option("--output,-o", output, "report path; stdout when omitted");
    run->add_flag("--canonical", canonical, "leave timings out of JSON reports");

    CommonOptions sweep_opts;
    std::string param;
    std::vector<std::string> values;
    std::string csv_path;
    auto* sweep = app.add_subcommand("sweep", "run once per value of one parameter");
    add_common(sweep, sweep_opts);
    sweep->add_option("--param", param, "parameter to vary")->required();
    sweep->add_option("--values", values, "comma-separated grid")->required()->delimiter(',');
    sweep->add_option("--format", format, "json, csv or human")->capture_default_str();
    sweep->add_option("--output,-o", output, "report path; stdout when omitted");
    sweep->add_option("--csv", csv_path, "path of the value,accuracy table");
    sweep->add_flag("--canonical", canonical, "leave timings out of JSON reports");

    CommonOptions inspect_opts;
    auto* inspect = app.add_subcommand("inspect-forest", "write the optimal leading forest as an edge list");
    add_common(inspect, inspect_opts);
    inspect->add_option("--output,-o", output, "edge list path; stdout when omitted");

    CommonOptions select_opts;
    auto* select = app.add_subcommand("select", "rank and pick the samples to annotate");
    add_common(select, select_opts);
    select->add_option("--output,-o", output, "selection path; stdout when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (run->parsed()) {
            return run_verb(run_opts, format, output, canonical);
        }
        if (sweep->parsed()) {
            return sweep_verb(sweep_opts, param, values, format, output, csv_path, canonical);
        }
        if (inspect->parsed()) {
            return inspect_verb(inspect_opts, output);
        }
        return select_verb(select_opts, output);
    } catch (const delala::config_error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const delala::data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const delala::training_error& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return exit_training;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
