#pragma once

#include "delala/dataset.hpp"
#include "delala/multimetric.hpp"
#include "delala/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace delala {

enum class PipelineKind { delala, multimetric, lapoleaf, random_baseline };

[[nodiscard]] std::string_view to_string(PipelineKind kind);
[[nodiscard]] PipelineKind parse_pipeline(std::string_view text);

/**
 * Everything needed to reproduce one experiment. Every field is reachable
 * through `set` with the key names listed by `config_keys()`, which is how
 * both config files and command-line flags populate it.
 */
struct ExperimentConfig {
    std::filesystem::path dataset;
    bool has_header = true;
    int label_column = -1;
    bool normalize = true;
    PipelineKind pipeline = PipelineKind::delala;
    MultiMetricParams params;  // params.base holds the flat-pipeline parameters
    std::uint64_t seed = 42;
    std::size_t repeats = 1;

    /// Assigns one field from its textual value; throws config_error on an unknown key or bad value.
    void set(std::string_view key, std::string_view value);
    /// Checks ranges that single-field parsing cannot see.
    void validate() const;
    /// Effective values of every key, formatted so that `set` reproduces them.
    [[nodiscard]] std::map<std::string, std::string> effective() const;
};

[[nodiscard]] const std::vector<std::string>& config_keys();
[[nodiscard]] bool is_config_key(std::string_view key);

/**
 * Parses `key = value` lines. Blank lines and lines starting with '#' are
 * ignored. A relative `dataset` path is resolved against `base_dir`.
 */
void apply_config_text(ExperimentConfig& config, std::string_view text, const std::filesystem::path& base_dir = {});
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Loads the dataset named by the config, z-scored when `normalize` is set.
[[nodiscard]] Dataset load_experiment_data(const ExperimentConfig& config);

struct SubtreeReport {
    std::size_t id = 0;
    int depth = 0;
    std::size_t size = 0;
    int local_classes = 0;
    std::size_t labels_used = 0;
    std::string kind;
    std::optional<std::size_t> borrowed_from;
    std::optional<double> accuracy;  // over the subtree's unlabeled members; absent if there are none
};

struct RunReport {
    std::size_t repeat = 0;
    double accuracy = 0.0;  // percent, over the unlabeled samples
    std::vector<std::optional<double>> per_class_accuracy;  // percent; absent if a class has no unlabeled sample
    StageTimes times;
    std::vector<NodeIndex> selected;
    std::vector<ClassId> selected_classes;
    std::vector<std::string> roles;  // deterministic selection only
    std::optional<double> objective;      // alpha-weighted central/divergent objective
    std::optional<double> xor_objective;  // its continuous-XOR form
    std::size_t granules = 0;
    std::vector<double> loss_history;
    std::vector<SubtreeReport> subtrees;
};

struct ExperimentReport {
    std::map<std::string, std::string> config;
    std::string dataset_name;
    std::string pipeline;
    std::size_t samples = 0;
    int classes = 0;
    std::vector<std::string> class_names;
    std::vector<RunReport> runs;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // sample standard deviation; 0 for a single run
    double mean_total_ms = 0.0;
};

/// Runs the configured pipeline `repeats` times on an already loaded dataset.
[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& config, const Dataset& data);
[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& config);

struct SweepResult {
    std::string parameter;
    std::vector<std::string> values;
    std::vector<ExperimentReport> reports;
};

/// One experiment per value of `parameter`; throws config_error for unknown names.
[[nodiscard]] SweepResult sweep(const ExperimentConfig& config, const Dataset& data, std::string_view parameter,
                                const std::vector<std::string>& values);
/// "value,accuracy" table of mean accuracies.
void write_sweep_csv(const SweepResult& result, std::ostream& out);

enum class ReportFormat { json, csv, human };

[[nodiscard]] ReportFormat parse_format(std::string_view text);

/// Canonical JSON leaves out every timing so that deterministic runs compare byte for byte.
[[nodiscard]] nlohmann::json report_to_json(const ExperimentReport& report, bool canonical = false);
[[nodiscard]] ExperimentReport report_from_json(const nlohmann::json& j);

/// Header of the CSV format, one row per run.
inline constexpr std::string_view report_csv_header =
    "dataset,pipeline,repeat,accuracy,labeled,granules,forest_ms,selection_ms,training_ms,inference_ms,total_ms";

void emit_report(const ExperimentReport& report, ReportFormat format, std::ostream& out, bool canonical = false);
/// Writes to `path`, or to stdout when `path` is empty or "-".
void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path,
                 bool canonical = false);

}  // namespace delala
