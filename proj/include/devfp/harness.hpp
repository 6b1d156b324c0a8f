#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "devfp/fingerprint.hpp"

namespace devfp {

inline constexpr const char* kExperiments[] = {"closed-world", "temp-sweep",    "k-sweep",   "holdout",
                                               "batch-gen",    "temp-transfer", "mitigation"};

struct SuiteParams {
    SuiteCounts counts;
    uint64_t seed = 7;
    GenOptions gen;
    std::string path;  // load a JSONL suite instead of generating one
};

struct ExperimentSpec {
    std::string experiment = "closed-world";
    std::string name;
    uint64_t model_seed = 42;
    uint64_t seed = 1;  // run seed
    int runs = 20;
    SuiteParams suite;
    std::vector<double> temperatures;  // empty = experiment default
    int l = 32;
    int k = 20;
    std::vector<int> k_values = {1, 2, 5, 10, 20, 50};
    int batch_size = 64;
    std::vector<int> train_batches = {32, 64, 128};
    int test_batch = 256;
    Axis holdout_axis = Axis::Hardware;
    std::vector<std::string> holdout_labels;  // empty = every label of the axis
    std::vector<double> sigmas = {0.0, 1.0, 4.0, 16.0};
    ForestParams forest;
    int threads = 0;  // 0 = default_threads()

    void validate() const;
    void apply_paper_scale();
    // DEVFP_SEED, when set, replaces the run seed and the suite seed.
    void apply_env();
    std::vector<double> temperatures_or_default() const;

    nlohmann::json to_json() const;
    static ExperimentSpec from_json(const nlohmann::json& j);
    static ExperimentSpec load(const std::string& path);
};

// CSV row; one per (condition, axis, run), runs in order.
struct ReportRow {
    std::string experiment;
    uint64_t model_seed = 0;
    std::string condition;
    std::string axis;
    double accuracy = 0.0;
    int n_correct = 0;
    int n_total = 0;

    bool operator==(const ReportRow&) const = default;
};

struct SummaryRow {
    std::string condition;
    double x = 0.0;  // numeric position for plotting
    std::string axis;
    int runs = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct AccuracyReport {
    std::string experiment;
    uint64_t model_seed = 0;
    std::vector<ReportRow> rows;
    std::vector<std::pair<std::string, double>> conditions;  // label, x; in report order
    nlohmann::json extra = nlohmann::json::object();
    double runtime_s = 0.0;
    int threads = 1;

    void add(const std::string& condition, const std::string& axis, int n_correct, int n_total);
    std::vector<SummaryRow> summary() const;
    // Mean over runs for one (condition, axis); throws if absent.
    double mean(const std::string& condition, const std::string& axis) const;

    std::string to_csv() const;
    static std::vector<ReportRow> parse_csv(const std::string& text);
    nlohmann::json to_json() const;
    std::string plot_table() const;
    // <dir>/<experiment>.csv, <dir>/<experiment>.json, <dir>/plots/<experiment>.dat
    void write(const std::string& dir) const;
};

// Suite plus the instantiated zoo, shared by experiments.
struct Bench {
    PromptSuite suite;
    std::vector<SystemConfig> configs;
    std::vector<SimulatedSystem> systems;
    int threads = 1;

    static Bench make(const ExperimentSpec& spec, const PromptSuite* suite = nullptr);
};

PromptSuite make_suite(const ExperimentSpec& spec);

uint64_t run_seed(const ExperimentSpec& spec, int run);

AccuracyReport run_closed_world(const ExperimentSpec& spec, const Bench& bench);
AccuracyReport run_temperature_sweep(const ExperimentSpec& spec, const Bench& bench);
AccuracyReport run_k_sweep(const ExperimentSpec& spec, const Bench& bench);
AccuracyReport run_holdout_component(const ExperimentSpec& spec, const Bench& bench);
AccuracyReport run_batch_generalization(const ExperimentSpec& spec, const Bench& bench);
AccuracyReport run_temperature_transfer(const ExperimentSpec& spec, const Bench& bench);
AccuracyReport run_mitigation(const ExperimentSpec& spec, const Bench& bench);

AccuracyReport run_experiment(const ExperimentSpec& spec, const Bench& bench);
AccuracyReport run_experiment(const ExperimentSpec& spec);

std::string format_number(double v);

}  // namespace devfp
