#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gcdro/cli/config.hpp"
#include "gcdro/eval.hpp"
#include "gcdro/trainer.hpp"

namespace gcdro::cli {

/// Datasets of one experiment. `train` carries the training partition in its
/// group field; `valid` and `test` carry their clean partitions.
struct ExperimentData {
    Dataset train;
    GroupLayout train_layout;
    Partition train_clean;
    Dataset valid;
    Dataset test;
};

ExperimentData prepare_data(const ExperimentConfig& config);

struct RunResult {
    Method method = Method::erm;
    std::uint64_t seed = 0;
    std::string config_hash;
    RunRecord record;
    int best_epoch = 0;
    GroupMetrics best_valid;
    GroupMetrics test; // best checkpoint on the test split
    Heatmap heatmap;
    std::string dir; // empty when nothing was written
};

/// Trains `method` with `seed` and, when `root` is non-empty, writes the run
/// directory {root}/{config_hash}/{seed}/.
RunResult run_one(const ExperimentConfig& config, const ExperimentData& data, Method method, std::uint64_t seed,
                  const std::string& root);

struct Stats {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation, 0 for a single value
};

Stats mean_std(std::span<const double> values);

struct SummaryRow {
    std::string config_hash;
    std::string method;
    std::size_t runs = 0;
    Stats test_robust, test_average, valid_robust, valid_average;
};

/// Rows in first-appearance order of (config_hash, method).
std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string summary_table(const std::vector<SummaryRow>& rows);

/// Writes train/valid/test files plus partitions.json and manifest.json under
/// {root}/data. Returns the list of written paths.
std::vector<std::string> generate(const ExperimentConfig& config, const std::string& root);

/// Runs every (method, seed) cell of the sweep, up to sweep.workers at once,
/// and writes summary.json / summary.csv under the output root.
std::vector<RunResult> sweep(const ExperimentConfig& config, std::ostream& log);

/// Collects every run below `dir` and writes report_runs.csv,
/// report_summary.csv and report_heatmaps.csv there. Throws Io when no run is
/// found.
std::vector<SummaryRow> report(const std::string& dir, std::ostream& out);

/// Process exit code for an error: 2 config, 3 runtime, 4 I/O.
int exit_code_for(const Error& error);

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gcdro::cli
