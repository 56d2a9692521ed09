#pragma once

#include "warlab/data.hpp"
#include "warlab/metrics.hpp"
#include "warlab/nn.hpp"
#include "warlab/spec_file.hpp"
#include "warlab/train.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace warlab {

// ---------------------------------------------------------------------------
// Trajectory CSV

inline constexpr std::array<std::string_view, 11> kTrajectoryColumns = {
    "epoch",        "lr",           "lambda",        "l_nat",       "l_rob",        "natural_acc",
    "stability",    "robust_acc",   "attacked_acc",  "lipschitz_est", "wall_clock_s"};

struct TrajectoryRow {
    std::size_t epoch = 0;
    double lr = 0.0;
    double lambda = 0.0;
    double l_nat = 0.0;
    double l_rob = 0.0;
    double natural_acc = 0.0;
    double stability = 0.0;
    double robust_acc = 0.0;
    double attacked_acc = 0.0;
    double lipschitz_est = 0.0;
    double wall_clock_s = 0.0;

    bool operator==(const TrajectoryRow&) const = default;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

std::string trajectory_header();
std::string format_trajectory_row(const TrajectoryRow& row);

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryRow>& rows);
/// Throws FormatError when the header differs from kTrajectoryColumns or a
/// row is malformed.
std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path);

/// Index of the row with the highest robust accuracy; ties go to the earliest.
std::size_t select_peak(const std::vector<TrajectoryRow>& rows);

// ---------------------------------------------------------------------------
// Single runs

struct LoadedData {
    Dataset train;
    Dataset eval;
};

LoadedData load_data(const DatasetSpec& spec);

struct RunRequest {
    std::size_t width = 0;
    double lambda = 0.0;  // initial lambda when war is set
    std::uint64_t seed = 0;
    std::optional<double> war_zeta;
};

/// Fully resolved single-run spec, itself a valid `train` spec.
nlohmann::json run_spec_json(const ExperimentSpec& spec, const RunRequest& request);

/// 16 hex digits of FNV-1a over the run spec with output_dir removed.
std::string run_id(const nlohmann::json& run_spec);

struct RunResult {
    std::string run_id;
    std::filesystem::path directory;
    RunRequest request;
    std::vector<TrajectoryRow> trajectory;
    std::size_t peak = 0;
    std::optional<WarState> final_war;
    double wall_clock_s = 0.0;  // measured always, written only with record_timing

    const TrajectoryRow& peak_row() const { return trajectory.at(peak); }
};

struct RunOptions {
    std::ostream* log = nullptr;
};

/// Trains one configuration, writing spec_resolved.json, trajectory.csv
/// (flushed per epoch), checkpoint.bin and summary.json under
/// <output_dir>/<run_id>/.
RunResult run_training(const ExperimentSpec& spec, const LoadedData& data,
                       const RunRequest& request, const RunOptions& options = {});

nlohmann::json run_summary_json(const RunResult& result);

// ---------------------------------------------------------------------------
// Width / lambda sweep

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single value
};

Aggregate aggregate(const std::vector<double>& values);

inline constexpr std::array<std::string_view, 17> kSummaryColumns = {
    "width",           "lambda",          "n_seeds",          "peak_epoch_mean",
    "peak_epoch_std",  "natural_acc_mean", "natural_acc_std", "stability_mean",
    "stability_std",   "robust_acc_mean", "robust_acc_std",   "attacked_acc_mean",
    "attacked_acc_std", "lipschitz_est_mean", "lipschitz_est_std", "final_lambda_mean",
    "final_lambda_std"};

struct SweepCell {
    std::size_t width = 0;
    double lambda = 0.0;
    std::size_t n_seeds = 0;
    Aggregate peak_epoch;
    Aggregate natural_acc;
    Aggregate stability;
    Aggregate robust_acc;
    Aggregate attacked_acc;
    Aggregate lipschitz_est;
    Aggregate final_lambda;
};

struct SweepReport {
    std::vector<SweepCell> cells;  // width-major, then lambda, in spec order
    std::vector<RunResult> runs;

    const SweepCell& cell(std::size_t width, double lambda) const;
};

SweepCell summarize_cell(std::size_t width, double lambda, const std::vector<const RunResult*>& runs);

/// Every (width, lambda, seed) run, then summary.csv and summary.json in the
/// output directory.
SweepReport run_sweep(const ExperimentSpec& spec, const RunOptions& options = {});

void write_sweep_summary(const std::filesystem::path& dir, const std::string& name,
                         const SweepReport& report);

// ---------------------------------------------------------------------------
// Gradient-norm scaling probe

struct NtkProbeWidth {
    std::size_t width = 0;
    std::vector<double> per_seed;  // mean estimate over inputs, one per seed
    double mean = 0.0;
    double std = 0.0;
    std::size_t zero_estimates = 0;
};

struct NtkProbeReport {
    std::vector<NtkProbeWidth> widths;
    double slope = 0.0;  // least-squares slope of log(mean) against log(width)
    double rank_correlation = 0.0;
    bool strictly_increasing = false;
    bool degenerate = false;  // some estimate was exactly zero
};

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);
double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y);

NtkProbeReport run_ntk_probe(const NtkProbeSpec& probe, const std::vector<std::uint64_t>& seeds,
                             const RunOptions& options = {});
nlohmann::json to_json(const NtkProbeReport& report);
void write_ntk_probe(const std::filesystem::path& dir, const NtkProbeReport& report);

// ---------------------------------------------------------------------------
// WAR comparison

struct StrategyResult {
    std::string strategy;  // "no_tuning", "manual_grid" or "war"
    double lambda = 0.0;   // lambda used, manual best, or mean final WAR lambda
    Aggregate natural_acc;
    Aggregate stability;
    Aggregate robust_acc;
    /// Mean of l_nat / l_rob over the last zeta_window epochs.
    Aggregate final_ratio;
    double wall_clock_s = 0.0;
};

struct WarCompareReport {
    std::vector<SweepCell> thin_cells;
    double lambda_star = 0.0;
    double zeta = 0.0;
    std::vector<SweepCell> wide_cells;
    std::vector<StrategyResult> strategies;

    const StrategyResult& strategy(const std::string& name) const;
};

WarCompareReport run_war_compare(const ExperimentSpec& spec, const RunOptions& options = {});
nlohmann::json to_json(const WarCompareReport& report);
void write_war_compare(const std::filesystem::path& dir, const WarCompareReport& report);

// ---------------------------------------------------------------------------

nlohmann::json to_json(const EvalRecord& record);

/// Writes to a sibling temp file, then renames over `path`.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// JSON text with a trailing newline, keys in sorted order.
std::string dump_json(const nlohmann::json& json);

}  // namespace warlab
