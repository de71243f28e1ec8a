#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "deepcv/config.hpp"
#include "deepcv/evaluation.hpp"
#include "deepcv/solvers.hpp"

namespace deepcv {

std::string library_version();

/// Seed, config hash and library version stamped into every output.
struct Reproducibility {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version;

  static Reproducibility of(const ExperimentConfig& config);
  nlohmann::json to_json() const;
  /// Trailing comment line for CSV files: `# seed=...,config_hash=...,version=...`.
  std::string csv_comment() const;
};

struct RunOptions {
  /// Overrides config.output.
  std::optional<std::filesystem::path> output;
  /// Model directory or manifest; defaults to `<output>/model`.
  std::optional<std::filesystem::path> model;
  /// Use the closed-form exchange delta instead of a trained model.
  bool exact_margrabe = false;
  std::optional<double> lambda;
  /// Progress lines; null for silence.
  std::ostream* log = nullptr;
};

struct TrainRun {
  TrainResult result;
  std::filesystem::path model_dir;
  std::filesystem::path loss_csv;
  std::filesystem::path summary;
};

/// Trains the configured algorithm and writes `model/`, `loss.csv` and `train_summary.json`.
TrainRun run_train(const ExperimentConfig& config, const RunOptions& options = {});

struct EvaluateRun {
  EvaluationReport report;
  std::vector<SweepRow> sweep;
  std::filesystem::path report_json;
  std::filesystem::path report_csv;
  std::optional<std::filesystem::path> sweep_csv;
};

/// Loads (or builds, with exact_margrabe) a control variate and writes `report.json`,
/// `report.csv` and, when the config lists volatilities, `sweep.csv`.
/// Throws ConfigError naming both dimensions when the model and config disagree on d.
EvaluateRun run_evaluate(const ExperimentConfig& config, const RunOptions& options = {});

struct PriceRow {
  std::size_t samples = 0;
  double plain_l2 = 0.0;
  double cv_l2 = 0.0;
  std::optional<double> direct_l2;
  /// Variance of the n-sample estimators across repetitions.
  double plain_variance = 0.0;
  double cv_variance = 0.0;
  double cv_mean = 0.0;
};

struct PriceRun {
  double reference = 0.0;
  std::string reference_kind;  // "analytic" or "monte-carlo"
  double price = 0.0;
  Interval price_ci;
  std::optional<double> direct;
  std::vector<PriceRow> rows;
  std::filesystem::path table_csv;
  std::filesystem::path summary;
};

/// L2 errors of plain Monte Carlo, the control-variate estimator and the direct value
/// readout at t0 against the reference price, for each configured sample count.
PriceRun run_price(const ExperimentConfig& config, const RunOptions& options = {});

struct DiagnosticsRow {
  int layers = 0;
  int width = 0;
  std::size_t repetition = 0;
  double l2_error_value = 0.0;
  double l2_error_gradient = 0.0;
};

struct DiagnosticsCell {
  int layers = 0;
  int width = 0;
  double value_mean = 0.0;
  Interval value_ci;
  double gradient_mean = 0.0;
  Interval gradient_ci;
};

struct DiagnosticsRun {
  std::vector<DiagnosticsRow> rows;
  std::vector<DiagnosticsCell> cells;
  std::filesystem::path table_csv;
  std::filesystem::path summary;

  const DiagnosticsCell& cell(int layers, int width) const;
};

/// Errors at t0 of a trained joint time-input solver against the exchange value and delta.
struct FitErrors {
  double value = 0.0;
  double gradient = 0.0;
};
FitErrors margrabe_fit_errors(const ControlVariateModel& cv, const MarketModel& model, const InitialSampler& init,
                              std::size_t samples, const RandomStream& stream);

/// Trains the joint solver per grid cell and repetition on the exchange option with the
/// diagnostics horizon. Refuses payoffs without a closed-form benchmark.
DiagnosticsRun run_diagnostics(const ExperimentConfig& config, const RunOptions& options = {});

/// Mean and t-based 95% interval of a small sample (degenerate interval for one value).
Interval mean_interval(const std::vector<double>& values, double* mean = nullptr);

}  // namespace deepcv
