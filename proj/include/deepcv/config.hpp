#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "deepcv/market.hpp"
#include "deepcv/solvers.hpp"

namespace deepcv {

struct EvaluationSpec {
  std::size_t n_mc = 10;
  std::size_t n_in = 100000;
  InitialSampler initial;
  std::vector<double> sigma_sweep;
  /// Sample counts for the price comparison table.
  std::vector<std::size_t> price_samples = {10, 100, 1000, 10000};
  /// Independent repetitions per sample count in the price comparison.
  std::size_t price_repetitions = 20;
};

struct DiagnosticsGridSpec {
  std::vector<int> hidden_layers = {1, 2, 3};
  std::vector<int> widths = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  std::size_t repetitions = 4;
  double epsilon = 5e-6;
  double horizon = 1.0 / 365.0;
  /// Inputs drawn from the training law to measure the L2 errors at t0.
  std::size_t error_samples = 10000;

  /// Throws ConfigError on an empty grid or zero repetitions.
  void validate() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  // market
  std::size_t dim = 2;
  double rate = 0.05;
  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(2, 0.3);
  Eigen::MatrixXd correlation = Eigen::MatrixXd::Identity(2, 2);
  // payoff and grid
  PayoffKind payoff = PayoffKind::Exchange;
  double strike = 0.0;
  double maturity = 0.5;
  std::size_t steps = 50;
  // training
  int algorithm = 4;
  TrainConfig train;
  // evaluation and diagnostics
  EvaluationSpec evaluation;
  DiagnosticsGridSpec diagnostics;
  std::filesystem::path output = "out";
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  MarketModel market() const;
  Payoff make_payoff() const;
  TimeGrid grid() const;
  /// Training config with the experiment seed applied.
  TrainConfig training() const;

  /// Cross-field checks (dimensions, payoff validity, algorithm range); throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  /// FNV-1a hash of the canonical JSON form without `output` and `threads`, as 16 hex digits.
  std::string hash() const;
};

/// Strict parse: unknown keys and malformed values raise ConfigError naming the field.
/// Missing keys keep their defaults, or the preset's values when the document names one
/// via "preset".
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
ExperimentConfig preset(const std::string& name);

}  // namespace deepcv
