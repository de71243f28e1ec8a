#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deepcv/control_variate.hpp"
#include "deepcv/market.hpp"
#include "deepcv/moments.hpp"

namespace deepcv {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Xi = D(t_first, T) g(X_T) per path, with each path's own rate.
Eigen::RowVectorXd discounted_payoff(const PathBatch& paths, const Payoff& payoff);

/// M = sum_k D(t_first, t_k) grad_k(x_k) . sigma(x_k) dW_{k+1} over every step of the batch
/// (left-point rule). Throws ConfigError on a grid or dimension mismatch.
Eigen::RowVectorXd martingale_sum(const ControlVariateModel& cv, const PathBatch& paths, const MarketModel& model);

/// Per-step discounted diffusion terms: column p of entry k is D(t_first, t_k) sigma(x_k) dW_{k+1}.
/// M is then sum_k colwise-dot(grad_k, terms[k]).
std::vector<Eigen::MatrixXd> discounted_noise_terms(const PathBatch& paths, const MarketModel& model);

struct CvSample {
  Eigen::RowVectorXd xi;      // plain Monte-Carlo samples
  Eigen::RowVectorXd m;       // martingale sums
  Eigen::RowVectorXd values;  // xi - lambda m
  double lambda = 1.0;
  SampleMoments moments;      // of `values`
};

/// Controlled samples V = Xi - lambda M, with lambda from the model unless overridden.
CvSample cv_estimate(const ControlVariateModel& cv, const PathBatch& paths, const Payoff& payoff,
                     const MarketModel& model, std::optional<double> lambda_override = std::nullopt);

struct LambdaEstimate {
  double lambda = 0.0;
  bool degenerate = false;  // Var[m] == 0
};

/// lambda* = Cov[xi, m] / Var[m] from unbiased sample moments.
LambdaEstimate optimal_lambda(std::span<const double> xi, std::span<const double> m);

/// 100(1 - alpha)% interval for the variance of the replicated estimators:
/// [(N-1)S^2 / chi2_{1-alpha/2}, (N-1)S^2 / chi2_{alpha/2}].
Interval variance_chi2_ci(std::span<const double> estimator_samples, double alpha = 0.05);

struct EvaluationOptions {
  std::size_t n_mc = 10;
  std::size_t n_in = 100000;
  std::optional<double> lambda_override;
  /// Per-path parameter laws for models trained with extra inputs.
  std::optional<ParameterRanges> parameters;
  std::size_t threads = 1;
  /// Paths simulated at once; 0 picks a size from the problem dimensions.
  std::size_t chunk = 0;
  std::uint64_t training_steps = 0;
  std::uint64_t training_paths = 0;
};

struct EvaluationReport {
  double plain_variance = 0.0;
  double cv_variance = 0.0;
  double reduction_factor = 0.0;
  double estimator_mean = 0.0;
  Interval estimator_ci;
  Interval variance_ci_mc;
  Interval variance_ci_cv;
  double lambda = 1.0;
  std::size_t n_mc = 0;
  std::size_t n_in = 0;
  std::uint64_t seed = 0;
  std::uint64_t training_steps = 0;
  std::uint64_t training_paths = 0;

  double plain_mean = 0.0;
  Interval plain_ci;
  double lambda_star = 0.0;  // pooled Cov/Var on the evaluation samples (informational)
  std::vector<double> plain_replicates;
  std::vector<double> cv_replicates;

  /// Combined standard error of (cv mean - plain mean) from the pooled variances.
  double difference_std_error() const;

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// n_mc independent replications of n_in paths from `init`; path j of the whole run
/// uses substream j of `stream`, so the report does not depend on threads or chunking
/// beyond summation order.
EvaluationReport evaluate(const ControlVariateModel& cv, const MarketModel& model, const Payoff& payoff,
                          const InitialSampler& init, const RandomStream& stream,
                          const EvaluationOptions& options = {});

struct SweepRow {
  double sigma = 0.0;
  EvaluationReport report;
};

/// Evaluates the fixed control variate under models whose volatilities are all set to each sigma.
std::vector<SweepRow> robustness_sweep(const ControlVariateModel& cv, const MarketModel& base_model,
                                       const Payoff& payoff, const InitialSampler& init,
                                       const std::vector<double>& sigma_values, const RandomStream& stream,
                                       const EvaluationOptions& options = {});

/// Columns sigma, factor, mean, ci_low, ci_high.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace deepcv
