#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "deepcv/adam.hpp"
#include "deepcv/control_variate.hpp"
#include "deepcv/market.hpp"
#include "deepcv/network.hpp"

namespace deepcv {

/// Network shapes used by the solvers. Per-step networks are [d + extras, w, ..., w, out]
/// with `hidden_layers` hidden layers of width w = hidden_width or d + width_offset.
struct ArchitectureSpec {
  int hidden_layers = 2;
  int width_offset = 20;
  std::optional<int> hidden_width;
  bool batchnorm = true;
  bool output_bn_affine = true;
  /// Hidden layers of the time-input networks; defaults to the number of time steps.
  std::optional<int> joint_hidden_layers;

  int width(std::size_t dim) const { return hidden_width.value_or(static_cast<int>(dim) + width_offset); }
};

struct TrainConfig {
  std::size_t batch_size = 5000;
  double epsilon = 5e-6;
  std::size_t window = 100;
  /// Optimizer steps allowed per sub-problem before giving up with a warning.
  std::size_t max_iterations = 100000;
  std::uint64_t seed = 0;
  LearningRateSchedule schedule;
  ArchitectureSpec architecture;
  /// Law of the initial state during training.
  InitialSampler initial;
  /// Per-path volatility / rate laws; the sampled values become extra network inputs.
  std::optional<ParameterRanges> parameters;
  /// Warm-start iterative solvers from the successor time step.
  bool warm_start = true;
  /// Post-estimate lambda* on a fresh batch (always done by the correlation solver).
  bool estimate_lambda = false;
  /// Optional progress sink (one line per finished sub-problem).
  std::function<void(const std::string&)> log;

  /// Throws ConfigError for batch_size < 2, epsilon <= 0, window < 1 or a bad architecture.
  void validate() const;
};

/// Contiguous block of iterations belonging to one optimisation sub-problem.
struct LossSegment {
  std::string label;     // e.g. "terminal", "step 49", "joint"
  long step = -1;        // grid index being trained, -1 for joint problems
  std::size_t begin = 0;
  std::size_t end = 0;
  bool converged = false;
};

struct LossHistory {
  std::vector<double> loss;
  std::vector<double> learning_rate;
  std::vector<LossSegment> segments;
  std::size_t batch_size = 0;

  std::uint64_t optimizer_steps() const noexcept { return loss.size(); }
  std::uint64_t paths_consumed() const noexcept { return loss.size() * batch_size; }
  /// Header `iteration,loss,learning_rate`, one row per optimizer step.
  void write_csv(std::ostream& os) const;
};

struct TrainResult {
  ControlVariateModel model;
  LossHistory history;
  bool converged = true;
  std::vector<std::string> warnings;
};

/// True iff the history holds at least 2 * window values and the means of the last two
/// windows differ by less than epsilon.
bool stopping_criterion(std::span<const double> history, std::size_t window, double epsilon);
bool stopping_criterion(const LossHistory& history, std::size_t window, double epsilon);

/// n x N matrix of D(t_k, T) g(X_T) (path p, step k).
Eigen::MatrixXd projection_targets(const PathBatch& paths, const Payoff& payoff, const MarketModel& model);

/// Bismut-Elworthy-Li regression targets; entry k is a d x n block whose column p is
/// (D(t_k,T) g(X_T) - g(x_k)) / (T - t_k) * sum_{n>=k} dW_{n+1}^T sigma(x_n)^{-1} Y_n Y_k^{-1}.
/// Throws DomainError naming the path and time when sigma(x) is singular.
std::vector<Eigen::MatrixXd> bel_targets(const PathBatch& paths, const VariationalBatch& variational,
                                         const Payoff& payoff, const MarketModel& model);

/// Time-input network depth whose two networks carry about as many parameters as the
/// per-step networks of the iterative martingale representation solver.
int parity_hidden_layers(std::size_t dim, const ExtraInputs& extras, std::size_t steps, const ArchitectureSpec& arch);

TrainResult train_projection(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                             const Payoff& payoff);
TrainResult train_projection_iterative(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                                       const Payoff& payoff);
TrainResult train_bel(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                      const Payoff& payoff);
TrainResult train_mrs_iterative(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                                const Payoff& payoff);
TrainResult train_mrs_joint(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                            const Payoff& payoff);
TrainResult train_var_min(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                          const Payoff& payoff);
TrainResult train_corr_max(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                           const Payoff& payoff);

/// Dispatches on algorithm number 1..7; throws ConfigError otherwise.
TrainResult train(int algorithm, const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                  const Payoff& payoff);
std::string algorithm_name(int algorithm);

/// Variance and correlation losses on a batch, with the derivative with respect to each M_i.
struct BatchLoss {
  double loss = 0.0;
  Eigen::RowVectorXd d_m;
  bool degenerate = false;
};
/// Population variance of xi - m.
BatchLoss variance_loss(const Eigen::RowVectorXd& xi, const Eigen::RowVectorXd& m);
/// 1 - rho^2 between xi and m; degenerate (loss 1, zero derivative) when Var[m] = 0.
BatchLoss correlation_loss(const Eigen::RowVectorXd& xi, const Eigen::RowVectorXd& m);

}  // namespace deepcv
