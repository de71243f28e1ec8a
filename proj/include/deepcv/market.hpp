#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deepcv/linalg.hpp"
#include "deepcv/random.hpp"

namespace deepcv {

/// Partition t_0 < t_1 < ... < t_N = T of the pricing interval.
class TimeGrid {
 public:
  TimeGrid() = default;
  /// Throws ConfigError unless `times` has at least two strictly increasing entries.
  explicit TimeGrid(std::vector<double> times);
  static TimeGrid uniform(double maturity, std::size_t steps, double start = 0.0);

  std::size_t steps() const noexcept { return times_.empty() ? 0 : times_.size() - 1; }
  double start() const { return times_.front(); }
  double maturity() const { return times_.back(); }
  double time(std::size_t k) const { return times_.at(k); }
  /// Length of the interval [t_k, t_{k+1}].
  double dt(std::size_t k) const { return times_.at(k + 1) - times_.at(k); }
  const std::vector<double>& times() const noexcept { return times_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> times_;
};

/// Multi-asset Black-Scholes market dS^i = r S^i dt + sigma^i S^i sum_j C^{ij} dW^j,
/// with C the Cholesky factor of the correlation matrix.
class MarketModel {
 public:
  MarketModel(double rate, Eigen::VectorXd sigma, Eigen::MatrixXd correlation);
  static MarketModel uncorrelated(std::size_t dim, double rate, double sigma);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(sigma_.size()); }
  double rate() const noexcept { return rate_; }
  const Eigen::VectorXd& sigma() const noexcept { return sigma_; }
  const Eigen::MatrixXd& correlation() const noexcept { return correlation_; }
  const LowerTriangularFactor& chol() const noexcept { return chol_; }
  /// Effective volatility matrix sigma^{ij} = sigma^i C^{ij}.
  Eigen::MatrixXd vol_matrix() const;

  MarketModel with_sigma(Eigen::VectorXd sigma) const;
  MarketModel with_rate(double rate) const;

 private:
  double rate_;
  Eigen::VectorXd sigma_;
  Eigen::MatrixXd correlation_;
  LowerTriangularFactor chol_;
};

/// Uniform sampling ranges for per-path model parameters that are also fed to
/// the networks as extra inputs.
struct ParameterRanges {
  std::optional<std::pair<double, double>> sigma;
  std::optional<std::pair<double, double>> rate;

  bool any() const noexcept { return sigma.has_value() || rate.has_value(); }
};

/// Law of the initial asset vector.
struct InitialSampler {
  enum class Kind { Fixed, LogNormal };

  Kind kind = Kind::Fixed;
  Eigen::VectorXd s0;
  double mu = 0.0;
  double tau = 0.0;

  static InitialSampler fixed(Eigen::VectorXd s0);
  /// Component i is s0^i exp((mu - sigma_i^2/2) tau + sigma_i sqrt(tau) xi).
  static InitialSampler lognormal(double mu, double tau, Eigen::VectorXd s0);

  /// Draws one initial vector; `sigma` are the asset volatilities of the path.
  Eigen::VectorXd sample(RandomStream& stream, const Eigen::VectorXd& sigma) const;
};

enum class PayoffKind { Exchange, Basket, ExchangeVsAverage };

class Payoff {
 public:
  static Payoff exchange() { return Payoff(PayoffKind::Exchange, 0.0); }
  static Payoff basket(double strike) { return Payoff(PayoffKind::Basket, strike); }
  static Payoff exchange_vs_average() { return Payoff(PayoffKind::ExchangeVsAverage, 0.0); }

  PayoffKind kind() const noexcept { return kind_; }
  double strike() const noexcept { return strike_; }
  std::string name() const;

  /// Throws ConfigError when the payoff is not defined for `dim` assets.
  void validate(std::size_t dim) const;
  double operator()(std::span<const double> terminal) const;
  /// Evaluates every column of a d x n block.
  Eigen::RowVectorXd evaluate(const Eigen::MatrixXd& states) const;

 private:
  Payoff(PayoffKind kind, double strike) : kind_(kind), strike_(strike) {}

  PayoffKind kind_;
  double strike_;
};

double payoff_eval(const Payoff& payoff, std::span<const double> terminal_assets);

/// Simulated paths plus the Wiener increments that produced them.
///
/// Blocks are stored features x paths. `states[k]` is populated for
/// first_step <= k <= last_step and `increments[k]` (the increment over
/// [t_k, t_{k+1}]) for first_step <= k < last_step; other entries are empty.
struct PathBatch {
  TimeGrid grid;
  std::size_t first_step = 0;
  std::size_t last_step = 0;
  std::vector<Eigen::MatrixXd> states;
  std::vector<Eigen::MatrixXd> increments;
  Eigen::MatrixXd sigma;    // d x n per-path volatilities
  Eigen::RowVectorXd rate;  // per-path short rates

  std::size_t n_paths() const noexcept { return static_cast<std::size_t>(sigma.cols()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(sigma.rows()); }
  double asset(std::size_t path, std::size_t step, std::size_t asset_index) const {
    return states.at(step)(static_cast<Eigen::Index>(asset_index), static_cast<Eigen::Index>(path));
  }
  bool complete() const noexcept { return first_step == 0 && last_step == grid.steps(); }
};

/// Which part of the grid to simulate. The state at `first` is drawn exactly
/// from the initial law in one log-normal jump, so windows are exact in law.
struct StepRange {
  std::size_t first = 0;
  std::optional<std::size_t> last;
};

struct SimulationOptions {
  StepRange steps;
  /// Index of the first path; path p uses substream(path_offset + p).
  std::uint64_t path_offset = 0;
  std::optional<ParameterRanges> parameters;
};

/// Exact log-normal simulation of the market on `grid`.
PathBatch simulate_paths(const MarketModel& model, const TimeGrid& grid, std::size_t n_paths,
                         const InitialSampler& init, const RandomStream& stream,
                         const SimulationOptions& options = {});

/// exp(-r (t_to - t_from)).
double discount_factor(const MarketModel& model, double t_from, double t_to);
double discount_factor(double rate, double t_from, double t_to);

/// sigma(x)^{ij} = x^i sigma^{ij}.
Eigen::MatrixXd diffusion(const MarketModel& model, const Eigen::VectorXd& state);
/// C^{-1} diag(1 / (x^i sigma^i)); throws DomainError for non-positive states.
Eigen::MatrixXd diffusion_inverse(const MarketModel& model, const Eigen::VectorXd& state);

/// Column p holds sigma(x_{t_k}) dW_{k+1} for path p (per-path volatilities).
Eigen::MatrixXd diffusion_increment(const MarketModel& model, const PathBatch& paths, std::size_t step);

/// First-variation process Y = dX/dx, one d x d matrix per path and time.
struct VariationalBatch {
  std::size_t dim = 0;
  /// blocks[k] is (d*d) x n; column p is Y_{t_k} of path p in column-major order.
  std::vector<Eigen::MatrixXd> blocks;

  Eigen::Map<const Eigen::MatrixXd> at(std::size_t step, std::size_t path) const {
    const auto d = static_cast<Eigen::Index>(dim);
    return Eigen::Map<const Eigen::MatrixXd>(blocks.at(step).col(static_cast<Eigen::Index>(path)).data(), d, d);
  }
};

/// Euler scheme for dY = db Y ds + sum_j d(sigma^{.j}) Y dW^j, Y_{t0} = I, driven by the
/// increments stored in `paths`. Throws ConfigError if `paths` is not a complete batch of
/// `model`'s dimension.
VariationalBatch simulate_variational(const MarketModel& model, const PathBatch& paths);

}  // namespace deepcv
