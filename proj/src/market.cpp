#include "deepcv/market.hpp"

#include <algorithm>
#include <cmath>

#include "deepcv/errors.hpp"

namespace deepcv {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw ConfigError("time grid needs at least one step");
  for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
    if (!(times_[k] < times_[k + 1]) || !std::isfinite(times_[k + 1]))
      throw ConfigError("time grid must be strictly increasing (violated at index " + std::to_string(k + 1) + ")");
  }
}

TimeGrid TimeGrid::uniform(double maturity, std::size_t steps, double start) {
  if (steps == 0) throw ConfigError("time grid needs at least one step");
  if (!(maturity > start)) throw ConfigError("maturity must exceed the start time");
  std::vector<double> times(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k)
    times[k] = start + (maturity - start) * static_cast<double>(k) / static_cast<double>(steps);
  times.back() = maturity;
  return TimeGrid(std::move(times));
}

MarketModel::MarketModel(double rate, Eigen::VectorXd sigma, Eigen::MatrixXd correlation)
    : rate_(rate), sigma_(std::move(sigma)), correlation_(std::move(correlation)) {
  if (sigma_.size() < 1) throw ConfigError("market model needs at least one asset");
  if (!std::isfinite(rate_)) throw ConfigError("rate must be finite");
  for (Eigen::Index i = 0; i < sigma_.size(); ++i)
    if (!(sigma_(i) >= 0.0) || !std::isfinite(sigma_(i)))
      throw ConfigError("volatility of asset " + std::to_string(i) + " must be non-negative");
  if (correlation_.rows() != sigma_.size() || correlation_.cols() != sigma_.size())
    throw ConfigError("correlation matrix must be " + std::to_string(sigma_.size()) + "x" +
                      std::to_string(sigma_.size()));
  for (Eigen::Index i = 0; i < sigma_.size(); ++i)
    if (std::abs(correlation_(i, i) - 1.0) > 1e-12) throw ConfigError("correlation matrix must have unit diagonal");
  chol_ = cholesky(correlation_);
}

MarketModel MarketModel::uncorrelated(std::size_t dim, double rate, double sigma) {
  const auto d = static_cast<Eigen::Index>(dim);
  return MarketModel(rate, Eigen::VectorXd::Constant(d, sigma), Eigen::MatrixXd::Identity(d, d));
}

Eigen::MatrixXd MarketModel::vol_matrix() const { return sigma_.asDiagonal() * chol_.matrix; }

MarketModel MarketModel::with_sigma(Eigen::VectorXd sigma) const {
  return MarketModel(rate_, std::move(sigma), correlation_);
}

MarketModel MarketModel::with_rate(double rate) const { return MarketModel(rate, sigma_, correlation_); }

InitialSampler InitialSampler::fixed(Eigen::VectorXd s0) {
  InitialSampler s;
  s.kind = Kind::Fixed;
  s.s0 = std::move(s0);
  return s;
}

InitialSampler InitialSampler::lognormal(double mu, double tau, Eigen::VectorXd s0) {
  if (!(tau >= 0.0)) throw ConfigError("lognormal initial sampler needs tau >= 0");
  InitialSampler s;
  s.kind = Kind::LogNormal;
  s.mu = mu;
  s.tau = tau;
  s.s0 = std::move(s0);
  return s;
}

Eigen::VectorXd InitialSampler::sample(RandomStream& stream, const Eigen::VectorXd& sigma) const {
  if (kind == Kind::Fixed) return s0;
  Eigen::VectorXd x(s0.size());
  const double root_tau = std::sqrt(tau);
  for (Eigen::Index i = 0; i < s0.size(); ++i) {
    const double xi = stream.next_normal();
    x(i) = s0(i) * std::exp((mu - 0.5 * sigma(i) * sigma(i)) * tau + sigma(i) * root_tau * xi);
  }
  return x;
}

std::string Payoff::name() const {
  switch (kind_) {
    case PayoffKind::Exchange:
      return "exchange";
    case PayoffKind::Basket:
      return "basket";
    case PayoffKind::ExchangeVsAverage:
      return "exchange_vs_average";
  }
  return "unknown";
}

void Payoff::validate(std::size_t dim) const {
  switch (kind_) {
    case PayoffKind::Exchange:
      if (dim != 2) throw ConfigError("exchange payoff needs exactly 2 assets, got " + std::to_string(dim));
      break;
    case PayoffKind::ExchangeVsAverage:
      if (dim < 2) throw ConfigError("exchange_vs_average payoff needs at least 2 assets, got " + std::to_string(dim));
      break;
    case PayoffKind::Basket:
      if (dim < 1) throw ConfigError("basket payoff needs at least 1 asset");
      break;
  }
}

double Payoff::operator()(std::span<const double> s) const {
  validate(s.size());
  switch (kind_) {
    case PayoffKind::Exchange:
      return std::max(0.0, s[0] - s[1]);
    case PayoffKind::Basket: {
      double total = 0.0;
      for (double v : s) total += v;
      return std::max(0.0, total - strike_);
    }
    case PayoffKind::ExchangeVsAverage: {
      double rest = 0.0;
      for (std::size_t i = 1; i < s.size(); ++i) rest += s[i];
      return std::max(0.0, s[0] - rest / static_cast<double>(s.size() - 1));
    }
  }
  return 0.0;
}

Eigen::RowVectorXd Payoff::evaluate(const Eigen::MatrixXd& states) const {
  validate(static_cast<std::size_t>(states.rows()));
  Eigen::RowVectorXd out;
  switch (kind_) {
    case PayoffKind::Exchange:
      out = (states.row(0) - states.row(1)).cwiseMax(0.0);
      break;
    case PayoffKind::Basket:
      out = (states.colwise().sum().array() - strike_).cwiseMax(0.0).matrix();
      break;
    case PayoffKind::ExchangeVsAverage: {
      const auto rest = states.bottomRows(states.rows() - 1).colwise().sum() / static_cast<double>(states.rows() - 1);
      out = (states.row(0) - rest).cwiseMax(0.0);
      break;
    }
  }
  return out;
}

double payoff_eval(const Payoff& payoff, std::span<const double> terminal_assets) { return payoff(terminal_assets); }

PathBatch simulate_paths(const MarketModel& model, const TimeGrid& grid, std::size_t n_paths,
                         const InitialSampler& init, const RandomStream& stream, const SimulationOptions& options) {
  const std::size_t d = model.dim();
  const auto di = static_cast<Eigen::Index>(d);
  const auto n = static_cast<Eigen::Index>(n_paths);
  const std::size_t first = options.steps.first;
  const std::size_t last = options.steps.last.value_or(grid.steps());
  if (first > last || last > grid.steps()) throw ConfigError("simulate_paths: invalid step range");
  if (static_cast<std::size_t>(init.s0.size()) != d)
    throw ConfigError("initial sampler has " + std::to_string(init.s0.size()) + " components, model has " +
                      std::to_string(d));

  PathBatch batch;
  batch.grid = grid;
  batch.first_step = first;
  batch.last_step = last;
  batch.states.resize(grid.steps() + 1);
  batch.increments.resize(grid.steps());
  for (std::size_t k = first; k <= last; ++k) batch.states[k].resize(di, n);
  for (std::size_t k = first; k < last; ++k) batch.increments[k].resize(di, n);
  batch.sigma.resize(di, n);
  batch.rate.resize(n);

  const Eigen::MatrixXd& c = model.chol().matrix;
  const bool diagonal = model.chol().is_diagonal();
  // sum_j (C^{ij})^2, equal to one for a correlation matrix up to rounding.
  const Eigen::VectorXd row_norm2 = c.rowwise().squaredNorm();
  const std::optional<ParameterRanges>& ranges = options.parameters;

  Eigen::VectorXd sig(di), x(di), z(di), noise(di), drift(di);
  for (Eigen::Index p = 0; p < n; ++p) {
    RandomStream rs = stream.substream(options.path_offset + static_cast<std::uint64_t>(p));
    double r = model.rate();
    sig = model.sigma();
    if (ranges && ranges->sigma) {
      const auto [lo, hi] = *ranges->sigma;
      for (Eigen::Index i = 0; i < di; ++i) sig(i) = lo + (hi - lo) * rs.next_uniform();
    }
    if (ranges && ranges->rate) {
      const auto [lo, hi] = *ranges->rate;
      r = lo + (hi - lo) * rs.next_uniform();
    }
    batch.sigma.col(p) = sig;
    batch.rate(p) = r;
    drift = (r - 0.5 * (sig.array().square() * row_norm2.array())).matrix();

    x = init.sample(rs, sig);
    if (first > 0) {
      const double horizon = grid.time(first) - grid.start();
      for (Eigen::Index i = 0; i < di; ++i) z(i) = rs.next_normal();
      noise = diagonal ? Eigen::VectorXd(c.diagonal().cwiseProduct(z)) : Eigen::VectorXd(c * z);
      x = (x.array() * (drift.array() * horizon + sig.array() * noise.array() * std::sqrt(horizon)).exp()).matrix();
    }
    batch.states[first].col(p) = x;
    for (std::size_t k = first; k < last; ++k) {
      const double dt = grid.dt(k);
      const double root_dt = std::sqrt(dt);
      for (Eigen::Index i = 0; i < di; ++i) z(i) = root_dt * rs.next_normal();
      batch.increments[k].col(p) = z;
      noise = diagonal ? Eigen::VectorXd(c.diagonal().cwiseProduct(z)) : Eigen::VectorXd(c * z);
      x = (x.array() * (drift.array() * dt + sig.array() * noise.array()).exp()).matrix();
      batch.states[k + 1].col(p) = x;
    }
  }
  return batch;
}

double discount_factor(double rate, double t_from, double t_to) {
  if (t_from > t_to) throw DomainError("discount_factor: t_from must not exceed t_to");
  return std::exp(-rate * (t_to - t_from));
}

double discount_factor(const MarketModel& model, double t_from, double t_to) {
  return discount_factor(model.rate(), t_from, t_to);
}

namespace {

void require_positive_state(const MarketModel& model, const Eigen::VectorXd& state) {
  if (static_cast<std::size_t>(state.size()) != model.dim())
    throw ConfigError("state has " + std::to_string(state.size()) + " components, model has " +
                      std::to_string(model.dim()));
  for (Eigen::Index i = 0; i < state.size(); ++i)
    if (!(state(i) > 0.0)) throw DomainError("diffusion: state component " + std::to_string(i) + " is not positive");
}

}  // namespace

Eigen::MatrixXd diffusion(const MarketModel& model, const Eigen::VectorXd& state) {
  require_positive_state(model, state);
  return state.asDiagonal() * model.vol_matrix();
}

Eigen::MatrixXd diffusion_inverse(const MarketModel& model, const Eigen::VectorXd& state) {
  require_positive_state(model, state);
  for (Eigen::Index i = 0; i < state.size(); ++i)
    if (!(model.sigma()(i) > 0.0)) throw DomainError("diffusion: volatility " + std::to_string(i) + " is zero");
  const Eigen::VectorXd scale = (state.array() * model.sigma().array()).inverse().matrix();
  const auto d = static_cast<Eigen::Index>(model.dim());
  Eigen::MatrixXd c_inverse = model.chol().matrix.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
  return c_inverse * scale.asDiagonal();
}

Eigen::MatrixXd diffusion_increment(const MarketModel& model, const PathBatch& paths, std::size_t step) {
  if (step < paths.first_step || step >= paths.last_step) throw ConfigError("diffusion_increment: step outside batch");
  if (paths.dim() != model.dim()) throw ConfigError("diffusion_increment: dimension mismatch");
  Eigen::MatrixXd noise = model.chol().apply(paths.increments[step]);
  return paths.states[step].cwiseProduct(paths.sigma).cwiseProduct(noise);
}

VariationalBatch simulate_variational(const MarketModel& model, const PathBatch& paths) {
  if (!paths.complete()) throw ConfigError("simulate_variational: needs a batch covering the whole grid");
  if (paths.dim() != model.dim())
    throw ConfigError("simulate_variational: batch dimension " + std::to_string(paths.dim()) + " differs from model " +
                      std::to_string(model.dim()));
  const std::size_t steps = paths.grid.steps();
  const auto d = static_cast<Eigen::Index>(model.dim());
  const auto n = static_cast<Eigen::Index>(paths.n_paths());
  for (std::size_t k = 0; k < steps; ++k)
    if (paths.increments[k].rows() != d || paths.increments[k].cols() != n)
      throw ConfigError("simulate_variational: increments do not match the grid");

  VariationalBatch out;
  out.dim = model.dim();
  out.blocks.resize(steps + 1);
  out.blocks[0].resize(d * d, n);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index p = 0; p < n; ++p) out.blocks[0].col(p) = identity.reshaped();

  Eigen::MatrixXd y(d, d), next(d, d);
  for (std::size_t k = 0; k < steps; ++k) {
    const double dt = paths.grid.dt(k);
    // For Black-Scholes db/dx = r I and d(sigma^{.j})/dx = diag(sigma^{.j}), so the
    // noise term sum_j diag(sigma^{.j}) dW^j collapses to diag(sigma * (C dW)).
    const Eigen::MatrixXd noise = paths.sigma.cwiseProduct(model.chol().apply(paths.increments[k]));
    out.blocks[k + 1].resize(d * d, n);
    for (Eigen::Index p = 0; p < n; ++p) {
      y = Eigen::Map<const Eigen::MatrixXd>(out.blocks[k].col(p).data(), d, d);
      next = y + paths.rate(p) * dt * y + noise.col(p).asDiagonal() * y;
      out.blocks[k + 1].col(p) = next.reshaped();
    }
  }
  return out;
}

}  // namespace deepcv
