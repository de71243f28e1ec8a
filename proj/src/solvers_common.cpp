#include <cmath>
#include <iomanip>
#include <sstream>

#include "deepcv/evaluation.hpp"
#include "solvers_internal.hpp"

namespace deepcv {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (window < 1) throw ConfigError("window must be at least 1");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (architecture.hidden_layers < 1) throw ConfigError("architecture.hidden_layers must be at least 1");
  if (architecture.hidden_width && *architecture.hidden_width < 1)
    throw ConfigError("architecture.hidden_width must be at least 1");
  if (architecture.joint_hidden_layers && *architecture.joint_hidden_layers < 1)
    throw ConfigError("architecture.joint_hidden_layers must be at least 1");
  if (!(schedule.initial > 0.0 && schedule.decayed > 0.0)) throw ConfigError("learning rates must be positive");
}

void LossHistory::write_csv(std::ostream& os) const {
  os << "iteration,loss,learning_rate\n" << std::setprecision(17);
  for (std::size_t i = 0; i < loss.size(); ++i) os << i + 1 << ',' << loss[i] << ',' << learning_rate[i] << '\n';
}

bool stopping_criterion(std::span<const double> history, std::size_t window, double epsilon) {
  if (window < 1) throw ConfigError("stopping_criterion: window must be at least 1");
  if (history.size() < 2 * window) return false;
  const std::size_t n = history.size();
  double last = 0.0, previous = 0.0;
  for (std::size_t i = n - window; i < n; ++i) last += history[i];
  for (std::size_t i = n - 2 * window; i < n - window; ++i) previous += history[i];
  return std::abs(last - previous) / static_cast<double>(window) < epsilon;
}

bool stopping_criterion(const LossHistory& history, std::size_t window, double epsilon) {
  return stopping_criterion(std::span<const double>(history.loss), window, epsilon);
}

Eigen::MatrixXd projection_targets(const PathBatch& paths, const Payoff& payoff, const MarketModel& model) {
  if (paths.dim() != model.dim()) throw ConfigError("projection_targets: dimension mismatch");
  const std::size_t steps = paths.grid.steps();
  const Eigen::RowVectorXd g = payoff.evaluate(paths.states.at(paths.last_step));
  const double maturity = paths.grid.time(paths.last_step);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.size(), static_cast<Eigen::Index>(steps));
  for (std::size_t k = paths.first_step; k < std::min(paths.last_step, steps); ++k) {
    const double tau = maturity - paths.grid.time(k);
    out.col(static_cast<Eigen::Index>(k)) = (g.array() * (-paths.rate.array() * tau).exp()).transpose();
  }
  return out;
}

std::vector<Eigen::MatrixXd> bel_targets(const PathBatch& paths, const VariationalBatch& variational,
                                         const Payoff& payoff, const MarketModel& model) {
  if (!paths.complete()) throw ConfigError("bel_targets: needs complete paths");
  if (paths.dim() != model.dim() || variational.dim != model.dim())
    throw ConfigError("bel_targets: dimension mismatch");
  const std::size_t steps = paths.grid.steps();
  const auto d = static_cast<Eigen::Index>(model.dim());
  const auto n = static_cast<Eigen::Index>(paths.n_paths());
  const double maturity = paths.grid.maturity();
  const Eigen::MatrixXd& c = model.chol().matrix;
  const Eigen::RowVectorXd g_terminal = payoff.evaluate(paths.states[steps]);

  // a_n = sigma(x_n)^{-T} dW_{n+1} = diag(1 / (x sigma)) C^{-T} dW, then weights Y_n^T a_n.
  std::vector<Eigen::MatrixXd> weights(steps, Eigen::MatrixXd(d, n));
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::MatrixXd u = c.transpose().triangularView<Eigen::Upper>().solve(paths.increments[k]);
    for (Eigen::Index p = 0; p < n; ++p) {
      Eigen::VectorXd a(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double scale = paths.states[k](i, p) * paths.sigma(i, p);
        if (!(scale > 0.0) || !std::isfinite(scale))
          throw DomainError("bel_targets: singular diffusion on path " + std::to_string(p) + " at t = " +
                            std::to_string(paths.grid.time(k)));
        a(i) = u(i, p) / scale;
      }
      weights[k].col(p) = variational.at(k, p).transpose() * a;
    }
  }

  std::vector<Eigen::MatrixXd> targets(steps);
  Eigen::MatrixXd suffix = Eigen::MatrixXd::Zero(d, n);
  for (std::size_t k = steps; k-- > 0;) {
    suffix += weights[k];
    const Eigen::RowVectorXd g_now = payoff.evaluate(paths.states[k]);
    const double tau = maturity - paths.grid.time(k);
    targets[k].resize(d, n);
    for (Eigen::Index p = 0; p < n; ++p) {
      const double coefficient = (std::exp(-paths.rate(p) * tau) * g_terminal(p) - g_now(p)) / tau;
      if (k == 0) {
        targets[k].col(p) = coefficient * suffix.col(p);
        continue;
      }
      const Eigen::Map<const Eigen::MatrixXd> y = variational.at(k, p);
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(y.transpose());
      if (!(std::abs(lu.determinant()) > 0.0))
        throw DomainError("bel_targets: singular first variation on path " + std::to_string(p) + " at t = " +
                          std::to_string(paths.grid.time(k)));
      targets[k].col(p) = coefficient * lu.solve(suffix.col(p));
    }
  }
  return targets;
}

int parity_hidden_layers(std::size_t dim, const ExtraInputs& extras, std::size_t steps, const ArchitectureSpec& arch) {
  const int d = static_cast<int>(dim);
  const int in = d + extras.width(dim);
  const int w = arch.width(dim);
  auto per_step = [&](int out) {
    NetworkSpec spec;
    spec.layer_sizes.assign(static_cast<std::size_t>(arch.hidden_layers) + 2, w);
    spec.layer_sizes.front() = in;
    spec.layer_sizes.back() = out;
    spec.batchnorm = arch.batchnorm;
    spec.output_bn_affine = arch.output_bn_affine;
    return static_cast<double>(parameter_count(spec));
  };
  const double target = static_cast<double>(steps) * per_step(d) + static_cast<double>(steps + 1) * per_step(1);
  // Two time-input networks with L hidden layers: first layer (in+1)w + w, L-1 inner
  // layers w^2 + w each, output layers w*d + d and w + 1.
  const double fixed = 2.0 * ((in + 1.0) * w + w) + (w * d + d) + (w + 1.0);
  const double per_layer = 2.0 * (static_cast<double>(w) * w + w);
  const double layers = 1.0 + (target - fixed) / per_layer;
  return std::max(1, static_cast<int>(std::lround(layers)));
}

std::string algorithm_name(int algorithm) {
  switch (algorithm) {
    case 1: return "projection";
    case 2: return "projection-iterative";
    case 3: return "bel";
    case 4: return "mrs-iterative";
    case 5: return "mrs-joint";
    case 6: return "variance-min";
    case 7: return "correlation-max";
    default: throw ConfigError("unknown algorithm " + std::to_string(algorithm) + " (expected 1..7)");
  }
}

TrainResult train(int algorithm, const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                  const Payoff& payoff) {
  switch (algorithm) {
    case 1: return train_projection(config, model, grid, payoff);
    case 2: return train_projection_iterative(config, model, grid, payoff);
    case 3: return train_bel(config, model, grid, payoff);
    case 4: return train_mrs_iterative(config, model, grid, payoff);
    case 5: return train_mrs_joint(config, model, grid, payoff);
    case 6: return train_var_min(config, model, grid, payoff);
    case 7: return train_corr_max(config, model, grid, payoff);
    default: throw ConfigError("unknown algorithm " + std::to_string(algorithm) + " (expected 1..7)");
  }
}

BatchLoss variance_loss(const Eigen::RowVectorXd& xi, const Eigen::RowVectorXd& m) {
  if (xi.size() != m.size() || xi.size() < 2) throw ConfigError("variance_loss: need two equal-sized samples");
  const double n = static_cast<double>(xi.size());
  const Eigen::RowVectorXd v = xi - m;
  const Eigen::RowVectorXd centred = v.array() - v.mean();
  BatchLoss out;
  out.loss = centred.squaredNorm() / n;
  out.d_m = (-2.0 / n) * centred;
  return out;
}

BatchLoss correlation_loss(const Eigen::RowVectorXd& xi, const Eigen::RowVectorXd& m) {
  if (xi.size() != m.size() || xi.size() < 2) throw ConfigError("correlation_loss: need two equal-sized samples");
  const Eigen::RowVectorXd cx = xi.array() - xi.mean();
  const Eigen::RowVectorXd cm = m.array() - m.mean();
  const double sxx = cx.squaredNorm();
  const double smm = cm.squaredNorm();
  const double sxm = cx.dot(cm);
  BatchLoss out;
  if (!(sxx > 0.0) || !(smm > 0.0)) {
    out.loss = 1.0;
    out.d_m = Eigen::RowVectorXd::Zero(m.size());
    out.degenerate = true;
    return out;
  }
  const double rho2 = sxm * sxm / (sxx * smm);
  out.loss = 1.0 - rho2;
  out.d_m = -(2.0 * sxm / (sxx * smm)) * cx + (2.0 * sxm * sxm / (sxx * smm * smm)) * cm;
  return out;
}

namespace detail {

ExtraInputs extras_for(const TrainConfig& config) {
  ExtraInputs extras;
  if (config.parameters) {
    extras.sigma = config.parameters->sigma.has_value();
    extras.rate = config.parameters->rate.has_value();
  }
  return extras;
}

NetworkSpec per_step_spec(const TrainConfig& config, std::size_t dim, int out_width) {
  const ArchitectureSpec& arch = config.architecture;
  NetworkSpec spec;
  const int w = arch.width(dim);
  spec.layer_sizes.assign(static_cast<std::size_t>(arch.hidden_layers) + 2, w);
  spec.layer_sizes.front() = static_cast<int>(dim) + extras_for(config).width(dim);
  spec.layer_sizes.back() = out_width;
  spec.batchnorm = arch.batchnorm;
  spec.output_bn_affine = arch.output_bn_affine;
  return spec;
}

Network fresh_network(const TrainConfig& config, const NetworkSpec& spec, std::uint64_t index) {
  RandomStream stream = RandomStream(config.seed, kInitStream).substream(index);
  return init_network(spec, stream);
}

PathBatch training_batch(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                         std::uint64_t iteration, StepRange range) {
  SimulationOptions options;
  options.steps = range;
  options.parameters = config.parameters;
  const RandomStream stream = RandomStream(config.seed, kBatchStream).substream(iteration);
  return simulate_paths(model, grid, config.batch_size, config.initial, stream, options);
}

Trainer::Trainer(const TrainConfig& config, std::string algorithm) : config_(config), algorithm_(std::move(algorithm)) {
  config_.validate();
  history_.batch_size = config_.batch_size;
}

bool Trainer::run(const std::string& label, long step, const std::function<double(std::uint64_t)>& body) {
  LossSegment segment{label, step, history_.loss.size(), history_.loss.size(), false};
  for (std::size_t it = 0; it < config_.max_iterations; ++it) {
    const std::uint64_t global = history_.loss.size() + 1;
    const double loss = body(global);
    if (!std::isfinite(loss) || loss < 0.0)
      throw NumericError(algorithm_ + ": invalid loss " + std::to_string(loss) + " in " + label + " at iteration " +
                         std::to_string(it + 1) + " (global step " + std::to_string(global) + ")");
    history_.loss.push_back(loss);
    history_.learning_rate.push_back(config_.schedule.rate(global));
    const std::span<const double> own(history_.loss.data() + segment.begin, history_.loss.size() - segment.begin);
    if (stopping_criterion(own, config_.window, config_.epsilon)) {
      segment.converged = true;
      break;
    }
  }
  segment.end = history_.loss.size();
  if (!segment.converged) {
    converged_ = false;
    warn(label + ": stopping criterion not met within " + std::to_string(config_.max_iterations) + " iterations");
  }
  if (config_.log) {
    std::ostringstream os;
    os << algorithm_ << ' ' << label << ": " << segment.end - segment.begin << " iterations, loss "
       << std::setprecision(4) << history_.loss.back() << (segment.converged ? "" : " (not converged)");
    config_.log(os.str());
  }
  history_.segments.push_back(segment);
  return segment.converged;
}

void Trainer::warn(const std::string& message) {
  warnings_.push_back(message);
  if (config_.log) config_.log("warning: " + message);
}

TrainResult Trainer::finish(ControlVariateModel model) {
  model.extras = extras_for(config_);
  model.metadata["algorithm"] = algorithm_;
  model.metadata["seed"] = config_.seed;
  model.metadata["epsilon"] = config_.epsilon;
  model.metadata["batch_size"] = config_.batch_size;
  model.metadata["window"] = config_.window;
  model.metadata["training_steps"] = history_.optimizer_steps();
  model.metadata["training_paths"] = history_.paths_consumed();
  model.metadata["converged"] = converged_;
  model.validate();
  TrainResult out;
  out.model = std::move(model);
  out.history = std::move(history_);
  out.converged = converged_;
  out.warnings = std::move(warnings_);
  return out;
}

LambdaEstimate fresh_lambda(const ControlVariateModel& cv, const TrainConfig& config, const MarketModel& model,
                            const TimeGrid& grid, const Payoff& payoff) {
  SimulationOptions options;
  options.parameters = config.parameters;
  const RandomStream stream(config.seed, kLambdaStream);
  const PathBatch paths = simulate_paths(model, grid, config.batch_size, config.initial, stream, options);
  const Eigen::RowVectorXd xi = discounted_payoff(paths, payoff);
  const Eigen::RowVectorXd m = martingale_sum(cv, paths, model);
  return optimal_lambda(std::span<const double>(xi.data(), static_cast<std::size_t>(xi.size())),
                        std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

}  // namespace detail
}  // namespace deepcv
