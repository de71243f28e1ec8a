#include "deepcv/evaluation.hpp"
#include "solvers_internal.hpp"

namespace deepcv {
namespace {

using detail::Trainer;

// Fits `net` to 1 x n targets with a squared loss; returns the batch mean loss.
double regression_step(Network& net, const Eigen::MatrixXd& input, const Eigen::MatrixXd& target, AdamState& adam,
                       std::uint64_t global) {
  ForwardCache cache;
  const Eigen::MatrixXd out = forward_train(net, input, cache);
  const Eigen::MatrixXd residual = out - target;
  const double n = static_cast<double>(residual.cols());
  const Gradients g = backward(net, cache, (2.0 / n) * residual);
  adam_step(net, g.parameters, adam, global);
  return residual.squaredNorm() / n;
}

void maybe_estimate_lambda(ControlVariateModel& cv, Trainer& trainer, const TrainConfig& config,
                           const MarketModel& model, const TimeGrid& grid, const Payoff& payoff) {
  if (!config.estimate_lambda) return;
  const LambdaEstimate est = detail::fresh_lambda(cv, config, model, grid, payoff);
  if (est.degenerate) {
    trainer.warn("lambda*: martingale sum has zero variance, keeping lambda = 1");
    return;
  }
  cv.lambda = est.lambda;
}

}  // namespace

TrainResult train_projection(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                             const Payoff& payoff) {
  payoff.validate(model.dim());
  Trainer trainer(config, algorithm_name(1));
  const std::size_t steps = grid.steps();
  const ExtraInputs extras = detail::extras_for(config);
  const NetworkSpec spec = detail::per_step_spec(config, model.dim(), 1);

  std::vector<Network> nets;
  std::vector<AdamState> adam;
  for (std::size_t k = 0; k < steps; ++k) {
    nets.push_back(detail::fresh_network(config, spec, detail::kValueNetIndex + k));
    adam.emplace_back(nets.back().parameters().size(), config.schedule);
  }

  trainer.run("joint", -1, [&](std::uint64_t global) {
    const PathBatch paths = detail::training_batch(config, model, grid, global - 1);
    const Eigen::MatrixXd targets = projection_targets(paths, payoff, model);
    double loss = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const Eigen::MatrixXd input = assemble_input(paths.states[k], paths, extras);
      loss += regression_step(nets[k], input, targets.col(static_cast<Eigen::Index>(k)).transpose(), adam[k], global);
    }
    return loss;
  });

  ControlVariateModel cv;
  cv.grid = grid;
  cv.dim = model.dim();
  cv.source = GradientSource::ValueDerivative;
  cv.value_nets = std::move(nets);
  cv.extras = extras;
  maybe_estimate_lambda(cv, trainer, config, model, grid, payoff);
  return trainer.finish(std::move(cv));
}

TrainResult train_projection_iterative(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                                       const Payoff& payoff) {
  payoff.validate(model.dim());
  Trainer trainer(config, algorithm_name(2));
  const std::size_t steps = grid.steps();
  const ExtraInputs extras = detail::extras_for(config);
  const NetworkSpec spec = detail::per_step_spec(config, model.dim(), 1);

  std::vector<Network> nets(steps);
  for (std::size_t m = steps; m-- > 0;) {
    nets[m] = (config.warm_start && m + 1 < steps) ? nets[m + 1]
                                                     : detail::fresh_network(config, spec, detail::kValueNetIndex + m);
    AdamState adam(nets[m].parameters().size(), config.schedule);
    trainer.run("step " + std::to_string(m), static_cast<long>(m), [&](std::uint64_t global) {
      const PathBatch paths = detail::training_batch(config, model, grid, global - 1, StepRange{m, std::nullopt});
      const Eigen::MatrixXd targets = projection_targets(paths, payoff, model);
      const Eigen::MatrixXd input = assemble_input(paths.states[m], paths, extras);
      return regression_step(nets[m], input, targets.col(static_cast<Eigen::Index>(m)).transpose(), adam, global);
    });
  }

  ControlVariateModel cv;
  cv.grid = grid;
  cv.dim = model.dim();
  cv.source = GradientSource::ValueDerivative;
  cv.value_nets = std::move(nets);
  cv.extras = extras;
  maybe_estimate_lambda(cv, trainer, config, model, grid, payoff);
  return trainer.finish(std::move(cv));
}

TrainResult train_bel(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                      const Payoff& payoff) {
  payoff.validate(model.dim());
  Trainer trainer(config, algorithm_name(3));
  const std::size_t steps = grid.steps();
  const ExtraInputs extras = detail::extras_for(config);
  const NetworkSpec spec = detail::per_step_spec(config, model.dim(), static_cast<int>(model.dim()));

  std::vector<Network> nets;
  std::vector<AdamState> adam;
  for (std::size_t k = 0; k < steps; ++k) {
    nets.push_back(detail::fresh_network(config, spec, detail::kGradientNetIndex + k));
    adam.emplace_back(nets.back().parameters().size(), config.schedule);
  }

  trainer.run("joint", -1, [&](std::uint64_t global) {
    const PathBatch paths = detail::training_batch(config, model, grid, global - 1);
    const VariationalBatch variational = simulate_variational(model, paths);
    const std::vector<Eigen::MatrixXd> targets = bel_targets(paths, variational, payoff, model);
    double loss = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const Eigen::MatrixXd input = assemble_input(paths.states[k], paths, extras);
      loss += regression_step(nets[k], input, targets[k], adam[k], global);
    }
    return loss;
  });

  ControlVariateModel cv;
  cv.grid = grid;
  cv.dim = model.dim();
  cv.source = GradientSource::PerStep;
  cv.gradient_nets = std::move(nets);
  cv.extras = extras;
  maybe_estimate_lambda(cv, trainer, config, model, grid, payoff);
  return trainer.finish(std::move(cv));
}

}  // namespace deepcv
