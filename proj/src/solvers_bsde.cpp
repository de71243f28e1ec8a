#include <cmath>

#include "deepcv/evaluation.hpp"
#include "solvers_internal.hpp"

namespace deepcv {
namespace {

using detail::Trainer;

// exp(-r_p (t_k - t_0)) per path.
Eigen::RowVectorXd discount_row(const PathBatch& paths, std::size_t k) {
  return (-paths.rate.array() * (paths.grid.time(k) - paths.grid.start())).exp();
}

void finish_lambda(ControlVariateModel& cv, Trainer& trainer, const TrainConfig& config, const MarketModel& model,
                   const TimeGrid& grid, const Payoff& payoff) {
  if (!config.estimate_lambda) return;
  const LambdaEstimate est = detail::fresh_lambda(cv, config, model, grid, payoff);
  if (est.degenerate)
    trainer.warn("lambda*: martingale sum has zero variance, keeping lambda = 1");
  else
    cv.lambda = est.lambda;
}

}  // namespace

TrainResult train_mrs_iterative(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                                const Payoff& payoff) {
  payoff.validate(model.dim());
  Trainer trainer(config, algorithm_name(4));
  const std::size_t steps = grid.steps();
  const ExtraInputs extras = detail::extras_for(config);
  const NetworkSpec value_spec = detail::per_step_spec(config, model.dim(), 1);
  const NetworkSpec grad_spec = detail::per_step_spec(config, model.dim(), static_cast<int>(model.dim()));

  std::vector<Network> eta(steps + 1);
  std::vector<Network> theta(steps);

  // Terminal network: eta_N(x) ~ g(x).
  eta[steps] = detail::fresh_network(config, value_spec, detail::kValueNetIndex + steps);
  {
    AdamState adam(eta[steps].parameters().size(), config.schedule);
    trainer.run("terminal", static_cast<long>(steps), [&](std::uint64_t global) {
      const PathBatch paths = detail::training_batch(config, model, grid, global - 1, StepRange{steps, steps});
      const Eigen::MatrixXd input = assemble_input(paths.states[steps], paths, extras);
      ForwardCache cache;
      const Eigen::MatrixXd out = forward_train(eta[steps], input, cache);
      const Eigen::RowVectorXd residual = out.row(0) - payoff.evaluate(paths.states[steps]);
      const double n = static_cast<double>(residual.size());
      const Gradients g = backward(eta[steps], cache, (2.0 / n) * residual);
      adam_step(eta[steps], g.parameters, adam, global);
      return residual.squaredNorm() / n;
    });
  }

  for (std::size_t m = steps; m-- > 0;) {
    const bool warm = config.warm_start;
    eta[m] = warm ? eta[m + 1] : detail::fresh_network(config, value_spec, detail::kValueNetIndex + m);
    theta[m] = (warm && m + 1 < steps) ? theta[m + 1]
                                       : detail::fresh_network(config, grad_spec, detail::kGradientNetIndex + m);
    AdamState adam_eta(eta[m].parameters().size(), config.schedule);
    AdamState adam_theta(theta[m].parameters().size(), config.schedule);
    trainer.run("step " + std::to_string(m), static_cast<long>(m), [&](std::uint64_t global) {
      const PathBatch paths = detail::training_batch(config, model, grid, global - 1, StepRange{m, m + 1});
      const Eigen::RowVectorXd d_now = discount_row(paths, m);
      const Eigen::RowVectorXd d_next = discount_row(paths, m + 1);
      const Eigen::MatrixXd noise = diffusion_increment(model, paths, m);
      const Eigen::MatrixXd input = assemble_input(paths.states[m], paths, extras);
      const Eigen::RowVectorXd next = forward(eta[m + 1], assemble_input(paths.states[m + 1], paths, extras)).row(0);

      ForwardCache eta_cache, theta_cache;
      const Eigen::RowVectorXd value = forward_train(eta[m], input, eta_cache).row(0);
      const Eigen::MatrixXd grad = forward_train(theta[m], input, theta_cache);
      const Eigen::RowVectorXd increment = grad.cwiseProduct(noise).colwise().sum();
      const Eigen::RowVectorXd residual =
          d_next.cwiseProduct(next) - d_now.cwiseProduct(value) - d_now.cwiseProduct(increment);
      const double n = static_cast<double>(residual.size());
      // dL/d(value) = -2 D_m E / n and dL/d(grad) = -2 D_m E noise / n.
      const Eigen::RowVectorXd weight = (-2.0 / n) * residual.cwiseProduct(d_now);
      const Gradients g_eta = backward(eta[m], eta_cache, weight);
      Eigen::MatrixXd up_theta = noise;
      up_theta.array().rowwise() *= weight.array();
      const Gradients g_theta = backward(theta[m], theta_cache, up_theta);
      adam_step(eta[m], g_eta.parameters, adam_eta, global);
      adam_step(theta[m], g_theta.parameters, adam_theta, global);
      return residual.squaredNorm() / n;
    });
  }

  ControlVariateModel cv;
  cv.grid = grid;
  cv.dim = model.dim();
  cv.source = GradientSource::PerStep;
  cv.gradient_nets = std::move(theta);
  cv.value_nets = std::move(eta);
  cv.extras = extras;
  finish_lambda(cv, trainer, config, model, grid, payoff);
  return trainer.finish(std::move(cv));
}

TrainResult train_mrs_joint(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                            const Payoff& payoff) {
  payoff.validate(model.dim());
  Trainer trainer(config, algorithm_name(5));
  const std::size_t steps = grid.steps();
  const std::size_t dim = model.dim();
  const ExtraInputs extras = detail::extras_for(config);
  const ArchitectureSpec& arch = config.architecture;
  const int layers = arch.joint_hidden_layers.value_or(static_cast<int>(steps));
  const int width = arch.width(dim);
  const int in = 1 + static_cast<int>(dim) + extras.width(dim);

  // Time is an input, so batch statistics would normalise a constant feature: no batch norm.
  auto joint_spec = [&](int out) {
    NetworkSpec spec;
    spec.layer_sizes.assign(static_cast<std::size_t>(layers) + 2, width);
    spec.layer_sizes.front() = in;
    spec.layer_sizes.back() = out;
    return spec;
  };
  Network eta = detail::fresh_network(config, joint_spec(1), detail::kJointNetIndex);
  Network theta = detail::fresh_network(config, joint_spec(static_cast<int>(dim)), detail::kJointNetIndex + 1);
  AdamState adam_eta(eta.parameters().size(), config.schedule);
  AdamState adam_theta(theta.parameters().size(), config.schedule);

  trainer.run("joint", -1, [&](std::uint64_t global) {
    const PathBatch paths = detail::training_batch(config, model, grid, global - 1);
    const double n = static_cast<double>(paths.n_paths());
    const double inv_steps = 1.0 / static_cast<double>(steps);

    // Pass 1: plain forward passes (the networks act column-wise, so caches can be rebuilt per block).
    std::vector<Eigen::MatrixXd> inputs(steps + 1);
    std::vector<Eigen::RowVectorXd> values(steps + 1), disc(steps + 1);
    std::vector<Eigen::MatrixXd> grads(steps), noise(steps);
    for (std::size_t k = 0; k <= steps; ++k) {
      inputs[k] = assemble_time_input(grid.time(k), paths.states[k], paths, extras);
      values[k] = forward(eta, inputs[k]).row(0);
      disc[k] = discount_row(paths, k);
      if (k < steps) {
        grads[k] = forward(theta, inputs[k]);
        noise[k] = diffusion_increment(model, paths, k);
      }
    }
    const Eigen::RowVectorXd terminal = values[steps] - payoff.evaluate(paths.states[steps]);
    double loss = terminal.squaredNorm() / n;
    std::vector<Eigen::RowVectorXd> d_value(steps + 1, Eigen::RowVectorXd::Zero(paths.rate.size()));
    std::vector<Eigen::MatrixXd> d_grad(steps);
    d_value[steps] = (2.0 / n) * terminal;
    for (std::size_t m = 0; m < steps; ++m) {
      const Eigen::RowVectorXd increment = grads[m].cwiseProduct(noise[m]).colwise().sum();
      const Eigen::RowVectorXd residual = disc[m + 1].cwiseProduct(values[m + 1]) - disc[m].cwiseProduct(values[m]) -
                                          disc[m].cwiseProduct(increment);
      loss += inv_steps * residual.squaredNorm() / n;
      const Eigen::RowVectorXd scaled = (2.0 * inv_steps / n) * residual;
      d_value[m + 1] += scaled.cwiseProduct(disc[m + 1]);
      d_value[m] -= scaled.cwiseProduct(disc[m]);
      d_grad[m] = noise[m];
      d_grad[m].array().rowwise() *= (-scaled.cwiseProduct(disc[m])).array();
    }

    // Pass 2: per-time backward passes, accumulating parameter gradients.
    Eigen::VectorXd g_eta = Eigen::VectorXd::Zero(eta.parameters().size());
    Eigen::VectorXd g_theta = Eigen::VectorXd::Zero(theta.parameters().size());
    for (std::size_t k = 0; k <= steps; ++k) {
      ForwardCache cache;
      forward(eta, inputs[k], cache);
      g_eta += backward(eta, cache, d_value[k]).parameters;
      if (k < steps) {
        ForwardCache tcache;
        forward(theta, inputs[k], tcache);
        g_theta += backward(theta, tcache, d_grad[k]).parameters;
      }
    }
    adam_step(eta, g_eta, adam_eta, global);
    adam_step(theta, g_theta, adam_theta, global);
    return loss;
  });

  ControlVariateModel cv;
  cv.grid = grid;
  cv.dim = dim;
  cv.source = GradientSource::Joint;
  cv.gradient_nets = {std::move(theta)};
  cv.value_nets = {std::move(eta)};
  cv.joint_value = true;
  cv.extras = extras;
  finish_lambda(cv, trainer, config, model, grid, payoff);
  return trainer.finish(std::move(cv));
}

}  // namespace deepcv
