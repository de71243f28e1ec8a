#include "deepcv/evaluation.hpp"
#include "solvers_internal.hpp"

namespace deepcv {
namespace {

using detail::Trainer;

using LossFn = BatchLoss (*)(const Eigen::RowVectorXd&, const Eigen::RowVectorXd&);

// Shared loop of the variance and correlation solvers: per-step gradient networks feed
// the martingale sum M of a full path batch and `loss_fn` scores (Xi, M).
ControlVariateModel train_martingale_loss(Trainer& trainer, const TrainConfig& config, const MarketModel& model,
                                          const TimeGrid& grid, const Payoff& payoff, LossFn loss_fn) {
  const std::size_t steps = grid.steps();
  const ExtraInputs extras = detail::extras_for(config);
  const NetworkSpec spec = detail::per_step_spec(config, model.dim(), static_cast<int>(model.dim()));
  std::vector<Network> nets;
  std::vector<AdamState> adam;
  for (std::size_t k = 0; k < steps; ++k) {
    nets.push_back(detail::fresh_network(config, spec, detail::kGradientNetIndex + k));
    adam.emplace_back(nets.back().parameters().size(), config.schedule);
  }
  bool warned = false;

  std::vector<ForwardCache> caches(steps);
  trainer.run("joint", -1, [&](std::uint64_t global) {
    const PathBatch paths = detail::training_batch(config, model, grid, global - 1);
    const std::vector<Eigen::MatrixXd> terms = discounted_noise_terms(paths, model);
    const Eigen::RowVectorXd xi = discounted_payoff(paths, payoff);
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(xi.size());
    for (std::size_t k = 0; k < steps; ++k) {
      const Eigen::MatrixXd out = forward_train(nets[k], assemble_input(paths.states[k], paths, extras), caches[k]);
      m += out.cwiseProduct(terms[k]).colwise().sum();
    }
    const BatchLoss loss = loss_fn(xi, m);
    if (loss.degenerate) {
      if (!warned) trainer.warn("degenerate batch (zero sample variance), gradient step skipped");
      warned = true;
      return loss.loss;
    }
    for (std::size_t k = 0; k < steps; ++k) {
      Eigen::MatrixXd upstream = terms[k];
      upstream.array().rowwise() *= loss.d_m.array();
      const Gradients g = backward(nets[k], caches[k], upstream);
      adam_step(nets[k], g.parameters, adam[k], global);
    }
    return loss.loss;
  });

  ControlVariateModel cv;
  cv.grid = grid;
  cv.dim = model.dim();
  cv.source = GradientSource::PerStep;
  cv.gradient_nets = std::move(nets);
  cv.extras = extras;
  return cv;
}

}  // namespace

TrainResult train_var_min(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                          const Payoff& payoff) {
  payoff.validate(model.dim());
  Trainer trainer(config, algorithm_name(6));
  ControlVariateModel cv = train_martingale_loss(trainer, config, model, grid, payoff, &variance_loss);
  cv.lambda = 1.0;
  if (config.estimate_lambda) {
    const LambdaEstimate est = detail::fresh_lambda(cv, config, model, grid, payoff);
    cv.metadata["lambda_star"] = est.lambda;
  }
  return trainer.finish(std::move(cv));
}

TrainResult train_corr_max(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                           const Payoff& payoff) {
  payoff.validate(model.dim());
  Trainer trainer(config, algorithm_name(7));
  ControlVariateModel cv = train_martingale_loss(trainer, config, model, grid, payoff, &correlation_loss);
  const LambdaEstimate est = detail::fresh_lambda(cv, config, model, grid, payoff);
  if (est.degenerate) trainer.warn("lambda*: martingale sum has zero variance on the fresh batch");
  cv.lambda = est.lambda;
  return trainer.finish(std::move(cv));
}

}  // namespace deepcv
