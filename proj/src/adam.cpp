#include "deepcv/adam.hpp"

#include <cmath>

#include "deepcv/errors.hpp"

namespace deepcv {

double adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
                 std::optional<std::uint64_t> global_step) {
  if (grads.size() != params.size()) throw ConfigError("adam: gradient and parameter sizes differ");
  if (state.m.size() == 0 && state.t == 0) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ConfigError("adam: optimizer state does not match the parameter vector");
  if (!grads.allFinite()) {
    Eigen::Index bad = 0;
    for (; bad < grads.size(); ++bad)
      if (!std::isfinite(grads(bad))) break;
    throw NumericError("adam: non-finite gradient at parameter index " + std::to_string(bad) + " (step " +
                       std::to_string(state.t + 1) + ")");
  }
  ++state.t;
  const double lr = state.schedule.rate(global_step.value_or(state.t));
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
  return lr;
}

double adam_step(Network& net, const Eigen::VectorXd& grads, AdamState& state,
                 std::optional<std::uint64_t> global_step) {
  return adam_step(net.mutable_parameters(), grads, state, global_step);
}

}  // namespace deepcv
