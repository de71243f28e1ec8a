#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "deepcv/network.hpp"

namespace deepcv {

/// Piecewise-constant learning rate keyed on the global (1-based) optimizer step.
struct LearningRateSchedule {
  double initial = 1e-3;
  double decayed = 1e-4;
  std::uint64_t boundary = 10000;

  double rate(std::uint64_t step) const noexcept { return step <= boundary ? initial : decayed; }
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LearningRateSchedule schedule;

  AdamState() = default;
  explicit AdamState(Eigen::Index size, LearningRateSchedule sched = {})
      : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)), schedule(sched) {}
};

/// Bias-corrected Adam update in place. The learning rate is read from the schedule at
/// `global_step` when given (several optimizers sharing one schedule), else at the local
/// step count. Throws NumericError on non-finite gradients and ConfigError on shape mismatch.
/// Returns the learning rate used.
double adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
                 std::optional<std::uint64_t> global_step = std::nullopt);
double adam_step(Network& net, const Eigen::VectorXd& grads, AdamState& state,
                 std::optional<std::uint64_t> global_step = std::nullopt);

}  // namespace deepcv
