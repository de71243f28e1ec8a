#pragma once

// Shared plumbing for the training algorithms.

#include <cstdint>
#include <functional>
#include <string>

#include "deepcv/errors.hpp"
#include "deepcv/solvers.hpp"

namespace deepcv::detail {

// Stream ids under the training seed.
inline constexpr std::uint64_t kInitStream = 0x1001;
inline constexpr std::uint64_t kBatchStream = 0x1002;
inline constexpr std::uint64_t kLambdaStream = 0x1003;
// Offsets separating gradient and value networks in the init stream.
inline constexpr std::uint64_t kValueNetIndex = 0;
inline constexpr std::uint64_t kGradientNetIndex = 1u << 20;
inline constexpr std::uint64_t kJointNetIndex = 1u << 21;

ExtraInputs extras_for(const TrainConfig& config);
NetworkSpec per_step_spec(const TrainConfig& config, std::size_t dim, int out_width);
Network fresh_network(const TrainConfig& config, const NetworkSpec& spec, std::uint64_t index);

/// Simulates the batch for global iteration `iteration` over `range`.
PathBatch training_batch(const TrainConfig& config, const MarketModel& model, const TimeGrid& grid,
                         std::uint64_t iteration, StepRange range = {});

/// Owns the loss history and the global optimizer step counter.
class Trainer {
 public:
  Trainer(const TrainConfig& config, std::string algorithm);

  /// Repeats body(global_step) (1-based; returns the batch loss after updating) until the
  /// stopping criterion holds on this segment or max_iterations is reached.
  bool run(const std::string& label, long step, const std::function<double(std::uint64_t)>& body);

  std::uint64_t steps() const noexcept { return history_.loss.size(); }
  TrainResult finish(ControlVariateModel model);
  void warn(const std::string& message);

 private:
  const TrainConfig& config_;
  std::string algorithm_;
  LossHistory history_;
  bool converged_ = true;
  std::vector<std::string> warnings_;
};

/// lambda* of `cv` on a fresh batch of the training size.
LambdaEstimate fresh_lambda(const ControlVariateModel& cv, const TrainConfig& config, const MarketModel& model,
                            const TimeGrid& grid, const Payoff& payoff);

}  // namespace deepcv::detail
