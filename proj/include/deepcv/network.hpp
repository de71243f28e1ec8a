#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "deepcv/random.hpp"

namespace deepcv {

/// Architecture of a fully connected ReLU network with layer widths
/// l_0 (input), l_1..l_{L-1} (hidden) and l_L (output).
///
/// With `batchnorm` enabled there are L + 1 normalisation sites: on the raw
/// input, before every hidden activation and after the final linear map.
struct NetworkSpec {
  std::vector<int> layer_sizes;
  bool batchnorm = false;
  /// Whether the output site carries trainable scale/shift (otherwise 1 and 0).
  bool output_bn_affine = true;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;

  bool operator==(const NetworkSpec&) const = default;
};

/// Closed-form parameter count: sum_k (l_{k-1} l_k + l_k) plus 2 * width for every
/// affine batch-norm site.
std::size_t parameter_count(const NetworkSpec& spec);

/// Parameters of one network. All trainable values live in one contiguous vector
/// (weights, biases, then batch-norm scale/shift) so optimisers and checkpoints see
/// a flat array; weight/bias accessors are views into it. Weights are stored
/// out x in, so a layer computes W * a + b on column-major batches.
class Network {
 public:
  Network() = default;
  /// Zero weights and biases, unit scale, zero shift, running statistics (0, 1).
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::size_t layers() const noexcept { return spec_.layer_sizes.empty() ? 0 : spec_.layer_sizes.size() - 1; }
  int input_width() const { return spec_.layer_sizes.front(); }
  int output_width() const { return spec_.layer_sizes.back(); }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(params_.size()); }
  std::size_t bn_sites() const noexcept { return spec_.batchnorm ? layers() + 1 : 0; }
  bool site_affine(std::size_t site) const { return gamma_offset_.at(site) >= 0; }
  int site_width(std::size_t site) const { return spec_.layer_sizes.at(site); }

  const Eigen::VectorXd& parameters() const noexcept { return params_; }
  /// Mutable access; invalidates existing forward caches.
  Eigen::VectorXd& mutable_parameters() noexcept {
    ++revision_;
    return params_;
  }
  const Eigen::VectorXd& running_stats() const noexcept { return running_; }
  Eigen::VectorXd& mutable_running_stats() noexcept {
    ++revision_;
    return running_;
  }
  std::uint64_t revision() const noexcept { return revision_; }

  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t k) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t k) const;
  Eigen::Map<Eigen::MatrixXd> mutable_weight(std::size_t k);
  Eigen::Map<Eigen::VectorXd> mutable_bias(std::size_t k);

  /// Scale and shift of a normalisation site (ones/zeros when the site is not affine).
  Eigen::VectorXd gamma(std::size_t site) const;
  Eigen::VectorXd beta(std::size_t site) const;
  Eigen::Map<const Eigen::VectorXd> running_mean(std::size_t site) const;
  Eigen::Map<const Eigen::VectorXd> running_var(std::size_t site) const;

  // Offsets into the flat vectors, used by forward/backward.
  Eigen::Index weight_offset(std::size_t k) const { return weight_offset_.at(k); }
  Eigen::Index bias_offset(std::size_t k) const { return bias_offset_.at(k); }
  Eigen::Index gamma_offset(std::size_t site) const { return gamma_offset_.at(site); }
  Eigen::Index beta_offset(std::size_t site) const { return beta_offset_.at(site); }
  Eigen::Index running_mean_offset(std::size_t site) const { return mean_offset_.at(site); }
  Eigen::Index running_var_offset(std::size_t site) const { return var_offset_.at(site); }

 private:
  NetworkSpec spec_;
  Eigen::VectorXd params_;
  Eigen::VectorXd running_;
  std::vector<Eigen::Index> weight_offset_, bias_offset_, gamma_offset_, beta_offset_, mean_offset_, var_offset_;
  std::uint64_t revision_ = 0;
};

/// He-initialised network: weights N(0, 2 / fan_in), zero biases.
/// Throws ConfigError for fewer than two layers or a width below one.
Network init_network(const NetworkSpec& spec, RandomStream& stream);

enum class Mode { Train, Eval };

/// Intermediates of one forward pass, consumed by `backward`.
struct ForwardCache {
  const Network* network = nullptr;
  std::uint64_t revision = 0;
  Mode mode = Mode::Eval;
  Eigen::Index batch = 0;
  std::vector<Eigen::MatrixXd> layer_inputs;  // input of linear layer k
  std::vector<Eigen::MatrixXd> hidden;        // activation argument of hidden layer k
  std::vector<Eigen::MatrixXd> normalized;    // x-hat per normalisation site
  std::vector<Eigen::VectorXd> inv_std;       // 1 / sqrt(var + eps) per site
};

/// Evaluation-mode forward pass on a features x samples batch (running batch-norm statistics).
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& input);
/// Evaluation-mode forward pass that records a cache for input/parameter gradients.
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& input, ForwardCache& cache);
/// Training-mode forward pass: batch statistics in normalisation sites, running
/// statistics updated with the configured momentum.
Eigen::MatrixXd forward_train(Network& net, const Eigen::MatrixXd& input, ForwardCache& cache,
                              bool update_running_stats = true);

struct Gradients {
  Eigen::VectorXd parameters;  // same layout as Network::parameters()
  Eigen::MatrixXd input;       // l_0 x samples
};

/// Exact reverse-mode gradients of sum(upstream .* output). ReLU'(0) is taken as 0.
/// Throws ConfigError when the cache is stale (parameters changed since the forward
/// pass, or it belongs to another network) or `upstream` has the wrong shape.
Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& upstream);

}  // namespace deepcv
