#include "deepcv/network.hpp"

#include <cmath>

#include "deepcv/errors.hpp"

namespace deepcv {
namespace {

void validate_spec(const NetworkSpec& spec) {
  if (spec.layer_sizes.size() < 2) throw ConfigError("network needs at least an input and an output layer");
  for (std::size_t k = 0; k < spec.layer_sizes.size(); ++k)
    if (spec.layer_sizes[k] < 1) throw ConfigError("layer " + std::to_string(k) + " has width below one");
  if (spec.batchnorm && !(spec.bn_epsilon > 0.0)) throw ConfigError("batch-norm epsilon must be positive");
  if (spec.batchnorm && !(spec.bn_momentum >= 0.0 && spec.bn_momentum <= 1.0))
    throw ConfigError("batch-norm momentum must lie in [0, 1]");
}

}  // namespace

std::size_t parameter_count(const NetworkSpec& spec) {
  validate_spec(spec);
  const auto& l = spec.layer_sizes;
  std::size_t count = 0;
  for (std::size_t k = 1; k < l.size(); ++k)
    count += static_cast<std::size_t>(l[k - 1]) * static_cast<std::size_t>(l[k]) + static_cast<std::size_t>(l[k]);
  if (spec.batchnorm) {
    for (std::size_t s = 0; s < l.size(); ++s) {
      if (s + 1 == l.size() && !spec.output_bn_affine) continue;
      count += 2 * static_cast<std::size_t>(l[s]);
    }
  }
  return count;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  validate_spec(spec_);
  const auto& l = spec_.layer_sizes;
  const std::size_t layer_count = l.size() - 1;
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < layer_count; ++k) {
    weight_offset_.push_back(offset);
    offset += static_cast<Eigen::Index>(l[k]) * l[k + 1];
    bias_offset_.push_back(offset);
    offset += l[k + 1];
  }
  Eigen::Index running = 0;
  if (spec_.batchnorm) {
    for (std::size_t s = 0; s <= layer_count; ++s) {
      const bool affine = s < layer_count || spec_.output_bn_affine;
      gamma_offset_.push_back(affine ? offset : -1);
      if (affine) offset += l[s];
      beta_offset_.push_back(affine ? offset : -1);
      if (affine) offset += l[s];
      mean_offset_.push_back(running);
      running += l[s];
      var_offset_.push_back(running);
      running += l[s];
    }
  }
  params_ = Eigen::VectorXd::Zero(offset);
  running_ = Eigen::VectorXd::Zero(running);
  for (std::size_t s = 0; s < bn_sites(); ++s) {
    if (gamma_offset_[s] >= 0) params_.segment(gamma_offset_[s], l[s]).setOnes();
    running_.segment(var_offset_[s], l[s]).setOnes();
  }
}

Eigen::Map<const Eigen::MatrixXd> Network::weight(std::size_t k) const {
  return {params_.data() + weight_offset_.at(k), spec_.layer_sizes[k + 1], spec_.layer_sizes[k]};
}

Eigen::Map<const Eigen::VectorXd> Network::bias(std::size_t k) const {
  return {params_.data() + bias_offset_.at(k), spec_.layer_sizes[k + 1]};
}

Eigen::Map<Eigen::MatrixXd> Network::mutable_weight(std::size_t k) {
  ++revision_;
  return {params_.data() + weight_offset_.at(k), spec_.layer_sizes[k + 1], spec_.layer_sizes[k]};
}

Eigen::Map<Eigen::VectorXd> Network::mutable_bias(std::size_t k) {
  ++revision_;
  return {params_.data() + bias_offset_.at(k), spec_.layer_sizes[k + 1]};
}

Eigen::VectorXd Network::gamma(std::size_t site) const {
  const Eigen::Index off = gamma_offset_.at(site);
  return off >= 0 ? Eigen::VectorXd(params_.segment(off, spec_.layer_sizes[site]))
                  : Eigen::VectorXd::Ones(spec_.layer_sizes[site]);
}

Eigen::VectorXd Network::beta(std::size_t site) const {
  const Eigen::Index off = beta_offset_.at(site);
  return off >= 0 ? Eigen::VectorXd(params_.segment(off, spec_.layer_sizes[site]))
                  : Eigen::VectorXd::Zero(spec_.layer_sizes[site]);
}

Eigen::Map<const Eigen::VectorXd> Network::running_mean(std::size_t site) const {
  return {running_.data() + mean_offset_.at(site), spec_.layer_sizes[site]};
}

Eigen::Map<const Eigen::VectorXd> Network::running_var(std::size_t site) const {
  return {running_.data() + var_offset_.at(site), spec_.layer_sizes[site]};
}

Network init_network(const NetworkSpec& spec, RandomStream& stream) {
  Network net(spec);
  Eigen::VectorXd& params = net.mutable_parameters();
  for (std::size_t k = 0; k < net.layers(); ++k) {
    const int fan_in = spec.layer_sizes[k];
    const double scale = std::sqrt(2.0 / fan_in);
    const Eigen::Index count = static_cast<Eigen::Index>(fan_in) * spec.layer_sizes[k + 1];
    for (Eigen::Index i = 0; i < count; ++i) params(net.weight_offset(k) + i) = scale * stream.next_normal();
  }
  return net;
}

namespace {

// Applies normalisation site `site` to `x` in place and records what backward needs.
void normalize_site(const Network& net, std::size_t site, Eigen::MatrixXd& x, Mode mode, ForwardCache* cache,
                    Eigen::VectorXd* running) {
  const NetworkSpec& spec = net.spec();
  const Eigen::Index n = x.cols();
  Eigen::VectorXd inv_std;
  if (mode == Mode::Train) {
    const Eigen::VectorXd mean = x.rowwise().mean();
    x.colwise() -= mean;
    const Eigen::VectorXd var = x.rowwise().squaredNorm() / static_cast<double>(n);
    inv_std = (var.array() + spec.bn_epsilon).rsqrt().matrix();
    if (running != nullptr) {
      const double m = spec.bn_momentum;
      const double unbiased = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
      const auto w = static_cast<Eigen::Index>(mean.size());
      running->segment(net.running_mean_offset(site), w) =
          (1.0 - m) * running->segment(net.running_mean_offset(site), w) + m * mean;
      running->segment(net.running_var_offset(site), w) =
          (1.0 - m) * running->segment(net.running_var_offset(site), w) + (m * unbiased) * var;
    }
  } else {
    x.colwise() -= net.running_mean(site);
    inv_std = (net.running_var(site).array() + spec.bn_epsilon).rsqrt().matrix();
  }
  x = inv_std.asDiagonal() * x;
  if (cache != nullptr) {
    cache->normalized[site] = x;
    cache->inv_std[site] = inv_std;
  }
  if (net.site_affine(site)) {
    x = net.gamma(site).asDiagonal() * x;
    x.colwise() += net.beta(site);
  }
}

Eigen::MatrixXd run_forward(const Network& net, const Eigen::MatrixXd& input, Mode mode, ForwardCache* cache,
                            Eigen::VectorXd* running) {
  if (net.layers() == 0) throw ConfigError("forward: network is empty");
  if (input.rows() != net.input_width())
    throw ConfigError("forward: input width " + std::to_string(input.rows()) + " does not match network input " +
                      std::to_string(net.input_width()));
  const bool bn = net.spec().batchnorm;
  const std::size_t layer_count = net.layers();
  if (cache != nullptr) {
    cache->network = &net;
    cache->mode = mode;
    cache->batch = input.cols();
    cache->layer_inputs.resize(layer_count);
    cache->hidden.resize(layer_count > 0 ? layer_count - 1 : 0);
    cache->normalized.assign(net.bn_sites(), {});
    cache->inv_std.assign(net.bn_sites(), {});
  }

  Eigen::MatrixXd a = input;
  if (bn) normalize_site(net, 0, a, mode, cache, running);
  for (std::size_t k = 0; k < layer_count; ++k) {
    Eigen::MatrixXd z(net.spec().layer_sizes[k + 1], a.cols());
    z.noalias() = net.weight(k) * a;
    z.colwise() += net.bias(k);
    if (bn) normalize_site(net, k + 1, z, mode, cache, running);
    if (cache != nullptr) cache->layer_inputs[k] = std::move(a);
    if (k + 1 < layer_count) {
      a = z.cwiseMax(0.0);
      if (cache != nullptr) cache->hidden[k] = std::move(z);
    } else {
      a = std::move(z);
    }
  }
  if (cache != nullptr) cache->revision = net.revision();
  return a;
}

// Reverse pass through normalisation site `site`; `g` holds dL/d(output of site).
void normalize_backward(const Network& net, const ForwardCache& cache, std::size_t site, Eigen::MatrixXd& g,
                        Eigen::VectorXd& grads) {
  const Eigen::MatrixXd& xhat = cache.normalized[site];
  const Eigen::VectorXd& inv_std = cache.inv_std[site];
  const auto w = static_cast<Eigen::Index>(inv_std.size());
  if (net.site_affine(site)) {
    grads.segment(net.gamma_offset(site), w) += g.cwiseProduct(xhat).rowwise().sum();
    grads.segment(net.beta_offset(site), w) += g.rowwise().sum();
    g = net.gamma(site).asDiagonal() * g;
  }
  if (cache.mode == Mode::Train) {
    const double n = static_cast<double>(g.cols());
    const Eigen::VectorXd mean_g = g.rowwise().sum() / n;
    const Eigen::VectorXd mean_gx = g.cwiseProduct(xhat).rowwise().sum() / n;
    g.colwise() -= mean_g;
    g -= mean_gx.asDiagonal() * xhat;
  }
  g = inv_std.asDiagonal() * g;
}

}  // namespace

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& input) {
  return run_forward(net, input, Mode::Eval, nullptr, nullptr);
}

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& input, ForwardCache& cache) {
  return run_forward(net, input, Mode::Eval, &cache, nullptr);
}

Eigen::MatrixXd forward_train(Network& net, const Eigen::MatrixXd& input, ForwardCache& cache,
                              bool update_running_stats) {
  // Running statistics do not enter the training-mode output, so updating them in
  // place keeps the cache valid (revision is taken before the update is visible).
  Eigen::VectorXd running = net.running_stats();
  Eigen::MatrixXd out = run_forward(net, input, Mode::Train, &cache, update_running_stats ? &running : nullptr);
  if (update_running_stats && net.bn_sites() > 0) {
    const std::uint64_t before = net.revision();
    net.mutable_running_stats() = running;
    if (cache.revision == before) cache.revision = net.revision();
  }
  return out;
}

Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& upstream) {
  if (cache.network != &net || cache.revision != net.revision())
    throw ConfigError("backward: stale forward cache (network changed since the forward pass)");
  if (upstream.rows() != net.output_width() || upstream.cols() != cache.batch)
    throw ConfigError("backward: upstream gradient has the wrong shape");

  Gradients out;
  out.parameters = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  const bool bn = net.spec().batchnorm;
  const std::size_t layer_count = net.layers();

  Eigen::MatrixXd g = upstream;
  if (bn) normalize_backward(net, cache, layer_count, g, out.parameters);
  for (std::size_t k = layer_count; k-- > 0;) {
    const Eigen::MatrixXd& a = cache.layer_inputs[k];
    Eigen::Map<Eigen::MatrixXd> dw(out.parameters.data() + net.weight_offset(k), net.weight(k).rows(),
                                   net.weight(k).cols());
    dw.noalias() += g * a.transpose();
    out.parameters.segment(net.bias_offset(k), g.rows()) += g.rowwise().sum();
    Eigen::MatrixXd next(a.rows(), g.cols());
    next.noalias() = net.weight(k).transpose() * g;
    if (k > 0) {
      next = next.cwiseProduct((cache.hidden[k - 1].array() > 0.0).cast<double>().matrix());
      if (bn) normalize_backward(net, cache, k, next, out.parameters);
    }
    g = std::move(next);
  }
  if (bn) normalize_backward(net, cache, 0, g, out.parameters);
  out.input = std::move(g);
  return out;
}

}  // namespace deepcv
