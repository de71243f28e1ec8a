#pragma once

#include <cstdint>
#include <span>

namespace deepcv {

/// One-pass mean / central second moment (Welford) with Chan's pairwise merge.
class SampleMoments {
 public:
  void add(double x) noexcept;
  void add(std::span<const double> xs) noexcept;
  void merge(const SampleMoments& other) noexcept;

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Sum of squared deviations from the mean.
  double m2() const noexcept { return m2_; }
  /// Unbiased sample variance (0 for fewer than two samples).
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double population_variance() const noexcept { return n_ > 0 ? m2_ / static_cast<double>(n_) : 0.0; }
  /// Standard error of the mean.
  double std_error() const noexcept;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Joint moments of pairs (x, y): both variances and the co-moment.
class BivariateMoments {
 public:
  void add(double x, double y) noexcept;
  void merge(const BivariateMoments& other) noexcept;

  std::uint64_t count() const noexcept { return n_; }
  double mean_x() const noexcept { return mean_x_; }
  double mean_y() const noexcept { return mean_y_; }
  double variance_x() const noexcept { return n_ > 1 ? m2x_ / static_cast<double>(n_ - 1) : 0.0; }
  double variance_y() const noexcept { return n_ > 1 ? m2y_ / static_cast<double>(n_ - 1) : 0.0; }
  double covariance() const noexcept { return n_ > 1 ? cxy_ / static_cast<double>(n_ - 1) : 0.0; }
  /// Pearson correlation; 0 when either variance vanishes.
  double correlation() const noexcept;

 private:
  std::uint64_t n_ = 0;
  double mean_x_ = 0.0, mean_y_ = 0.0;
  double m2x_ = 0.0, m2y_ = 0.0, cxy_ = 0.0;
};

}  // namespace deepcv
