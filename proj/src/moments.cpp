#include "deepcv/moments.hpp"

#include <cmath>

namespace deepcv {

void SampleMoments::add(double x) noexcept {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void SampleMoments::add(std::span<const double> xs) noexcept {
  for (double x : xs) add(x);
}

void SampleMoments::merge(const SampleMoments& other) noexcept {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

double SampleMoments::std_error() const noexcept {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

void BivariateMoments::add(double x, double y) noexcept {
  ++n_;
  const double n = static_cast<double>(n_);
  const double dx = x - mean_x_;
  const double dy = y - mean_y_;
  mean_x_ += dx / n;
  mean_y_ += dy / n;
  m2x_ += dx * (x - mean_x_);
  m2y_ += dy * (y - mean_y_);
  cxy_ += dx * (y - mean_y_);
}

void BivariateMoments::merge(const BivariateMoments& other) noexcept {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double dx = other.mean_x_ - mean_x_;
  const double dy = other.mean_y_ - mean_y_;
  mean_x_ += dx * nb / n;
  mean_y_ += dy * nb / n;
  m2x_ += other.m2x_ + dx * dx * na * nb / n;
  m2y_ += other.m2y_ + dy * dy * na * nb / n;
  cxy_ += other.cxy_ + dx * dy * na * nb / n;
  n_ += other.n_;
}

double BivariateMoments::correlation() const noexcept {
  if (!(m2x_ > 0.0) || !(m2y_ > 0.0)) return 0.0;
  return cxy_ / std::sqrt(m2x_ * m2y_);
}

}  // namespace deepcv
