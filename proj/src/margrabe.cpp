#include "deepcv/margrabe.hpp"

#include <cmath>

#include "deepcv/errors.hpp"
#include "deepcv/normal.hpp"

namespace deepcv {
namespace {

struct Moneyness {
  double d1;
  double d2;
};

Moneyness moneyness(double s1, double s2, double maturity, double sigma_bar) {
  if (!(s1 > 0.0 && s2 > 0.0 && maturity > 0.0 && sigma_bar > 0.0))
    throw DomainError("margrabe: spots, maturity and sigma_bar must be positive");
  const double vol = sigma_bar * std::sqrt(maturity);
  const double d1 = (std::log(s1 / s2) + 0.5 * vol * vol) / vol;
  return {d1, d1 - vol};
}

}  // namespace

double margrabe_price(double s1, double s2, double maturity, double sigma_bar) {
  const auto [d1, d2] = moneyness(s1, s2, maturity, sigma_bar);
  return s1 * normal_cdf(d1) - s2 * normal_cdf(d2);
}

std::array<double, 2> margrabe_delta(double s1, double s2, double maturity, double sigma_bar) {
  const auto [d1, d2] = moneyness(s1, s2, maturity, sigma_bar);
  return {normal_cdf(d1), -normal_cdf(d2)};
}

double exchange_sigma_bar(const MarketModel& model, double sigma1, double sigma2) {
  if (model.dim() != 2) throw ConfigError("exchange sigma_bar needs a two-asset model");
  const Eigen::MatrixXd& c = model.chol().matrix;
  const double s11 = sigma1 * c(0, 0), s12 = sigma1 * c(0, 1);
  const double s21 = sigma2 * c(1, 0), s22 = sigma2 * c(1, 1);
  return std::sqrt((s11 - s21) * (s11 - s21) + (s22 - s12) * (s22 - s12));
}

double exchange_sigma_bar(const MarketModel& model) {
  if (model.dim() != 2) throw ConfigError("exchange sigma_bar needs a two-asset model");
  return exchange_sigma_bar(model, model.sigma()(0), model.sigma()(1));
}

}  // namespace deepcv
