#pragma once

#include <array>

#include "deepcv/market.hpp"

namespace deepcv {

/// Price of the option to exchange asset 2 for asset 1, max(0, S1 - S2) at
/// `maturity`, discounted to today. The rate cancels in the exchange numeraire.
double margrabe_price(double s1, double s2, double maturity, double sigma_bar);

/// Spatial gradient (dV/dS1, dV/dS2) = (Phi(d1), -Phi(d2)).
std::array<double, 2> margrabe_delta(double s1, double s2, double maturity, double sigma_bar);

/// sigma_bar = sqrt((s11 - s21)^2 + (s22 - s12)^2) for a two-asset model.
double exchange_sigma_bar(const MarketModel& model);
/// Same quantity for per-path volatilities `sigma` and the model's correlation.
double exchange_sigma_bar(const MarketModel& model, double sigma1, double sigma2);

}  // namespace deepcv
