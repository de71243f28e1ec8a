#pragma once

namespace deepcv {

/// Standard normal distribution function, via erfc for accuracy in both tails.
double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

/// Quantile of the chi-square distribution with `dof` degrees of freedom.
double chi_squared_quantile(double p, double dof);
/// Quantile of Student's t distribution with `dof` degrees of freedom.
double student_t_quantile(double p, double dof);

}  // namespace deepcv
