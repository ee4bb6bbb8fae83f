#pragma once

#include <span>

namespace nvcvar::stats {

double normal_pdf(double z);
double normal_cdf(double z);

/// Inverse standard normal CDF (Wichura's AS 241 rational approximation,
/// |error| well below 1e-9 over (0,1); validated in tests against a bisection
/// oracle on normal_cdf). p outside (0,1) returns +-infinity at the endpoints
/// and throws otherwise.
double normal_inv_cdf(double p);

double laplace_cdf(double x, double mu, double b);
double laplace_inv_cdf(double p, double mu, double b);

/// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t with nu degrees of freedom (unit scale).
double student_t_cdf(double t, double nu);

double mean(std::span<const double> v);
double variance(std::span<const double> v);          // population (divide by n)
double sample_autocorrelation(std::span<const double> v, int lag);
double excess_kurtosis(std::span<const double> v);

/// Ljung-Box Q statistic over lags 1..max_lag (autocorrelation diagnostic for
/// residual whiteness; reported, never used to alter results).
double ljung_box_q(std::span<const double> v, int max_lag);

} // namespace nvcvar::stats
