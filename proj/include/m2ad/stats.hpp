#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace m2ad::stats {

// Standard normal CDF. Absolute error well below 1e-12 (erfc based).
double normal_cdf(double x);

// Regularized incomplete gamma: lower P(a, x) and upper Q(a, x) = 1 - P(a, x).
// Series for x < a + 1, continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// log Q(a, x), usable far past double underflow of Q itself. Relative error
// of the tail evaluation <= ~1e-14 (Lentz continued fraction to machine eps).
double log_gamma_q(double a, double x);

// Gamma(shape alpha, scale theta) distribution.
double gamma_cdf(double alpha, double theta, double x);
double gamma_sf(double alpha, double theta, double x);
double log_gamma_sf(double alpha, double theta, double x);

// Inverse CDF by bracketed bisection with Newton polish.
// Round trip gamma_cdf(alpha, theta, gamma_quantile(alpha, theta, q)) == q
// holds to 1e-8; x itself resolved to 1e-10 absolute.
double gamma_quantile(double alpha, double theta, double q);

// Sample moments. variance() uses the unbiased (n-1) estimator.
double mean(std::span<const double> xs);
double variance(std::span<const double> xs);
double stdev(std::span<const double> xs);

// Even-count median is the mean of the two middle values.
double median(std::vector<double> xs);

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> xs, double q);

} // namespace m2ad::stats
