#include "m2ad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "m2ad/errors.hpp"

namespace m2ad::stats {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Lower series: P(a,x) = x^a e^-x / Gamma(a) * sum_n x^n / (a(a+1)..(a+n)).
// Returns the sum; caller applies the prefactor.
double lower_series_sum(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) return sum;
    }
    throw NumericError("incomplete gamma series failed to converge");
}

// Upper continued fraction (modified Lentz): Q(a,x) = prefactor * cf.
double upper_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) return h;
    }
    throw NumericError("incomplete gamma continued fraction failed to converge");
}

double log_prefactor(double a, double x) {
    return a * std::log(x) - x - std::lgamma(a);
}

} // namespace

double gamma_p(double a, double x) {
    if (a <= 0.0) throw ArgumentError("gamma_p: shape must be positive");
    if (x < 0.0) throw ArgumentError("gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) {
        return std::exp(log_prefactor(a, x)) * lower_series_sum(a, x);
    }
    return 1.0 - std::exp(log_prefactor(a, x)) * upper_cf(a, x);
}

double gamma_q(double a, double x) {
    if (a <= 0.0) throw ArgumentError("gamma_q: shape must be positive");
    if (x < 0.0) throw ArgumentError("gamma_q: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) {
        return 1.0 - std::exp(log_prefactor(a, x)) * lower_series_sum(a, x);
    }
    return std::exp(log_prefactor(a, x)) * upper_cf(a, x);
}

double log_gamma_q(double a, double x) {
    if (a <= 0.0) throw ArgumentError("log_gamma_q: shape must be positive");
    if (x < 0.0) throw ArgumentError("log_gamma_q: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) {
        const double p = std::exp(log_prefactor(a, x)) * lower_series_sum(a, x);
        return std::log1p(-p);
    }
    return log_prefactor(a, x) + std::log(upper_cf(a, x));
}

double gamma_cdf(double alpha, double theta, double x) {
    if (alpha <= 0.0 || theta <= 0.0) {
        throw ArgumentError("gamma_cdf: alpha and theta must be positive");
    }
    if (x <= 0.0) return 0.0;
    return gamma_p(alpha, x / theta);
}

double gamma_sf(double alpha, double theta, double x) {
    if (alpha <= 0.0 || theta <= 0.0) {
        throw ArgumentError("gamma_sf: alpha and theta must be positive");
    }
    if (x <= 0.0) return 1.0;
    return gamma_q(alpha, x / theta);
}

double log_gamma_sf(double alpha, double theta, double x) {
    if (alpha <= 0.0 || theta <= 0.0) {
        throw ArgumentError("log_gamma_sf: alpha and theta must be positive");
    }
    if (x <= 0.0) return 0.0;
    return log_gamma_q(alpha, x / theta);
}

double gamma_quantile(double alpha, double theta, double q) {
    if (alpha <= 0.0 || theta <= 0.0) {
        throw ArgumentError("gamma_quantile: alpha and theta must be positive");
    }
    if (!(q > 0.0 && q < 1.0)) {
        throw ArgumentError("gamma_quantile: q must lie in (0, 1)");
    }

    // Bracket from the mean outward; bisection is cheap at these scales.
    double hi = alpha * theta;
    if (hi <= 0.0 || !std::isfinite(hi)) hi = 1.0;
    while (gamma_cdf(alpha, theta, hi) < q) {
        hi *= 2.0;
        if (hi > 1e300) throw NumericError("gamma_quantile: bracket overflow");
    }
    double lo = 0.0;

    double x = 0.5 * (lo + hi);
    for (int i = 0; i < kMaxIter; ++i) {
        const double f = gamma_cdf(alpha, theta, x) - q;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        if (hi - lo < 1e-10 && std::abs(f) < 1e-12) break;
        if (hi - lo < kEps * std::max(1.0, lo)) break;
        x = 0.5 * (lo + hi);
    }

    // Newton polish sharpens the round trip through the CDF.
    for (int i = 0; i < 3; ++i) {
        const double f = gamma_cdf(alpha, theta, x) - q;
        const double u = x / theta;
        const double logpdf =
            (alpha - 1.0) * std::log(u) - u - std::lgamma(alpha) - std::log(theta);
        const double pdf = std::exp(logpdf);
        if (pdf <= 0.0 || !std::isfinite(pdf)) break;
        const double step = f / pdf;
        const double next = x - step;
        if (next <= lo || next >= hi) break;
        x = next;
        if (std::abs(step) < 1e-12 * std::max(1.0, x)) break;
    }
    return x;
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw ArgumentError("mean: empty input");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    if (xs.size() < 2) throw ArgumentError("variance: need at least 2 samples");
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) {
        const double d = x - m;
        s += d * d;
    }
    return s / static_cast<double>(xs.size() - 1);
}

double stdev(std::span<const double> xs) {
    return std::sqrt(variance(xs));
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw ArgumentError("median: empty input");
    const std::size_t n = xs.size();
    std::sort(xs.begin(), xs.end());
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw ArgumentError("quantile: empty input");
    if (q < 0.0 || q > 1.0) throw ArgumentError("quantile: q must lie in [0, 1]");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= xs.size()) return xs.back();
    const double frac = pos - static_cast<double>(i);
    return xs[i] + frac * (xs[i + 1] - xs[i]);
}

} // namespace m2ad::stats
