#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "m2ad/data_model.hpp"

namespace m2ad {

// P-value floor; keeps -log p, and with it every Fisher term, finite.
inline constexpr double kPValueFloor = 1e-15;

struct GmmComponent {
    double weight = 1.0;
    double mean = 0.0;
    double stdev = 1.0;
};

// Univariate Gaussian mixture over one sensor's training errors.
// Components stay sorted by mean; weights sum to 1 within 1e-9.
struct GmmModel {
    std::vector<GmmComponent> components;
    TailMode tail_mode = TailMode::two_sided;

    // Fit diagnostics.
    double log_likelihood = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> ll_trace; // per-iteration log-likelihood

    std::size_t component_count() const { return components.size(); }
    void validate() const;
};

struct EmOptions {
    std::uint64_t seed = 0;
    std::size_t max_iter = 300;
    double tol = 1e-7; // relative log-likelihood change
};

// Expectation-maximization from quantile-spread initialization, best of
// 3 seeded restarts. m=1 falls back to the closed-form mean/stdev fit.
GmmModel em_fit(std::span<const double> errors, std::size_t components,
                const EmOptions& options = {});

// -2 * total log-likelihood + k ln(n), k = 3m - 1 free parameters.
double bic(const GmmModel& model, std::span<const double> errors);

struct ComponentSelection {
    GmmModel model;
    std::size_t chosen;
    std::vector<double> bic_values; // per candidate m = 1..m_max
};

// Fits m = 1..m_max and keeps the BIC minimizer; ties go to smaller m.
ComponentSelection select_components(std::span<const double> errors,
                                     std::size_t m_max,
                                     const EmOptions& options = {});

// Mixture CDF via the error function; monotone with limits 0 and 1.
double gmm_cdf(const GmmModel& model, double x);

// Tail probability of e under the model, clamped to [kPValueFloor, 1].
double p_value(const GmmModel& model, double e);

// Total log-likelihood of the data under the model.
double gmm_log_likelihood(const GmmModel& model, std::span<const double> xs);

} // namespace m2ad
