#pragma once

#include <span>
#include <string>
#include <vector>

namespace m2ad {

enum class ErrorMode { point, area };

std::string to_string(ErrorMode mode);
ErrorMode error_mode_from_string(const std::string& s);

// Per-sensor discrepancy settings. EWMA defaults on for point errors
// (beta 0.1) and off for area errors, which already average.
struct DiscrepancyConfig {
    ErrorMode mode = ErrorMode::point;
    double beta = 0.1; // 0 disables smoothing
    std::size_t area_halfwidth = 2;

    std::vector<double> apply(std::span<const double> observed,
                              std::span<const double> predicted) const;
};

// e_t = |x_t - y_t|; magnitude only.
std::vector<double> point_error(std::span<const double> x, std::span<const double> y);

// Signed mean residual over the 2l+1 points centered at t; edge windows
// truncate to the available points.
std::vector<double> area_error(std::span<const double> x, std::span<const double> y,
                               std::size_t halfwidth);

// s_0 = e_0; s_t = beta*e_t + (1-beta)*s_{t-1}.
std::vector<double> ewma_smooth(std::span<const double> e, double beta);

} // namespace m2ad
