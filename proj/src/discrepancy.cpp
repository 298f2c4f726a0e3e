#include "m2ad/discrepancy.hpp"

#include <algorithm>
#include <cmath>

#include "m2ad/errors.hpp"

namespace m2ad {

std::string to_string(ErrorMode mode) {
    return mode == ErrorMode::point ? "point" : "area";
}

ErrorMode error_mode_from_string(const std::string& s) {
    if (s == "point") return ErrorMode::point;
    if (s == "area") return ErrorMode::area;
    throw ArgumentError("unknown error mode '" + s + "'");
}

std::vector<double> point_error(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ArgumentError("point_error: length mismatch (" + std::to_string(x.size()) +
                            " vs " + std::to_string(y.size()) + ")");
    }
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::abs(x[i] - y[i]);
    return e;
}

std::vector<double> area_error(std::span<const double> x, std::span<const double> y,
                               std::size_t halfwidth) {
    if (x.size() != y.size()) {
        throw ArgumentError("area_error: length mismatch (" + std::to_string(x.size()) +
                            " vs " + std::to_string(y.size()) + ")");
    }
    if (halfwidth == 0) throw ArgumentError("area_error: halfwidth must be >= 1");

    const std::size_t n = x.size();
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = x[i] - y[i];

    std::vector<double> e(n);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t lo = t >= halfwidth ? t - halfwidth : 0;
        const std::size_t hi = std::min(n - 1, t + halfwidth);
        double sum = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) sum += residual[i];
        e[t] = sum / static_cast<double>(hi - lo + 1);
    }
    return e;
}

std::vector<double> ewma_smooth(std::span<const double> e, double beta) {
    if (e.empty()) throw ArgumentError("ewma_smooth: empty input");
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw ArgumentError("ewma_smooth: beta must lie in (0, 1]");
    }
    std::vector<double> s(e.size());
    s[0] = e[0];
    for (std::size_t t = 1; t < e.size(); ++t) {
        s[t] = beta * e[t] + (1.0 - beta) * s[t - 1];
    }
    return s;
}

std::vector<double> DiscrepancyConfig::apply(std::span<const double> observed,
                                             std::span<const double> predicted) const {
    std::vector<double> e = mode == ErrorMode::point
                                ? point_error(observed, predicted)
                                : area_error(observed, predicted, area_halfwidth);
    if (mode == ErrorMode::point && beta > 0.0 && beta < 1.0) {
        e = ewma_smooth(e, beta);
    }
    return e;
}

} // namespace m2ad
