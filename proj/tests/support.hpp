#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "m2ad/data_model.hpp"
#include "m2ad/rng.hpp"

namespace testsupport {

// Kolmogorov-Smirnov statistic of a sample against a reference CDF.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        worst = std::max(worst, std::abs(static_cast<double>(i + 1) / n - f));
        worst = std::max(worst, std::abs(static_cast<double>(i) / n - f));
    }
    return worst;
}

// Marsaglia-Tsang gamma sampler; deterministic for a fixed Rng state.
inline double gamma_draw(m2ad::Rng& rng, double alpha, double theta) {
    if (alpha < 1.0) {
        const double u = rng.uniform();
        return gamma_draw(rng, alpha + 1.0, theta) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v * theta;
        }
    }
}

// Scratch file that deletes itself; contents written up front. Names carry
// the pid so parallel ctest runs stay apart.
class TempFile {
public:
    explicit TempFile(const std::string& contents, const std::string& suffix = ".csv") {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("m2ad_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(++counter) + suffix);
        std::ofstream out(path_);
        out << contents;
    }
    ~TempFile() { std::filesystem::remove(path_); }
    std::string path() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

// Small single-system frame: one sine sensor plus noise, hourly steps,
// no covariates.
inline m2ad::AssetFrame sine_frame(std::size_t rows, double noise, std::uint64_t seed) {
    m2ad::AssetFrame frame;
    m2ad::Rng rng(seed);
    frame.sensor_meta.push_back({"s1", "sys", "value", m2ad::TailMode::two_sided, {}});
    frame.timestamps.resize(rows);
    frame.sensors = m2ad::Matrix(rows, 1);
    frame.covariates = m2ad::Matrix(rows, 0);
    frame.covariate_cardinality = {};
    for (std::size_t i = 0; i < rows; ++i) {
        frame.timestamps[i] = static_cast<std::int64_t>(i) * 3600;
        frame.sensors(i, 0) =
            std::sin(2.0 * M_PI * static_cast<double>(i) / 24.0) + noise * rng.normal();
    }
    return frame;
}

} // namespace testsupport
