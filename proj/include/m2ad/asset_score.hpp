#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "m2ad/data_model.hpp"
#include "m2ad/matrix.hpp"

namespace m2ad {

enum class WeightMode { hierarchical, uniform };

std::string to_string(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& s);

// Hierarchical weights: sensor k in system s gets
// 1 / (#systems * #sensor-names-in-s * #summaries-of-that-name).
// Any weight already present on the metadata wins.
std::vector<double> default_weights(std::span<const SensorMeta> meta, WeightMode mode);

// Gamma-calibrated threshold for the asset-level Fisher score.
struct AssetCalibration {
    std::vector<double> weights;
    double alpha = 0.0;
    double theta = 0.0;
    double significance = 0.01;
    double gamma_threshold = 0.0;
    double train_mean = 0.0;     // retained for audit
    double train_variance = 0.0;

    void validate() const;
};

// Weighted Fisher statistic for one time step: -2 sum_k lambda_k log p_k.
// NaN p-values mark sensors without data at this step; their weight mass is
// renormalized over the available sensors so the score scale is preserved.
// All-missing steps return NaN.
double fisher_score_step(std::span<const double> pvals, std::span<const double> weights);

// Row-wise fisher_score_step over a (T x d) p-value matrix.
std::vector<double> fisher_score(const Matrix& pvals, std::span<const double> weights);

// Moment matching with the unbiased variance estimator:
// alpha = mean^2 / var, theta = var / mean. Needs >= 30 samples.
std::pair<double, double> fit_gamma_moments(std::span<const double> train_scores);

// Fits Gamma moments and derives the threshold at 1 - significance.
AssetCalibration calibrate(std::span<const double> train_scores,
                           std::vector<double> weights, double significance);

// z_t = 1 iff S_t > gamma (strict); NaN scores never flag.
std::vector<std::uint8_t> flag(std::span<const double> scores,
                               const AssetCalibration& calibration);

struct AnomalyEvent {
    std::size_t start = 0; // inclusive indices into the score series
    std::size_t end = 0;
    double peak_score = 0.0;
    std::size_t peak_index = 0;
};

// Maximal runs of flagged steps; runs separated by <= max_gap zeros merge.
std::vector<AnomalyEvent> extract_events(std::span<const std::uint8_t> flags,
                                         std::span<const double> scores,
                                         std::size_t max_gap);

} // namespace m2ad
