#include "m2ad/asset_score.hpp"

#include <cmath>
#include <map>
#include <set>

#include "m2ad/errors.hpp"
#include "m2ad/stats.hpp"

namespace m2ad {

std::string to_string(WeightMode mode) {
    return mode == WeightMode::hierarchical ? "hierarchical" : "uniform";
}

WeightMode weight_mode_from_string(const std::string& s) {
    if (s == "hierarchical") return WeightMode::hierarchical;
    if (s == "uniform") return WeightMode::uniform;
    throw ArgumentError("unknown weight mode '" + s + "'");
}

std::vector<double> default_weights(std::span<const SensorMeta> meta, WeightMode mode) {
    if (meta.empty()) throw ArgumentError("default_weights: no sensors");

    std::vector<double> weights(meta.size());
    if (mode == WeightMode::uniform) {
        for (std::size_t k = 0; k < meta.size(); ++k) {
            weights[k] = meta[k].weight.value_or(1.0 / static_cast<double>(meta.size()));
        }
        return weights;
    }

    std::set<std::string> systems;
    std::map<std::string, std::set<std::string>> sensors_per_system;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> summaries;
    for (const auto& m : meta) {
        systems.insert(m.system);
        sensors_per_system[m.system].insert(m.name);
        summaries[{m.system, m.name}].insert(m.summary);
    }

    const double n_systems = static_cast<double>(systems.size());
    for (std::size_t k = 0; k < meta.size(); ++k) {
        if (meta[k].weight) {
            weights[k] = *meta[k].weight;
            continue;
        }
        const double n_sensors =
            static_cast<double>(sensors_per_system[meta[k].system].size());
        const double n_summaries = static_cast<double>(
            summaries[{meta[k].system, meta[k].name}].size());
        weights[k] = 1.0 / (n_systems * n_sensors * n_summaries);
    }
    return weights;
}

void AssetCalibration::validate() const {
    if (weights.empty()) throw NumericError("calibration has no weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw NumericError("calibration weight invalid");
        }
        total += w;
    }
    if (!(total > 0.0)) throw NumericError("all calibration weights are zero");
    if (!(alpha > 0.0) || !(theta > 0.0)) {
        throw NumericError("calibration Gamma parameters must be positive");
    }
    if (!(significance > 0.0 && significance < 1.0)) {
        throw NumericError("calibration significance outside (0, 1)");
    }
}

double fisher_score_step(std::span<const double> pvals,
                         std::span<const double> weights) {
    if (pvals.size() != weights.size()) {
        throw ArgumentError("fisher_score: p-value and weight lengths differ");
    }
    double total_weight = 0.0;
    double available_weight = 0.0;
    for (std::size_t k = 0; k < pvals.size(); ++k) {
        total_weight += weights[k];
        if (std::isnan(pvals[k])) continue;
        if (!(pvals[k] > 0.0 && pvals[k] <= 1.0)) {
            throw ArgumentError("fisher_score: p-value outside (0, 1]");
        }
        available_weight += weights[k];
    }
    if (available_weight <= 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }

    const double renorm = total_weight / available_weight;
    double s = 0.0;
    for (std::size_t k = 0; k < pvals.size(); ++k) {
        if (std::isnan(pvals[k])) continue;
        s += weights[k] * renorm * std::log(pvals[k]);
    }
    return -2.0 * s;
}

std::vector<double> fisher_score(const Matrix& pvals, std::span<const double> weights) {
    std::vector<double> scores(pvals.rows());
    for (std::size_t t = 0; t < pvals.rows(); ++t) {
        scores[t] = fisher_score_step(
            std::span<const double>(pvals.row(t), pvals.cols()), weights);
    }
    return scores;
}

std::pair<double, double> fit_gamma_moments(std::span<const double> train_scores) {
    if (train_scores.size() < 30) {
        throw ArgumentError("fit_gamma_moments: need at least 30 scores, got " +
                            std::to_string(train_scores.size()));
    }
    const double m = stats::mean(train_scores);
    const double v = stats::variance(train_scores);
    if (!(v > 0.0)) {
        throw NumericError("fit_gamma_moments: zero variance in training scores; "
                           "calibration is degenerate");
    }
    if (!(m > 0.0)) {
        throw NumericError("fit_gamma_moments: nonpositive mean score");
    }
    return {m * m / v, v / m};
}

AssetCalibration calibrate(std::span<const double> train_scores,
                           std::vector<double> weights, double significance) {
    if (!(significance > 0.0 && significance < 1.0)) {
        throw ArgumentError("calibrate: significance must lie in (0, 1)");
    }
    AssetCalibration cal;
    cal.weights = std::move(weights);
    std::tie(cal.alpha, cal.theta) = fit_gamma_moments(train_scores);
    cal.significance = significance;
    cal.gamma_threshold = stats::gamma_quantile(cal.alpha, cal.theta, 1.0 - significance);
    cal.train_mean = stats::mean(train_scores);
    cal.train_variance = stats::variance(train_scores);
    cal.validate();
    return cal;
}

std::vector<std::uint8_t> flag(std::span<const double> scores,
                               const AssetCalibration& calibration) {
    calibration.validate();
    std::vector<std::uint8_t> z(scores.size(), 0);
    for (std::size_t t = 0; t < scores.size(); ++t) {
        if (std::isnan(scores[t])) continue;
        z[t] = scores[t] > calibration.gamma_threshold ? 1 : 0;
    }
    return z;
}

std::vector<AnomalyEvent> extract_events(std::span<const std::uint8_t> flags,
                                         std::span<const double> scores,
                                         std::size_t max_gap) {
    if (flags.size() != scores.size()) {
        throw ArgumentError("extract_events: flag and score lengths differ");
    }
    std::vector<AnomalyEvent> events;
    for (std::size_t t = 0; t < flags.size(); ++t) {
        if (!flags[t]) continue;
        if (!events.empty() && t - events.back().end - 1 <= max_gap) {
            events.back().end = t;
        } else {
            events.push_back({t, t, scores[t], t});
        }
        if (scores[t] > events.back().peak_score) {
            events.back().peak_score = scores[t];
            events.back().peak_index = t;
        }
    }
    return events;
}

} // namespace m2ad
