#include "m2ad/interpret.hpp"

#include <algorithm>
#include <cmath>

#include "m2ad/errors.hpp"

namespace m2ad {

ContributionRanking contributions(std::span<const double> pvals,
                                  std::span<const double> weights, double score) {
    if (pvals.size() != weights.size()) {
        throw ArgumentError("contributions: p-value and weight lengths differ");
    }
    if (!(score > 0.0)) {
        throw ArgumentError("contributions: score must be positive; "
                            "nothing to explain at S_t = 0");
    }

    // Mirror the per-step weight renormalization used by fisher_score_step
    // so the shares sum to 1 over the sensors present.
    double total_weight = 0.0;
    double available_weight = 0.0;
    for (std::size_t k = 0; k < pvals.size(); ++k) {
        total_weight += weights[k];
        if (!std::isnan(pvals[k])) available_weight += weights[k];
    }
    if (available_weight <= 0.0) {
        throw ArgumentError("contributions: no sensors available at this step");
    }
    const double renorm = total_weight / available_weight;

    ContributionRanking ranking;
    for (std::size_t k = 0; k < pvals.size(); ++k) {
        if (std::isnan(pvals[k])) continue;
        const double term = -2.0 * weights[k] * renorm * std::log(pvals[k]);
        ranking.ranked.push_back({k, term / score});
    }
    std::stable_sort(ranking.ranked.begin(), ranking.ranked.end(),
                     [](const Contribution& a, const Contribution& b) {
                         return a.share > b.share;
                     });
    return ranking;
}

std::vector<TopContributor> top_k(const ContributionRanking& ranking,
                                  std::span<const SensorMeta> meta, std::size_t k) {
    if (k < 1) throw ArgumentError("top_k: k must be >= 1");
    std::vector<TopContributor> out;
    const std::size_t n = std::min(k, ranking.ranked.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = ranking.ranked[i];
        out.push_back({meta[c.sensor].name, meta[c.sensor].system,
                       meta[c.sensor].summary, c.share});
    }
    return out;
}

} // namespace m2ad
