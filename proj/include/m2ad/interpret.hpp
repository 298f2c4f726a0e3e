#pragma once

#include <span>
#include <string>
#include <vector>

#include "m2ad/data_model.hpp"

namespace m2ad {

// One sensor's share of an asset-level score at a flagged step.
struct Contribution {
    std::size_t sensor = 0; // index into the sensor metadata
    double share = 0.0;     // in [0, 1]; shares over available sensors sum to 1
};

struct ContributionRanking {
    std::vector<Contribution> ranked; // descending share, index-ascending ties

    std::size_t size() const { return ranked.size(); }
};

// Normalized shares c_k = (-2 lambda_k log p_k) / S_t over the sensors with
// data at this step. S_t must be the matching fisher_score_step output.
ContributionRanking contributions(std::span<const double> pvals,
                                  std::span<const double> weights, double score);

struct TopContributor {
    std::string sensor;
    std::string system;
    std::string summary;
    double share = 0.0;
};

// First min(k, available) entries with system names attached.
std::vector<TopContributor> top_k(const ContributionRanking& ranking,
                                  std::span<const SensorMeta> meta, std::size_t k);

} // namespace m2ad
