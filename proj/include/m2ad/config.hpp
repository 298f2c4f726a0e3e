#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "m2ad/asset_score.hpp"
#include "m2ad/data_model.hpp"
#include "m2ad/discrepancy.hpp"
#include "m2ad/forecaster.hpp"

namespace m2ad {

struct SplitConfig {
    double train_fraction = 0.7;
    std::optional<std::int64_t> train_end_time; // overrides the fraction
};

struct PreprocessingConfig {
    std::int64_t resample_step_seconds = 0; // 0 = keep native sampling
    bool scale = true;
    std::vector<CovariateRule> covariate_rules;
};

struct ForecasterConfig {
    std::size_t window = 120;
    std::size_t hidden = 32;
    TrainOptions train; // epochs 30, lr 1e-3, batch 64, patience 5, seed 42
};

// Per-sensor error shaping; per-system entries override the defaults.
struct ErrorSettings {
    ErrorMode mode = ErrorMode::point;
    std::optional<double> beta;     // unset: 0.1 for point, off for area
    std::size_t halfwidth = 2;      // area window parameter l
    TailMode tail = TailMode::two_sided;

    DiscrepancyConfig discrepancy() const;
};

struct DiscrepancySettings {
    ErrorSettings defaults;
    std::map<std::string, ErrorSettings> per_system;
    std::map<std::string, ErrorSettings> per_sensor; // key: system.sensor.summary

    const ErrorSettings& for_system(const std::string& system) const;
    // Most specific wins: sensor column, then system, then defaults.
    const ErrorSettings& for_sensor(const SensorMeta& meta) const;
};

struct GmmSettings {
    int default_components = 0; // 0 = auto (BIC selection)
    std::size_t m_max = 3;
    std::map<std::string, int> per_system; // 0 = auto for that system too
    std::uint64_t seed = 7;
    std::size_t max_iter = 300;
    double tol = 1e-7;

    int components_for(const std::string& system) const;
};

struct ScoringSettings {
    WeightMode weight_mode = WeightMode::hierarchical;
    double significance = 0.01;
    std::size_t max_gap = 0;
};

enum class EvalMode { detection, predictive };

struct EvaluationSettings {
    EvalMode mode = EvalMode::detection;
    double lead_min_days = 1.0;
    double lead_max_days = 7.0;
};

struct PipelineConfig {
    std::string asset = "asset";
    SplitConfig split;
    PreprocessingConfig preprocessing;
    ForecasterConfig forecaster;
    DiscrepancySettings discrepancy;
    GmmSettings gmm;
    ScoringSettings scoring;
    EvaluationSettings evaluation;
};

// Every key is optional; absent sections fall back to the defaults above.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);

// Canonical serialized form (sorted keys); hashing this pins provenance.
std::string canonical_config(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

} // namespace m2ad
