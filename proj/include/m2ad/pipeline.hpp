#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "m2ad/asset_score.hpp"
#include "m2ad/config.hpp"
#include "m2ad/data_model.hpp"
#include "m2ad/discrepancy.hpp"
#include "m2ad/forecaster.hpp"
#include "m2ad/interpret.hpp"
#include "m2ad/sensor_score.hpp"

namespace m2ad {

inline constexpr int kArtifactVersion = 1;

// Preprocessing state a stored model needs to transform inference data the
// same way the training data was transformed.
struct PreprocessParams {
    std::int64_t resample_step_seconds = 0;
    bool scale = true;
    std::vector<CovariateRule> covariate_rules; // boundaries resolved
    std::vector<std::string> covariate_names;
    std::vector<int> covariate_cardinality;
    std::vector<ScaleParams> scaling; // per sensor
};

// Deterministic provenance; derived from inputs only so rerunning the same
// training produces byte-identical artifacts.
struct Provenance {
    std::string config_hash;
    std::size_t train_rows = 0;
    std::int64_t data_start_time = 0;
    std::int64_t train_end_time = 0;
};

// Everything cmd_train produces and cmd_detect consumes.
struct TrainedModel {
    int format_version = kArtifactVersion;
    std::string asset_id;
    PreprocessParams preprocessing;
    std::vector<SensorMeta> sensor_meta;
    std::vector<DiscrepancyConfig> sensor_errors; // per sensor
    ForecastModel forecaster;
    std::vector<GmmModel> gmms; // one per sensor
    AssetCalibration calibration;
    std::size_t event_max_gap = 0;
    Provenance provenance;

    void validate() const;
};

struct TrainOutcome {
    TrainedModel model;
    TrainReport report;
};

// Full training pass: preprocess, window, fit the forecaster, model the
// training errors, calibrate the asset-level score.
TrainOutcome train_pipeline(const AssetFrame& raw, const PipelineConfig& config);

// Preprocessed view of the training data (shared by the ablation harness).
struct PreparedTraining {
    AssetFrame frame;
    SplitSpec split;
    std::vector<CovariateRule> rules;
};
PreparedTraining preprocess_training(const AssetFrame& raw,
                                     const PipelineConfig& config);

// Per-sensor error matrix for frame rows [begin + window, end), row-aligned
// with the returned indices.
struct ErrorSeriesMatrix {
    Matrix errors; // rows x d
    std::vector<std::size_t> indices;
};
ErrorSeriesMatrix compute_errors(const ForecastModel& forecaster,
                                 std::span<const DiscrepancyConfig> sensor_errors,
                                 const AssetFrame& frame, std::size_t begin,
                                 std::size_t end);

struct DetectedEvent {
    std::int64_t start_time = 0;
    std::int64_t end_time = 0;
    std::size_t start_index = 0; // rows of the scored range
    std::size_t end_index = 0;
    double peak_score = 0.0;
    std::int64_t peak_time = 0;
    std::vector<TopContributor> contributors; // top 5 at the peak step
};

struct DetectionResult {
    std::vector<std::int64_t> timestamps; // scored steps
    std::vector<double> scores;
    std::vector<std::uint8_t> flags;
    std::vector<DetectedEvent> events;
    std::vector<std::string> missing_sensors; // artifact columns absent in data
    std::vector<std::string> ignored_columns; // data columns unknown to the model
    bool weights_renormalized = false;
};

// Scores a data frame with a trained model. Sensor columns missing from the
// data are tolerated: the forecaster sees a neutral fill and the score
// renormalizes the remaining weights.
DetectionResult detect(const TrainedModel& model, const AssetFrame& raw);

} // namespace m2ad
