#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "m2ad/matrix.hpp"

namespace m2ad {

enum class TailMode { two_sided, upper, lower };

std::string to_string(TailMode mode);
TailMode tail_mode_from_string(const std::string& s);

// One telemetry channel: (system, name, summary) is unique within an asset.
struct SensorMeta {
    std::string name;
    std::string system;
    std::string summary;
    TailMode tail_mode = TailMode::two_sided;
    std::optional<double> weight;

    std::string column() const { return system + "." + name + "." + summary; }
};

// Train-fitted affine map: lo -> -1, hi -> +1.
struct ScaleParams {
    double lo = 0.0;
    double hi = 1.0;

    double scale(double x) const { return 2.0 * (x - lo) / (hi - lo) - 1.0; }
    double unscale(double y) const { return lo + (y + 1.0) * (hi - lo) / 2.0; }
};

// Aligned multi-system telemetry for one asset. Missing cells are NaN until
// preprocessing fills them.
struct AssetFrame {
    std::vector<std::int64_t> timestamps; // epoch seconds, strictly increasing
    Matrix sensors;                       // T x d
    Matrix covariates;                    // T x m, small integer codes
    std::vector<SensorMeta> sensor_meta;
    std::vector<std::string> covariate_names;
    std::vector<int> covariate_cardinality; // one-hot width per covariate
    std::vector<ScaleParams> scaling;       // per sensor, set once scaled

    std::size_t rows() const { return timestamps.size(); }
    std::size_t sensor_count() const { return sensor_meta.size(); }
    std::size_t covariate_count() const { return covariate_names.size(); }
    bool scaled() const { return !scaling.empty(); }

    // Index of the sensor with the given column name, if present.
    std::optional<std::size_t> find_sensor(const std::string& column) const;

    // Throws SchemaError if shapes or timestamp ordering are broken.
    void validate() const;
};

struct SplitSpec {
    std::size_t train_end = 0; // exclusive row index

    void validate(std::size_t total_rows) const;
};

// Sliding-window supervision pairs: each input block is the `window` rows
// immediately preceding its target row; targets hold sensor columns only.
struct WindowedDataset {
    std::size_t window = 0;
    std::size_t input_width = 0; // d + one-hot expanded covariate width
    std::vector<Matrix> inputs;  // each window x input_width
    std::vector<std::vector<double>> targets;
    std::vector<std::size_t> target_indices; // frame row of each target

    std::size_t size() const { return inputs.size(); }
};

struct CovariateRule {
    enum class Kind { quantile, threshold };

    std::string column;
    Kind kind = Kind::quantile;
    double threshold = 98.0;         // threshold rule: code 1 iff value > threshold
    std::vector<double> boundaries;  // resolved cutpoints (filled when fitted)
};

// Parses the CSV schema: first column `timestamp` (ISO-8601 or epoch
// seconds), sensor columns `system.sensor.summary`, covariates `cov.<name>`.
// Rows come back sorted by timestamp; empty cells are NaN.
AssetFrame load_csv(const std::string& path);

// Per-column median over [t, t+step) buckets; empty buckets stay as missing
// rows so the output keeps a constant step. Covariates take the bucket mode.
AssetFrame resample_median(const AssetFrame& frame, std::int64_t step_seconds);

// Linear interpolation of missing sensor runs (edges held at the nearest
// observed value); covariate gaps are forward-filled, leading gaps
// backfilled. Each column needs at least one observed value.
AssetFrame fill_missing(const AssetFrame& frame);

// fill_missing, then per-sensor affine scaling fitted on the train range:
// train min -> -1, train max -> +1. fit_scaling=false records an identity
// scale instead (preprocessing with scaling turned off).
AssetFrame interpolate_and_scale(const AssetFrame& frame, const SplitSpec& split,
                                 bool fit_scaling = true);

// Fits rule cutpoints on the train portion (terciles for quantile rules) and
// recodes the covariate columns. Resolved boundaries are written back into
// `rules` so a stored model can re-apply them verbatim.
AssetFrame discretize_covariates(const AssetFrame& frame, const SplitSpec& split,
                                 std::vector<CovariateRule>& rules);

// Applies already-resolved rules (inference path).
AssetFrame apply_covariate_rules(const AssetFrame& frame,
                                 const std::vector<CovariateRule>& rules);

// Windows over frame rows [begin, end). Covariate codes are one-hot expanded
// inside the input blocks.
WindowedDataset make_windows(const AssetFrame& frame, std::size_t window,
                             std::size_t begin, std::size_t end);

// Forecaster input row width for this frame: d + sum of covariate
// cardinalities.
std::size_t input_width(const AssetFrame& frame);

// One window x input_width block of the rows immediately preceding
// target_row. No whole-frame validation; used on hot prediction paths.
Matrix window_block(const AssetFrame& frame, std::size_t window,
                    std::size_t target_row);

// Timestamp helpers shared by the CSV loader and the CLI.
std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t epoch_seconds);

} // namespace m2ad
