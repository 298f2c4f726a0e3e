#include "m2ad/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "m2ad/errors.hpp"
#include "m2ad/parallel.hpp"
#include "m2ad/rng.hpp"

namespace m2ad {

namespace {

constexpr double kMissingValue = std::numeric_limits<double>::quiet_NaN();

// Rethrows module errors with the pipeline stage attached.
template <typename F>
auto stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const ArgumentError& e) {
        throw ArgumentError(std::string(name) + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(std::string(name) + ": " + e.what());
    } catch (const SchemaError& e) {
        throw SchemaError(std::string(name) + ": " + e.what());
    }
}

std::size_t resolve_split(const AssetFrame& frame, const SplitConfig& split) {
    if (split.train_end_time) {
        std::size_t n = 0;
        while (n < frame.rows() && frame.timestamps[n] < *split.train_end_time) ++n;
        return n;
    }
    return static_cast<std::size_t>(
        std::floor(static_cast<double>(frame.rows()) * split.train_fraction));
}

std::vector<DiscrepancyConfig> build_sensor_errors(
    const std::vector<SensorMeta>& meta, const DiscrepancySettings& settings) {
    std::vector<DiscrepancyConfig> out;
    out.reserve(meta.size());
    for (const auto& m : meta) {
        out.push_back(settings.for_sensor(m).discrepancy());
    }
    return out;
}

Matrix pvalue_matrix(const std::vector<GmmModel>& gmms, const ErrorSeriesMatrix& errors,
                     const std::vector<bool>& sensor_available) {
    Matrix pvals(errors.errors.rows(), errors.errors.cols());
    for (std::size_t t = 0; t < pvals.rows(); ++t) {
        for (std::size_t k = 0; k < pvals.cols(); ++k) {
            pvals(t, k) = sensor_available[k]
                              ? p_value(gmms[k], errors.errors(t, k))
                              : kMissingValue;
        }
    }
    return pvals;
}

} // namespace

void TrainedModel::validate() const {
    if (format_version != kArtifactVersion) {
        throw SchemaError("unsupported artifact version " +
                          std::to_string(format_version));
    }
    const std::size_t d = sensor_meta.size();
    if (d == 0) throw SchemaError("artifact has no sensors");
    if (gmms.size() != d || sensor_errors.size() != d ||
        preprocessing.scaling.size() != d || calibration.weights.size() != d) {
        throw SchemaError("artifact per-sensor tables disagree with sensor count");
    }
    if (forecaster.output_dim != d) {
        throw SchemaError("forecaster output dimension disagrees with sensor count");
    }
    if (forecaster.params.size() != forecaster.param_count()) {
        throw SchemaError("forecaster parameter vector has the wrong length");
    }
    if (forecaster.window == 0) throw SchemaError("forecaster window missing");
    for (const auto& gmm : gmms) gmm.validate();
    calibration.validate();
}

PreparedTraining preprocess_training(const AssetFrame& raw,
                                     const PipelineConfig& config) {
    return stage("preprocessing", [&]() {
        PreparedTraining prepared;
        prepared.frame = config.preprocessing.resample_step_seconds > 0
                             ? resample_median(raw, config.preprocessing.resample_step_seconds)
                             : raw;

        prepared.split = SplitSpec{resolve_split(prepared.frame, config.split)};
        prepared.split.validate(prepared.frame.rows());

        // Tail overrides ride on the sensor metadata so the error models can
        // copy them later.
        for (auto& meta : prepared.frame.sensor_meta) {
            meta.tail_mode = config.discrepancy.for_sensor(meta).tail;
        }

        prepared.rules = config.preprocessing.covariate_rules;
        if (!prepared.rules.empty()) {
            prepared.frame =
                discretize_covariates(prepared.frame, prepared.split, prepared.rules);
        }
        prepared.frame = interpolate_and_scale(prepared.frame, prepared.split,
                                               config.preprocessing.scale);
        return prepared;
    });
}

ErrorSeriesMatrix compute_errors(const ForecastModel& forecaster,
                                 std::span<const DiscrepancyConfig> sensor_errors,
                                 const AssetFrame& frame, std::size_t begin,
                                 std::size_t end) {
    const PredictionSeries pred = predict_series(forecaster, frame, begin, end);
    const std::size_t rows = pred.indices.size();
    const std::size_t d = frame.sensor_count();
    if (sensor_errors.size() != d) {
        throw ArgumentError("compute_errors: per-sensor settings disagree with frame");
    }

    ErrorSeriesMatrix out;
    out.errors = Matrix(rows, d);
    out.indices = pred.indices;
    std::vector<double> observed(rows), predicted(rows);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t t = 0; t < rows; ++t) {
            observed[t] = frame.sensors(pred.indices[t], k);
            predicted[t] = pred.predictions(t, k);
        }
        const std::vector<double> e = sensor_errors[k].apply(observed, predicted);
        for (std::size_t t = 0; t < rows; ++t) out.errors(t, k) = e[t];
    }
    return out;
}

TrainOutcome train_pipeline(const AssetFrame& raw, const PipelineConfig& config) {
    PreparedTraining prepared = preprocess_training(raw, config);
    const AssetFrame& frame = prepared.frame;
    const std::size_t n = prepared.split.train_end;
    const std::size_t d = frame.sensor_count();
    const std::size_t w = config.forecaster.window;

    TrainOutcome outcome;
    TrainedModel& model = outcome.model;

    stage("forecaster", [&]() {
        const WindowedDataset dataset = make_windows(frame, w, 0, n);
        model.forecaster = init_forecaster(dataset.input_width, config.forecaster.hidden,
                                           d, config.forecaster.train.seed);
        outcome.report = train(model.forecaster, dataset, config.forecaster.train);
        return 0;
    });

    model.sensor_errors = build_sensor_errors(frame.sensor_meta, config.discrepancy);

    const ErrorSeriesMatrix train_errors = stage("discrepancy", [&]() {
        return compute_errors(model.forecaster, model.sensor_errors, frame, 0, n);
    });

    stage("sensor models", [&]() {
        model.gmms.resize(d);
        // Fits are independent per sensor; assemble in sensor order.
        parallel_for(d, [&](std::size_t k) {
            std::vector<double> errs(train_errors.errors.rows());
            for (std::size_t t = 0; t < errs.size(); ++t) {
                errs[t] = train_errors.errors(t, k);
            }
            EmOptions opts;
            opts.seed = derive_seed(config.gmm.seed, k);
            opts.max_iter = config.gmm.max_iter;
            opts.tol = config.gmm.tol;
            const int m = config.gmm.components_for(frame.sensor_meta[k].system);
            GmmModel fitted =
                m == 0 ? select_components(errs, config.gmm.m_max, opts).model
                       : em_fit(errs, static_cast<std::size_t>(m), opts);
            fitted.tail_mode = frame.sensor_meta[k].tail_mode;
            model.gmms[k] = std::move(fitted);
        });
        return 0;
    });

    stage("calibration", [&]() {
        const std::vector<double> weights =
            default_weights(frame.sensor_meta, config.scoring.weight_mode);
        const std::vector<bool> available(d, true);
        const Matrix pvals = pvalue_matrix(model.gmms, train_errors, available);
        const std::vector<double> train_scores = fisher_score(pvals, weights);
        model.calibration =
            calibrate(train_scores, weights, config.scoring.significance);
        return 0;
    });

    model.asset_id = config.asset;
    model.event_max_gap = config.scoring.max_gap;
    model.sensor_meta = frame.sensor_meta;
    model.preprocessing.resample_step_seconds = config.preprocessing.resample_step_seconds;
    model.preprocessing.scale = config.preprocessing.scale;
    model.preprocessing.covariate_rules = prepared.rules;
    model.preprocessing.covariate_names = frame.covariate_names;
    model.preprocessing.covariate_cardinality = frame.covariate_cardinality;
    model.preprocessing.scaling = frame.scaling;
    model.provenance.config_hash = config_hash(config);
    model.provenance.train_rows = n;
    model.provenance.data_start_time = frame.timestamps.front();
    model.provenance.train_end_time = frame.timestamps[n - 1];
    model.validate();
    return outcome;
}

DetectionResult detect(const TrainedModel& model, const AssetFrame& raw) {
    model.validate();
    DetectionResult result;

    // Rebuild the frame in the model's column order.
    AssetFrame frame;
    frame.timestamps = raw.timestamps;
    frame.sensor_meta = model.sensor_meta;
    frame.covariate_names = model.preprocessing.covariate_names;
    frame.covariate_cardinality = model.preprocessing.covariate_cardinality;
    const std::size_t d = model.sensor_meta.size();
    const std::size_t t_raw = raw.rows();

    std::vector<bool> sensor_available(d, true);
    frame.sensors = Matrix(t_raw, d, kMissingValue);
    for (std::size_t k = 0; k < d; ++k) {
        const auto src = raw.find_sensor(model.sensor_meta[k].column());
        if (!src) {
            sensor_available[k] = false;
            result.missing_sensors.push_back(model.sensor_meta[k].column());
            continue;
        }
        for (std::size_t i = 0; i < t_raw; ++i) {
            frame.sensors(i, k) = raw.sensors(i, *src);
        }
    }
    for (const auto& meta : raw.sensor_meta) {
        if (!std::any_of(model.sensor_meta.begin(), model.sensor_meta.end(),
                         [&](const SensorMeta& m) {
                             return m.column() == meta.column();
                         })) {
            result.ignored_columns.push_back(meta.column());
        }
    }

    frame.covariates = Matrix(t_raw, frame.covariate_names.size(), kMissingValue);
    for (std::size_t j = 0; j < frame.covariate_names.size(); ++j) {
        std::size_t src = raw.covariate_names.size();
        for (std::size_t c = 0; c < raw.covariate_names.size(); ++c) {
            if (raw.covariate_names[c] == frame.covariate_names[j]) {
                src = c;
                break;
            }
        }
        if (src == raw.covariate_names.size()) {
            throw SchemaError("detect: data is missing covariate column '" +
                              frame.covariate_names[j] + "' required by the model");
        }
        for (std::size_t i = 0; i < t_raw; ++i) {
            frame.covariates(i, j) = raw.covariates(i, src);
        }
    }

    if (model.preprocessing.resample_step_seconds > 0) {
        frame = resample_median(frame, model.preprocessing.resample_step_seconds);
    }
    if (!model.preprocessing.covariate_rules.empty()) {
        frame = apply_covariate_rules(frame, model.preprocessing.covariate_rules);
    }
    frame.covariate_cardinality = model.preprocessing.covariate_cardinality;

    // Columns with no data get the neutral train midpoint so the forecaster
    // still runs; their score contribution is dropped below.
    for (std::size_t k = 0; k < d; ++k) {
        if (sensor_available[k]) continue;
        const ScaleParams& sp = model.preprocessing.scaling[k];
        const double mid = sp.unscale(0.0);
        for (std::size_t i = 0; i < frame.rows(); ++i) frame.sensors(i, k) = mid;
    }

    frame = fill_missing(frame);
    for (std::size_t k = 0; k < d; ++k) {
        const ScaleParams& sp = model.preprocessing.scaling[k];
        for (std::size_t i = 0; i < frame.rows(); ++i) {
            frame.sensors(i, k) = sp.scale(frame.sensors(i, k));
        }
    }
    frame.scaling = model.preprocessing.scaling;

    const std::size_t w = model.forecaster.window;
    if (frame.rows() <= w) {
        throw ArgumentError("detect: data has " + std::to_string(frame.rows()) +
                            " rows after preprocessing; need more than the model "
                            "window " + std::to_string(w));
    }

    const ErrorSeriesMatrix errors =
        compute_errors(model.forecaster, model.sensor_errors, frame, 0, frame.rows());
    const Matrix pvals = pvalue_matrix(model.gmms, errors, sensor_available);

    result.weights_renormalized = !result.missing_sensors.empty();
    result.scores = fisher_score(pvals, model.calibration.weights);
    result.flags = flag(result.scores, model.calibration);
    result.timestamps.resize(errors.indices.size());
    for (std::size_t t = 0; t < errors.indices.size(); ++t) {
        result.timestamps[t] = frame.timestamps[errors.indices[t]];
    }

    const std::vector<AnomalyEvent> events =
        extract_events(result.flags, result.scores, model.event_max_gap);
    result.events.reserve(events.size());
    for (const auto& ev : events) {
        DetectedEvent det;
        det.start_index = ev.start;
        det.end_index = ev.end;
        det.start_time = result.timestamps[ev.start];
        det.end_time = result.timestamps[ev.end];
        det.peak_score = ev.peak_score;
        det.peak_time = result.timestamps[ev.peak_index];
        const ContributionRanking ranking = contributions(
            std::span<const double>(pvals.row(ev.peak_index), pvals.cols()),
            model.calibration.weights, result.scores[ev.peak_index]);
        det.contributors = top_k(ranking, model.sensor_meta, 5);
        result.events.push_back(std::move(det));
    }
    return result;
}

} // namespace m2ad
