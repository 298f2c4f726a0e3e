#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "m2ad/artifact.hpp"
#include "m2ad/errors.hpp"
#include "m2ad/pipeline.hpp"
#include "m2ad/synth.hpp"

namespace {

using nlohmann::json;
using namespace m2ad;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::string sibling_path(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    const std::string stem = p.stem().string();
    return (p.parent_path() / (stem + suffix)).string();
}

json events_to_json(const TrainedModel& model, const DetectionResult& result) {
    json root;
    root["format_version"] = 1;
    root["asset"] = model.asset_id;
    root["model"] = {{"config_hash", model.provenance.config_hash},
                     {"significance", model.calibration.significance},
                     {"gamma_threshold", model.calibration.gamma_threshold}};
    root["weights_renormalized"] = result.weights_renormalized;
    root["missing_sensors"] = result.missing_sensors;
    root["ignored_columns"] = result.ignored_columns;
    root["scored_steps"] = result.timestamps.size();
    root["range"] = {{"start_time", format_timestamp(result.timestamps.front())},
                     {"end_time", format_timestamp(result.timestamps.back())}};

    json events = json::array();
    for (const auto& ev : result.events) {
        json contributors = json::array();
        for (const auto& c : ev.contributors) {
            contributors.push_back({{"system", c.system},
                                    {"sensor", c.sensor},
                                    {"summary", c.summary},
                                    {"share", c.share}});
        }
        events.push_back({{"start_epoch", result.timestamps[ev.start_index]},
                          {"end_epoch", result.timestamps[ev.end_index]},
                          {"start_time", format_timestamp(ev.start_time)},
                          {"end_time", format_timestamp(ev.end_time)},
                          {"peak_score", ev.peak_score},
                          {"peak_time", format_timestamp(ev.peak_time)},
                          {"contributors", contributors}});
    }
    root["events"] = events;
    return root;
}

std::string events_to_text(const TrainedModel& model, const DetectionResult& result) {
    std::ostringstream out;
    out << "asset " << model.asset_id << "  threshold "
        << model.calibration.gamma_threshold << "  significance "
        << model.calibration.significance << "\n";
    if (!result.missing_sensors.empty()) {
        out << "missing sensors (weights renormalized):";
        for (const auto& s : result.missing_sensors) out << " " << s;
        out << "\n";
    }
    std::size_t i = 0;
    for (const auto& ev : result.events) {
        out << "event " << i++ << "  " << format_timestamp(ev.start_time) << " .. "
            << format_timestamp(ev.end_time) << "  peak " << ev.peak_score << " at "
            << format_timestamp(ev.peak_time) << "  top:";
        for (const auto& c : ev.contributors) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "(%.3f)", c.share);
            out << " " << c.system << "." << c.sensor << "." << c.summary << buf;
        }
        out << "\n";
    }
    if (result.events.empty()) out << "no events\n";
    return out.str();
}

std::string scores_to_csv(const DetectionResult& result) {
    std::ostringstream out;
    out << "timestamp,score,flag\n";
    char buf[64];
    for (std::size_t t = 0; t < result.timestamps.size(); ++t) {
        if (std::isnan(result.scores[t])) {
            out << result.timestamps[t] << ",," << int(result.flags[t]) << "\n";
        } else {
            std::snprintf(buf, sizeof(buf), "%.17g", result.scores[t]);
            out << result.timestamps[t] << "," << buf << ","
                << int(result.flags[t]) << "\n";
        }
    }
    return out.str();
}

struct LoadedEvents {
    std::string asset;
    std::vector<LabeledInterval> intervals;
};

LoadedEvents load_events_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open events file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    json root;
    try {
        root = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    LoadedEvents out;
    try {
        out.asset = root.at("asset").get<std::string>();
        for (const json& ev : root.at("events")) {
            LabeledInterval interval;
            interval.start = ev.at("start_epoch").get<std::int64_t>();
            interval.end = ev.at("end_epoch").get<std::int64_t>();
            interval.kind = IntervalKind::anomaly;
            interval.signal = out.asset;
            out.intervals.push_back(interval);
        }
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return out;
}

std::string report_to_text(const EvalReport& report, const std::string& mode) {
    std::ostringstream out;
    const auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("undefined");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", *v);
        return std::string(buf);
    };
    out << "mode " << mode << "\n";
    out << "tp " << report.tp << "\nfp " << report.fp << "\nfn " << report.fn << "\n";
    out << "precision " << fmt(report.precision) << "\n";
    out << "recall " << fmt(report.recall) << "\n";
    out << "f1 " << fmt(report.f1) << "\n";
    out << "f0.5 " << fmt(report.f05) << "\n";
    for (const auto& [signal, counts] : report.per_signal) {
        out << "signal " << signal << " tp " << counts.tp << " fp " << counts.fp
            << " fn " << counts.fn << "\n";
    }
    return out.str();
}

json report_to_json(const EvalReport& report, const std::string& mode) {
    json root;
    root["mode"] = mode;
    root["tp"] = report.tp;
    root["fp"] = report.fp;
    root["fn"] = report.fn;
    const auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) {
            root[key] = *v;
        } else {
            root[key] = nullptr;
        }
    };
    put("precision", report.precision);
    put("recall", report.recall);
    put("f1", report.f1);
    put("f0.5", report.f05);
    json per_signal = json::array();
    for (const auto& [signal, counts] : report.per_signal) {
        per_signal.push_back({{"signal", signal},
                              {"tp", counts.tp},
                              {"fp", counts.fp},
                              {"fn", counts.fn}});
    }
    root["per_signal"] = per_signal;
    return root;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& out_path) {
    const PipelineConfig config =
        config_path.empty() ? PipelineConfig{} : load_config(config_path);
    const AssetFrame frame = load_csv(data_path);
    const TrainOutcome outcome = train_pipeline(frame, config);
    save_artifact(outcome.model, out_path);

    std::printf("trained %s: %zu epochs", outcome.model.asset_id.c_str(),
                outcome.report.epochs_run);
    if (!outcome.report.epoch_loss.empty()) {
        std::printf(", loss %.6g -> %.6g%s", outcome.report.epoch_loss.front(),
                    outcome.report.epoch_loss.back(),
                    outcome.report.early_stopped ? " (early stop)" : "");
    }
    std::printf("\ncalibration: alpha %.4g theta %.4g gamma %.6g (significance %g)\n",
                outcome.model.calibration.alpha, outcome.model.calibration.theta,
                outcome.model.calibration.gamma_threshold,
                outcome.model.calibration.significance);
    std::printf("model written to %s\n", out_path.c_str());
    return 0;
}

int cmd_detect(const std::string& model_path, const std::string& data_path,
               const std::string& out_path) {
    const TrainedModel model = load_artifact(model_path);
    const AssetFrame frame = load_csv(data_path);
    const DetectionResult result = detect(model, frame);

    write_file_atomic(out_path, events_to_json(model, result).dump(2) + "\n");
    write_file_atomic(sibling_path(out_path, ".txt"), events_to_text(model, result));
    write_file_atomic(sibling_path(out_path, "_scores.csv"), scores_to_csv(result));

    for (const auto& col : result.ignored_columns) {
        std::fprintf(stderr, "warning: ignoring unknown sensor column %s\n",
                     col.c_str());
    }
    for (const auto& col : result.missing_sensors) {
        std::fprintf(stderr,
                     "warning: sensor %s absent; weights renormalized over the rest\n",
                     col.c_str());
    }
    std::printf("%zu events over %zu scored steps; events written to %s\n",
                result.events.size(), result.timestamps.size(), out_path.c_str());
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& events_paths,
                 const std::string& labels_path, const std::string& mode,
                 double lead_min_days, double lead_max_days,
                 const std::string& out_prefix) {
    if (mode != "detection" && mode != "predictive") {
        throw ArgumentError("unknown evaluation mode '" + mode +
                            "' (expected detection or predictive)");
    }
    const std::vector<LabeledInterval> labels = load_labels_csv(labels_path);

    std::vector<std::pair<std::string, MatchCounts>> per_signal;
    for (const auto& path : events_paths) {
        const LoadedEvents events = load_events_file(path);
        std::vector<LabeledInterval> relevant;
        for (const auto& label : labels) {
            if (label.signal != events.asset && label.signal != "*") continue;
            const bool want_kind = mode == "detection"
                                       ? label.kind == IntervalKind::anomaly
                                       : label.kind == IntervalKind::work_order;
            if (want_kind) relevant.push_back(label);
        }
        MatchCounts counts;
        if (mode == "detection") {
            counts = match_detection(events.intervals, relevant);
        } else {
            counts = match_predictive(
                events.intervals, relevant,
                static_cast<std::int64_t>(lead_min_days * 86400.0),
                static_cast<std::int64_t>(lead_max_days * 86400.0));
        }
        per_signal.emplace_back(events.asset, counts);
    }

    const EvalReport report = aggregate(per_signal);
    const std::string text = report_to_text(report, mode);
    write_file_atomic(out_prefix + ".txt", text);
    write_file_atomic(out_prefix + ".json", report_to_json(report, mode).dump(2) + "\n");
    std::fputs(text.c_str(), stdout);
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_prefix) {
    const SynthConfig scenario = load_scenario(scenario_path);
    const SynthResult result = generate(scenario);
    const std::string data_path = out_prefix + "_data.csv";
    const std::string labels_path = out_prefix + "_labels.csv";
    write_file_atomic(data_path, frame_to_csv(result.frame));
    write_file_atomic(labels_path, labels_to_csv(result.truth));
    std::printf("wrote %s (%zu rows, %zu sensors) and %s (%zu intervals)\n",
                data_path.c_str(), result.frame.rows(), result.frame.sensor_count(),
                labels_path.c_str(), result.truth.size());
    return 0;
}

int cmd_verify_props(const std::string& out_prefix) {
    const PropositionReport report = verify_propositions();
    const std::string text = proposition_report_text(report);

    json root;
    json bias_rows = json::array();
    for (const auto& p : report.mixture_bias) {
        bias_rows.push_back({{"mu_star", p.mu_star},
                         {"rho", p.rho},
                         {"sigma", p.sigma},
                         {"mu_bar", p.mu_bar},
                         {"bias", p.bias},
                         {"bound", p.bound}});
    }
    json ratio_rows = json::array();
    for (const auto& p : report.tail_ratio) {
        ratio_rows.push_back({{"alpha", p.alpha},
                         {"theta", p.theta},
                         {"s", p.s},
                         {"log_ratio", p.log_ratio},
                         {"ratio", p.saturated ? json() : json(p.ratio)},
                         {"saturated", p.saturated}});
    }
    root["mixture_bias"] = bias_rows;
    root["tail_ratio"] = ratio_rows;

    if (!out_prefix.empty()) {
        write_file_atomic(out_prefix + ".txt", text);
        write_file_atomic(out_prefix + ".json", root.dump(2) + "\n");
    }
    std::fputs(text.c_str(), stdout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"M2AD: multi-sensor multi-system time series anomaly detection"};
    app.require_subcommand(1);

    std::string data_path, config_path, model_path, out_path, labels_path;
    std::string scenario_path, mode = "detection";
    std::vector<std::string> events_paths;
    double lead_min_days = 1.0, lead_max_days = 7.0;

    CLI::App* train = app.add_subcommand("train", "fit a model on training data");
    train->add_option("--data", data_path, "input data CSV")->required();
    train->add_option("--config", config_path, "pipeline config JSON");
    train->add_option("--out", out_path, "output model artifact path")->required();

    CLI::App* detect_cmd = app.add_subcommand("detect", "score data with a model");
    detect_cmd->add_option("--model", model_path, "model artifact path")->required();
    detect_cmd->add_option("--data", data_path, "input data CSV")->required();
    detect_cmd->add_option("--out", out_path, "output events JSON path")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "score detections against labels");
    evaluate->add_option("--events", events_paths, "events JSON file(s)")->required();
    evaluate->add_option("--labels", labels_path, "labels CSV")->required();
    evaluate->add_option("--mode", mode, "detection or predictive");
    evaluate->add_option("--lead-min", lead_min_days, "predictive lead minimum, days");
    evaluate->add_option("--lead-max", lead_max_days, "predictive lead maximum, days");
    evaluate->add_option("--out", out_path, "output report prefix")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "generate labeled synthetic data");
    simulate->add_option("--scenario", scenario_path, "scenario JSON")->required();
    simulate->add_option("--out", out_path, "output file prefix")->required();

    CLI::App* verify = app.add_subcommand("verify-props",
                                          "numeric checks of the scoring propositions");
    verify->add_option("--out", out_path, "output report prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (train->parsed()) return cmd_train(data_path, config_path, out_path);
        if (detect_cmd->parsed()) return cmd_detect(model_path, data_path, out_path);
        if (evaluate->parsed()) {
            return cmd_evaluate(events_paths, labels_path, mode, lead_min_days,
                                lead_max_days, out_path);
        }
        if (simulate->parsed()) return cmd_simulate(scenario_path, out_path);
        if (verify->parsed()) return cmd_verify_props(out_path);
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return 0;
}
