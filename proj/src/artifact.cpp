#include "m2ad/artifact.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "m2ad/errors.hpp"

namespace m2ad {

using nlohmann::json;

namespace {

json scale_json(const ScaleParams& sp) {
    return json{{"lo", sp.lo}, {"hi", sp.hi}};
}

json gmm_json(const GmmModel& gmm) {
    json components = json::array();
    for (const auto& c : gmm.components) {
        components.push_back({{"weight", c.weight}, {"mean", c.mean}, {"stdev", c.stdev}});
    }
    return json{{"components", components},
                {"tail", to_string(gmm.tail_mode)},
                {"log_likelihood", gmm.log_likelihood},
                {"iterations", gmm.iterations},
                {"converged", gmm.converged}};
}

GmmModel gmm_from_json(const json& obj) {
    GmmModel gmm;
    for (const json& c : obj.at("components")) {
        gmm.components.push_back({c.at("weight").get<double>(),
                                  c.at("mean").get<double>(),
                                  c.at("stdev").get<double>()});
    }
    gmm.tail_mode = tail_mode_from_string(obj.at("tail").get<std::string>());
    gmm.log_likelihood = obj.at("log_likelihood").get<double>();
    gmm.iterations = obj.at("iterations").get<std::size_t>();
    gmm.converged = obj.at("converged").get<bool>();
    return gmm;
}

} // namespace

std::string artifact_to_json(const TrainedModel& model) {
    model.validate();
    json root;
    root["format_version"] = model.format_version;
    root["asset"] = model.asset_id;
    root["event_max_gap"] = model.event_max_gap;

    json& pre = root["preprocessing"];
    pre["resample_step_seconds"] = model.preprocessing.resample_step_seconds;
    pre["scale"] = model.preprocessing.scale;
    json rules = json::array();
    for (const auto& r : model.preprocessing.covariate_rules) {
        rules.push_back(
            {{"column", r.column},
             {"rule", r.kind == CovariateRule::Kind::quantile ? "quantile" : "threshold"},
             {"threshold", r.threshold},
             {"boundaries", r.boundaries}});
    }
    pre["covariate_rules"] = rules;
    json covariates = json::array();
    for (std::size_t j = 0; j < model.preprocessing.covariate_names.size(); ++j) {
        covariates.push_back(
            {{"name", model.preprocessing.covariate_names[j]},
             {"cardinality", model.preprocessing.covariate_cardinality[j]}});
    }
    pre["covariates"] = covariates;

    json sensors = json::array();
    for (std::size_t k = 0; k < model.sensor_meta.size(); ++k) {
        const SensorMeta& meta = model.sensor_meta[k];
        json entry;
        entry["system"] = meta.system;
        entry["name"] = meta.name;
        entry["summary"] = meta.summary;
        entry["tail"] = to_string(meta.tail_mode);
        if (meta.weight) entry["weight"] = *meta.weight;
        entry["scaling"] = scale_json(model.preprocessing.scaling[k]);
        entry["error"] = {{"mode", to_string(model.sensor_errors[k].mode)},
                          {"beta", model.sensor_errors[k].beta},
                          {"l", model.sensor_errors[k].area_halfwidth}};
        entry["gmm"] = gmm_json(model.gmms[k]);
        sensors.push_back(entry);
    }
    root["sensors"] = sensors;

    root["forecaster"] = {{"input_width", model.forecaster.input_width},
                          {"hidden", model.forecaster.hidden},
                          {"output_dim", model.forecaster.output_dim},
                          {"window", model.forecaster.window},
                          {"train",
                           {{"epochs", model.forecaster.train_config.epochs},
                            {"lr", model.forecaster.train_config.learning_rate},
                            {"batch", model.forecaster.train_config.batch},
                            {"patience", model.forecaster.train_config.patience},
                            {"seed", model.forecaster.train_config.seed}}},
                          {"params", model.forecaster.params}};

    root["calibration"] = {{"weights", model.calibration.weights},
                           {"alpha", model.calibration.alpha},
                           {"theta", model.calibration.theta},
                           {"significance", model.calibration.significance},
                           {"gamma_threshold", model.calibration.gamma_threshold},
                           {"train_mean", model.calibration.train_mean},
                           {"train_variance", model.calibration.train_variance}};

    root["provenance"] = {{"config_hash", model.provenance.config_hash},
                          {"train_rows", model.provenance.train_rows},
                          {"data_start_time", model.provenance.data_start_time},
                          {"train_end_time", model.provenance.train_end_time}};

    return root.dump(2) + "\n";
}

TrainedModel artifact_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("artifact: ") + e.what());
    }

    TrainedModel model;
    try {
        model.format_version = root.at("format_version").get<int>();
        if (model.format_version != kArtifactVersion) {
            throw SchemaError("artifact: unsupported format version " +
                              std::to_string(model.format_version) + " (expected " +
                              std::to_string(kArtifactVersion) + ")");
        }
        model.asset_id = root.at("asset").get<std::string>();
        model.event_max_gap = root.at("event_max_gap").get<std::size_t>();

        const json& pre = root.at("preprocessing");
        model.preprocessing.resample_step_seconds =
            pre.at("resample_step_seconds").get<std::int64_t>();
        model.preprocessing.scale = pre.at("scale").get<bool>();
        for (const json& r : pre.at("covariate_rules")) {
            CovariateRule rule;
            rule.column = r.at("column").get<std::string>();
            rule.kind = r.at("rule").get<std::string>() == "quantile"
                            ? CovariateRule::Kind::quantile
                            : CovariateRule::Kind::threshold;
            rule.threshold = r.at("threshold").get<double>();
            rule.boundaries = r.at("boundaries").get<std::vector<double>>();
            model.preprocessing.covariate_rules.push_back(std::move(rule));
        }
        for (const json& c : pre.at("covariates")) {
            model.preprocessing.covariate_names.push_back(
                c.at("name").get<std::string>());
            model.preprocessing.covariate_cardinality.push_back(
                c.at("cardinality").get<int>());
        }

        for (const json& s : root.at("sensors")) {
            SensorMeta meta;
            meta.system = s.at("system").get<std::string>();
            meta.name = s.at("name").get<std::string>();
            meta.summary = s.at("summary").get<std::string>();
            meta.tail_mode = tail_mode_from_string(s.at("tail").get<std::string>());
            if (s.contains("weight")) meta.weight = s.at("weight").get<double>();
            model.sensor_meta.push_back(meta);

            model.preprocessing.scaling.push_back(
                {s.at("scaling").at("lo").get<double>(),
                 s.at("scaling").at("hi").get<double>()});

            DiscrepancyConfig err;
            err.mode = error_mode_from_string(s.at("error").at("mode").get<std::string>());
            err.beta = s.at("error").at("beta").get<double>();
            err.area_halfwidth = s.at("error").at("l").get<std::size_t>();
            model.sensor_errors.push_back(err);

            model.gmms.push_back(gmm_from_json(s.at("gmm")));
        }

        const json& f = root.at("forecaster");
        model.forecaster.input_width = f.at("input_width").get<std::size_t>();
        model.forecaster.hidden = f.at("hidden").get<std::size_t>();
        model.forecaster.output_dim = f.at("output_dim").get<std::size_t>();
        model.forecaster.window = f.at("window").get<std::size_t>();
        model.forecaster.train_config.epochs = f.at("train").at("epochs").get<std::size_t>();
        model.forecaster.train_config.learning_rate = f.at("train").at("lr").get<double>();
        model.forecaster.train_config.batch = f.at("train").at("batch").get<std::size_t>();
        model.forecaster.train_config.patience =
            f.at("train").at("patience").get<std::size_t>();
        model.forecaster.train_config.seed = f.at("train").at("seed").get<std::uint64_t>();
        model.forecaster.params = f.at("params").get<std::vector<double>>();

        const json& cal = root.at("calibration");
        model.calibration.weights = cal.at("weights").get<std::vector<double>>();
        model.calibration.alpha = cal.at("alpha").get<double>();
        model.calibration.theta = cal.at("theta").get<double>();
        model.calibration.significance = cal.at("significance").get<double>();
        model.calibration.gamma_threshold = cal.at("gamma_threshold").get<double>();
        model.calibration.train_mean = cal.at("train_mean").get<double>();
        model.calibration.train_variance = cal.at("train_variance").get<double>();

        const json& prov = root.at("provenance");
        model.provenance.config_hash = prov.at("config_hash").get<std::string>();
        model.provenance.train_rows = prov.at("train_rows").get<std::size_t>();
        model.provenance.data_start_time = prov.at("data_start_time").get<std::int64_t>();
        model.provenance.train_end_time = prov.at("train_end_time").get<std::int64_t>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("artifact: ") + e.what());
    }

    model.validate();
    return model;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ArgumentError("cannot write to " + tmp);
        out << contents;
        out.flush();
        if (!out) throw ArgumentError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ArgumentError("cannot move " + tmp + " to " + path + ": " + ec.message());
    }
}

void save_artifact(const TrainedModel& model, const std::string& path) {
    write_file_atomic(path, artifact_to_json(model));
}

TrainedModel load_artifact(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open model file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return artifact_from_json(buf.str());
}

} // namespace m2ad
