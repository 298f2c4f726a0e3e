#include "m2ad/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "m2ad/errors.hpp"

namespace m2ad {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ArgumentError("config: unknown key '" + key + "' in " + where);
        }
    }
}

std::int64_t parse_time_value(const json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_string()) return parse_timestamp(v.get<std::string>());
    throw ArgumentError("config: expected epoch seconds or ISO-8601 string");
}

ErrorSettings parse_error_settings(const json& obj, const ErrorSettings& base,
                                   const std::string& where) {
    reject_unknown_keys(obj, where, {"mode", "beta", "l", "tail"});
    ErrorSettings out = base;
    if (obj.contains("mode")) {
        out.mode = error_mode_from_string(obj.at("mode").get<std::string>());
    }
    if (obj.contains("beta")) {
        out.beta = obj.at("beta").get<double>();
        if (!(*out.beta >= 0.0 && *out.beta <= 1.0)) {
            throw ArgumentError("config: " + where + ".beta must lie in [0, 1]");
        }
    }
    if (obj.contains("l")) {
        out.halfwidth = obj.at("l").get<std::size_t>();
        if (out.halfwidth == 0) {
            throw ArgumentError("config: " + where + ".l must be >= 1");
        }
    }
    if (obj.contains("tail")) {
        out.tail = tail_mode_from_string(obj.at("tail").get<std::string>());
    }
    return out;
}

} // namespace

DiscrepancyConfig ErrorSettings::discrepancy() const {
    DiscrepancyConfig out;
    out.mode = mode;
    out.area_halfwidth = halfwidth;
    out.beta = beta.value_or(mode == ErrorMode::point ? 0.1 : 0.0);
    return out;
}

const ErrorSettings& DiscrepancySettings::for_system(const std::string& system) const {
    const auto it = per_system.find(system);
    return it == per_system.end() ? defaults : it->second;
}

const ErrorSettings& DiscrepancySettings::for_sensor(const SensorMeta& meta) const {
    const auto it = per_sensor.find(meta.column());
    return it == per_sensor.end() ? for_system(meta.system) : it->second;
}

int GmmSettings::components_for(const std::string& system) const {
    const auto it = per_system.find(system);
    return it == per_system.end() ? default_components : it->second;
}

PipelineConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!root.is_object()) throw ParseError("config: top level must be an object");
    reject_unknown_keys(root, "config",
                        {"asset", "split", "preprocessing", "forecaster",
                         "discrepancy", "gmm", "scoring", "evaluation"});

    PipelineConfig cfg;
    if (root.contains("asset")) cfg.asset = root.at("asset").get<std::string>();

    if (root.contains("split")) {
        const json& s = root.at("split");
        reject_unknown_keys(s, "split", {"train_fraction", "train_end_time"});
        if (s.contains("train_fraction")) {
            cfg.split.train_fraction = s.at("train_fraction").get<double>();
            if (!(cfg.split.train_fraction > 0.0 && cfg.split.train_fraction < 1.0)) {
                throw ArgumentError("config: train_fraction must lie in (0, 1)");
            }
        }
        if (s.contains("train_end_time")) {
            cfg.split.train_end_time = parse_time_value(s.at("train_end_time"));
        }
    }

    if (root.contains("preprocessing")) {
        const json& p = root.at("preprocessing");
        reject_unknown_keys(p, "preprocessing",
                            {"resample_step_seconds", "scale", "covariate_rules"});
        if (p.contains("resample_step_seconds")) {
            cfg.preprocessing.resample_step_seconds =
                p.at("resample_step_seconds").get<std::int64_t>();
        }
        if (p.contains("scale")) cfg.preprocessing.scale = p.at("scale").get<bool>();
        if (p.contains("covariate_rules")) {
            for (const json& r : p.at("covariate_rules")) {
                reject_unknown_keys(r, "covariate_rules",
                                    {"column", "rule", "threshold"});
                CovariateRule rule;
                rule.column = r.at("column").get<std::string>();
                const std::string kind = r.value("rule", std::string("quantile"));
                if (kind == "quantile") {
                    rule.kind = CovariateRule::Kind::quantile;
                } else if (kind == "threshold") {
                    rule.kind = CovariateRule::Kind::threshold;
                } else {
                    throw ArgumentError("config: unknown covariate rule '" + kind + "'");
                }
                if (r.contains("threshold")) {
                    rule.threshold = r.at("threshold").get<double>();
                }
                cfg.preprocessing.covariate_rules.push_back(std::move(rule));
            }
        }
    }

    if (root.contains("forecaster")) {
        const json& f = root.at("forecaster");
        reject_unknown_keys(f, "forecaster",
                            {"window", "hidden", "epochs", "lr", "batch", "patience",
                             "seed"});
        if (f.contains("window")) cfg.forecaster.window = f.at("window").get<std::size_t>();
        if (f.contains("hidden")) cfg.forecaster.hidden = f.at("hidden").get<std::size_t>();
        if (f.contains("epochs")) {
            cfg.forecaster.train.epochs = f.at("epochs").get<std::size_t>();
        }
        if (f.contains("lr")) cfg.forecaster.train.learning_rate = f.at("lr").get<double>();
        if (f.contains("batch")) cfg.forecaster.train.batch = f.at("batch").get<std::size_t>();
        if (f.contains("patience")) {
            cfg.forecaster.train.patience = f.at("patience").get<std::size_t>();
        }
        if (f.contains("seed")) {
            cfg.forecaster.train.seed = f.at("seed").get<std::uint64_t>();
        }
        if (cfg.forecaster.window == 0 || cfg.forecaster.hidden == 0) {
            throw ArgumentError("config: forecaster window and hidden must be positive");
        }
    }

    if (root.contains("discrepancy")) {
        const json& d = root.at("discrepancy");
        reject_unknown_keys(d, "discrepancy", {"default", "per_system", "per_sensor"});
        if (d.contains("default")) {
            cfg.discrepancy.defaults = parse_error_settings(
                d.at("default"), ErrorSettings{}, "discrepancy.default");
        }
        if (d.contains("per_system")) {
            for (const auto& [system, obj] : d.at("per_system").items()) {
                cfg.discrepancy.per_system[system] = parse_error_settings(
                    obj, cfg.discrepancy.defaults, "discrepancy.per_system." + system);
            }
        }
        if (d.contains("per_sensor")) {
            for (const auto& [column, obj] : d.at("per_sensor").items()) {
                // Base on the owning system's settings when it has any.
                const std::string system = column.substr(0, column.find('.'));
                cfg.discrepancy.per_sensor[column] = parse_error_settings(
                    obj, cfg.discrepancy.for_system(system),
                    "discrepancy.per_sensor." + column);
            }
        }
    }

    if (root.contains("gmm")) {
        const json& g = root.at("gmm");
        reject_unknown_keys(g, "gmm",
                            {"default", "per_system", "m_max", "seed", "max_iter",
                             "tol"});
        const auto parse_m = [](const json& v, const std::string& where) -> int {
            if (v.is_string()) {
                if (v.get<std::string>() == "auto") return 0;
                throw ArgumentError("config: " + where + " must be 'auto' or an integer");
            }
            const int m = v.get<int>();
            if (m < 1) throw ArgumentError("config: " + where + " must be >= 1");
            return m;
        };
        if (g.contains("default")) {
            cfg.gmm.default_components = parse_m(g.at("default"), "gmm.default");
        }
        if (g.contains("per_system")) {
            for (const auto& [system, v] : g.at("per_system").items()) {
                cfg.gmm.per_system[system] = parse_m(v, "gmm.per_system." + system);
            }
        }
        if (g.contains("m_max")) cfg.gmm.m_max = g.at("m_max").get<std::size_t>();
        if (g.contains("seed")) cfg.gmm.seed = g.at("seed").get<std::uint64_t>();
        if (g.contains("max_iter")) cfg.gmm.max_iter = g.at("max_iter").get<std::size_t>();
        if (g.contains("tol")) cfg.gmm.tol = g.at("tol").get<double>();
        if (cfg.gmm.m_max < 1) throw ArgumentError("config: gmm.m_max must be >= 1");
    }

    if (root.contains("scoring")) {
        const json& s = root.at("scoring");
        reject_unknown_keys(s, "scoring", {"weight_mode", "significance", "max_gap"});
        if (s.contains("weight_mode")) {
            cfg.scoring.weight_mode =
                weight_mode_from_string(s.at("weight_mode").get<std::string>());
        }
        if (s.contains("significance")) {
            cfg.scoring.significance = s.at("significance").get<double>();
            if (!(cfg.scoring.significance > 0.0 && cfg.scoring.significance < 1.0)) {
                throw ArgumentError("config: significance must lie in (0, 1)");
            }
        }
        if (s.contains("max_gap")) cfg.scoring.max_gap = s.at("max_gap").get<std::size_t>();
    }

    if (root.contains("evaluation")) {
        const json& e = root.at("evaluation");
        reject_unknown_keys(e, "evaluation", {"mode", "lead_min_days", "lead_max_days"});
        if (e.contains("mode")) {
            const std::string mode = e.at("mode").get<std::string>();
            if (mode == "detection") {
                cfg.evaluation.mode = EvalMode::detection;
            } else if (mode == "predictive") {
                cfg.evaluation.mode = EvalMode::predictive;
            } else {
                throw ArgumentError("config: unknown evaluation mode '" + mode + "'");
            }
        }
        if (e.contains("lead_min_days")) {
            cfg.evaluation.lead_min_days = e.at("lead_min_days").get<double>();
        }
        if (e.contains("lead_max_days")) {
            cfg.evaluation.lead_max_days = e.at("lead_max_days").get<double>();
        }
        if (cfg.evaluation.lead_min_days > cfg.evaluation.lead_max_days) {
            throw ArgumentError("config: lead_min_days must not exceed lead_max_days");
        }
    }

    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string canonical_config(const PipelineConfig& cfg) {
    json root;
    root["asset"] = cfg.asset;
    root["split"]["train_fraction"] = cfg.split.train_fraction;
    if (cfg.split.train_end_time) {
        root["split"]["train_end_time"] = *cfg.split.train_end_time;
    }
    root["preprocessing"]["resample_step_seconds"] =
        cfg.preprocessing.resample_step_seconds;
    root["preprocessing"]["scale"] = cfg.preprocessing.scale;
    json rules = json::array();
    for (const auto& r : cfg.preprocessing.covariate_rules) {
        json obj;
        obj["column"] = r.column;
        obj["rule"] = r.kind == CovariateRule::Kind::quantile ? "quantile" : "threshold";
        obj["threshold"] = r.threshold;
        rules.push_back(obj);
    }
    root["preprocessing"]["covariate_rules"] = rules;
    root["forecaster"] = {{"window", cfg.forecaster.window},
                          {"hidden", cfg.forecaster.hidden},
                          {"epochs", cfg.forecaster.train.epochs},
                          {"lr", cfg.forecaster.train.learning_rate},
                          {"batch", cfg.forecaster.train.batch},
                          {"patience", cfg.forecaster.train.patience},
                          {"seed", cfg.forecaster.train.seed}};
    const auto error_json = [](const ErrorSettings& e) {
        json obj;
        obj["mode"] = to_string(e.mode);
        obj["beta"] = e.discrepancy().beta;
        obj["l"] = e.halfwidth;
        obj["tail"] = to_string(e.tail);
        return obj;
    };
    root["discrepancy"]["default"] = error_json(cfg.discrepancy.defaults);
    for (const auto& [system, e] : cfg.discrepancy.per_system) {
        root["discrepancy"]["per_system"][system] = error_json(e);
    }
    for (const auto& [column, e] : cfg.discrepancy.per_sensor) {
        root["discrepancy"]["per_sensor"][column] = error_json(e);
    }
    root["gmm"] = {{"default", cfg.gmm.default_components},
                   {"m_max", cfg.gmm.m_max},
                   {"seed", cfg.gmm.seed},
                   {"max_iter", cfg.gmm.max_iter},
                   {"tol", cfg.gmm.tol}};
    for (const auto& [system, m] : cfg.gmm.per_system) {
        root["gmm"]["per_system"][system] = m;
    }
    root["scoring"] = {{"weight_mode", to_string(cfg.scoring.weight_mode)},
                       {"significance", cfg.scoring.significance},
                       {"max_gap", cfg.scoring.max_gap}};
    root["evaluation"] = {
        {"mode", cfg.evaluation.mode == EvalMode::detection ? "detection" : "predictive"},
        {"lead_min_days", cfg.evaluation.lead_min_days},
        {"lead_max_days", cfg.evaluation.lead_max_days}};
    return root.dump();
}

std::string config_hash(const PipelineConfig& cfg) {
    const std::string text = canonical_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace m2ad
