#include "m2ad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

#include "m2ad/errors.hpp"
#include "m2ad/rng.hpp"
#include "m2ad/stats.hpp"

namespace m2ad {

using nlohmann::json;

std::string to_string(AnomalyType type) {
    switch (type) {
        case AnomalyType::spike: return "spike";
        case AnomalyType::level_shift: return "level_shift";
        case AnomalyType::contextual: return "contextual";
    }
    return "level_shift";
}

AnomalyType anomaly_type_from_string(const std::string& s) {
    if (s == "spike") return AnomalyType::spike;
    if (s == "level_shift") return AnomalyType::level_shift;
    if (s == "contextual") return AnomalyType::contextual;
    throw ArgumentError("unknown anomaly type '" + s + "'");
}

SynthResult generate(const SynthConfig& config) {
    if (config.rows == 0) throw ArgumentError("generate: rows must be positive");
    if (!(config.rho_dep >= 0.0 && config.rho_dep < 1.0)) {
        throw ArgumentError("generate: rho_dep must lie in [0, 1)");
    }
    // Specs hitting the same column may not overlap in time. Overlapping
    // specs on different columns describe one multivariate fault event and
    // collapse into a single truth interval below.
    for (std::size_t a = 0; a < config.anomalies.size(); ++a) {
        const auto& spec = config.anomalies[a];
        if (spec.duration == 0 || spec.start + spec.duration > config.rows) {
            throw ArgumentError("generate: anomaly " + std::to_string(a) +
                                " does not fit in [0, rows)");
        }
        for (std::size_t b = a + 1; b < config.anomalies.size(); ++b) {
            const auto& other = config.anomalies[b];
            const bool overlap = spec.start < other.start + other.duration &&
                                 other.start < spec.start + spec.duration;
            if (overlap && spec.column == other.column) {
                throw ArgumentError("generate: anomaly specs " + std::to_string(a) +
                                    " and " + std::to_string(b) + " overlap on " +
                                    spec.column);
            }
        }
    }

    SynthResult result;
    AssetFrame& frame = result.frame;
    const std::size_t t_rows = config.rows;

    std::vector<const SensorSpec*> specs;
    for (const auto& system : config.systems) {
        for (const auto& sensor : system.sensors) {
            frame.sensor_meta.push_back(
                {sensor.name, system.name, sensor.summary, TailMode::two_sided, {}});
            specs.push_back(&sensor);
        }
    }
    const std::size_t d = specs.size();
    if (d == 0) throw ArgumentError("generate: no sensors configured");

    frame.timestamps.resize(t_rows);
    for (std::size_t i = 0; i < t_rows; ++i) {
        frame.timestamps[i] =
            config.start_time + static_cast<std::int64_t>(i) * config.step_seconds;
    }

    // Covariate codes and their additive effect on every sensor baseline.
    frame.covariates = Matrix(t_rows, config.covariates.size());
    std::vector<double> covariate_shift(t_rows, 0.0);
    for (std::size_t j = 0; j < config.covariates.size(); ++j) {
        const CovariateSpec& cov = config.covariates[j];
        if (cov.levels < 2 || cov.period < static_cast<std::size_t>(cov.levels)) {
            throw ArgumentError("generate: covariate '" + cov.name +
                                "' needs levels >= 2 and period >= levels");
        }
        frame.covariate_names.push_back(cov.name);
        frame.covariate_cardinality.push_back(cov.levels);
        const std::size_t phase_len = cov.period / static_cast<std::size_t>(cov.levels);
        const double center = static_cast<double>(cov.levels - 1) / 2.0;
        for (std::size_t i = 0; i < t_rows; ++i) {
            const int code = static_cast<int>((i / phase_len) %
                                              static_cast<std::size_t>(cov.levels));
            frame.covariates(i, j) = static_cast<double>(code);
            covariate_shift[i] += cov.effect * (static_cast<double>(code) - center);
        }
    }

    // Shared AR(1) latent factor with unit stationary variance.
    std::vector<double> latent(t_rows, 0.0);
    {
        Rng rng(derive_seed(config.seed, 0xa51));
        const double phi = config.ar_phi;
        const double innovation = std::sqrt(std::max(0.0, 1.0 - phi * phi));
        latent[0] = rng.normal();
        for (std::size_t i = 1; i < t_rows; ++i) {
            latent[i] = phi * latent[i - 1] + innovation * rng.normal();
        }
    }

    frame.sensors = Matrix(t_rows, d);
    std::vector<std::vector<double>> base(d, std::vector<double>(t_rows));
    for (std::size_t k = 0; k < d; ++k) {
        const SensorSpec& spec = *specs[k];
        Rng rng(derive_seed(config.seed, 0xbeef + k));
        double regime = 0.0;
        for (std::size_t i = 0; i < t_rows; ++i) {
            if (spec.regime_gap != 0.0 && rng.uniform() < spec.regime_flip_prob) {
                regime = regime == 0.0 ? spec.regime_gap : 0.0;
            }
            const double seasonal =
                spec.amplitude *
                std::sin(2.0 * M_PI * static_cast<double>(i) / spec.period + spec.phase);
            base[k][i] = seasonal + covariate_shift[i] + regime;
            frame.sensors(i, k) = base[k][i] +
                                  config.rho_dep * spec.latent_loading * latent[i] +
                                  spec.noise_sigma * rng.normal();
        }
    }

    for (const auto& spec : config.anomalies) {
        const auto column = frame.find_sensor(spec.column);
        if (!column) {
            throw ArgumentError("generate: anomaly references unknown sensor '" +
                                spec.column + "'");
        }
        const std::size_t k = *column;
        const double unit = specs[k]->noise_sigma;
        for (std::size_t i = spec.start; i < spec.start + spec.duration; ++i) {
            switch (spec.type) {
                case AnomalyType::spike:
                    frame.sensors(i, k) +=
                        spec.magnitude * unit * ((i - spec.start) % 2 == 0 ? 1.0 : -1.0);
                    break;
                case AnomalyType::level_shift:
                    frame.sensors(i, k) += spec.magnitude * unit;
                    break;
                case AnomalyType::contextual:
                    // Pattern break: the seasonal component flattens out while
                    // the value stays inside the normal range.
                    frame.sensors(i, k) -= base[k][i];
                    frame.sensors(i, k) += covariate_shift[i];
                    break;
            }
        }
    }

    // Truth intervals: overlapping specs merge into one event.
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    for (const auto& spec : config.anomalies) {
        windows.emplace_back(spec.start, spec.start + spec.duration - 1);
    }
    std::sort(windows.begin(), windows.end());
    for (const auto& [start, end] : windows) {
        if (!result.truth.empty() &&
            frame.timestamps[start] <= result.truth.back().end) {
            result.truth.back().end =
                std::max(result.truth.back().end, frame.timestamps[end]);
        } else {
            result.truth.push_back({frame.timestamps[start], frame.timestamps[end],
                                    IntervalKind::anomaly, config.asset});
        }
    }

    frame.validate();
    return result;
}

SynthConfig parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }

    SynthConfig cfg;
    try {
        cfg.asset = root.value("asset", cfg.asset);
        cfg.seed = root.value("seed", cfg.seed);
        cfg.rows = root.value("rows", cfg.rows);
        cfg.step_seconds = root.value("step_seconds", cfg.step_seconds);
        if (root.contains("start_time")) {
            const json& v = root.at("start_time");
            cfg.start_time = v.is_string() ? parse_timestamp(v.get<std::string>())
                                           : v.get<std::int64_t>();
        }
        cfg.rho_dep = root.value("rho_dep", cfg.rho_dep);
        cfg.ar_phi = root.value("ar_phi", cfg.ar_phi);

        for (const json& sys : root.value("systems", json::array())) {
            SystemSpec system;
            system.name = sys.at("name").get<std::string>();
            for (const json& s : sys.at("sensors")) {
                SensorSpec sensor;
                sensor.name = s.at("name").get<std::string>();
                sensor.summary = s.value("summary", sensor.summary);
                sensor.period = s.value("period", sensor.period);
                sensor.amplitude = s.value("amplitude", sensor.amplitude);
                sensor.phase = s.value("phase", sensor.phase);
                sensor.noise_sigma = s.value("noise_sigma", sensor.noise_sigma);
                sensor.latent_loading = s.value("latent_loading", sensor.latent_loading);
                sensor.regime_gap = s.value("regime_gap", sensor.regime_gap);
                sensor.regime_flip_prob =
                    s.value("regime_flip_prob", sensor.regime_flip_prob);
                system.sensors.push_back(std::move(sensor));
            }
            cfg.systems.push_back(std::move(system));
        }
        for (const json& c : root.value("covariates", json::array())) {
            CovariateSpec cov;
            cov.name = c.at("name").get<std::string>();
            cov.period = c.value("period", cov.period);
            cov.levels = c.value("levels", cov.levels);
            cov.effect = c.value("effect", cov.effect);
            cfg.covariates.push_back(std::move(cov));
        }
        for (const json& a : root.value("anomalies", json::array())) {
            AnomalySpec spec;
            spec.type = anomaly_type_from_string(
                a.value("type", std::string("level_shift")));
            spec.column = a.at("sensor").get<std::string>();
            spec.start = a.at("start").get<std::size_t>();
            spec.duration = a.at("duration").get<std::size_t>();
            spec.magnitude = a.value("magnitude", spec.magnitude);
            cfg.anomalies.push_back(std::move(spec));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    return cfg;
}

SynthConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string frame_to_csv(const AssetFrame& frame) {
    std::ostringstream out;
    out << "timestamp";
    for (const auto& meta : frame.sensor_meta) out << "," << meta.column();
    for (const auto& name : frame.covariate_names) out << "," << name;
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < frame.rows(); ++i) {
        out << frame.timestamps[i];
        for (std::size_t k = 0; k < frame.sensor_count(); ++k) {
            const double v = frame.sensors(i, k);
            if (std::isnan(v)) {
                out << ",";
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                out << "," << buf;
            }
        }
        for (std::size_t j = 0; j < frame.covariate_count(); ++j) {
            const double v = frame.covariates(i, j);
            if (std::isnan(v)) {
                out << ",";
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                out << "," << buf;
            }
        }
        out << "\n";
    }
    return out.str();
}

std::string labels_to_csv(std::span<const LabeledInterval> truth) {
    std::ostringstream out;
    out << "signal,start,end,kind\n";
    for (const auto& interval : truth) {
        out << interval.signal << "," << interval.start << "," << interval.end << ","
            << (interval.kind == IntervalKind::anomaly ? "anomaly" : "work_order")
            << "\n";
    }
    return out.str();
}

std::vector<LabeledInterval> load_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open labels file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path + ": empty labels file");
    std::vector<LabeledInterval> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string signal, start, end, kind;
        if (!std::getline(ss, signal, ',') || !std::getline(ss, start, ',') ||
            !std::getline(ss, end, ',') || !std::getline(ss, kind)) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected signal,start,end,kind");
        }
        LabeledInterval interval;
        interval.signal = signal;
        interval.start = parse_timestamp(start);
        interval.end = parse_timestamp(end);
        if (kind == "anomaly") {
            interval.kind = IntervalKind::anomaly;
        } else if (kind == "work_order") {
            interval.kind = IntervalKind::work_order;
        } else {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": unknown interval kind '" + kind + "'");
        }
        interval.validate();
        out.push_back(std::move(interval));
    }
    return out;
}

// ---- Mixture misspecification bias ---------------------------------------

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
    if (depth > 60) throw NumericError("quadrature failed to converge");
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 0);
}

double golden_minimize(const std::function<double(double)>& f, double lo, double hi,
                       double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

} // namespace

MixtureBiasPoint verify_mixture_bias(double mu_star, double rho, double sigma) {
    if (!(rho > 0.0)) throw ArgumentError("verify_mixture_bias: rho must be positive");
    if (!(sigma > 0.0)) throw ArgumentError("verify_mixture_bias: sigma must be positive");

    const double m1 = mu_star * (1.0 + rho);
    const double m2 = mu_star * (1.0 - rho);
    const double lo = std::min(m1, m2) - 13.0 * sigma;
    const double hi = std::max(m1, m2) + 13.0 * sigma;
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    const double norm = 1.0 / (std::sqrt(2.0 * M_PI) * sigma);

    const auto mix_pdf = [&](double x) {
        const double z1 = (x - m1) * (x - m1) * inv_two_var;
        const double z2 = (x - m2) * (x - m2) * inv_two_var;
        return 0.5 * norm * (std::exp(-z1) + std::exp(-z2));
    };
    const auto kl_to_normal = [&](double mu) {
        // KL(P*, N(mu, sigma^2)) = int p log(p/q).
        const auto integrand = [&](double x) {
            const double p = mix_pdf(x);
            if (p <= 0.0) return 0.0;
            const double log_q =
                -std::log(std::sqrt(2.0 * M_PI) * sigma) - (x - mu) * (x - mu) * inv_two_var;
            return p * (std::log(p) - log_q);
        };
        return integrate(integrand, lo, hi, 1e-12);
    };

    const double mean = 0.5 * (m1 + m2); // mixture mean = mu_star
    const double half_width = rho * std::abs(mu_star) + sigma;
    MixtureBiasPoint point;
    point.mu_star = mu_star;
    point.rho = rho;
    point.sigma = sigma;
    point.mu_bar =
        golden_minimize(kl_to_normal, mean - half_width, mean + half_width, 1e-8);
    point.bias = std::abs(mu_star - point.mu_bar);
    point.bound = rho * std::abs(mu_star) +
                  std::pow(rho * std::abs(mu_star) / sigma, 0.25);
    return point;
}

// ---- Tail-probability ratio ----------------------------------------------

std::vector<TailRatioPoint> verify_tail_ratio(double alpha, double theta,
                                     std::span<const double> s_grid) {
    if (!(alpha > 0.0) || !(theta > 0.0)) {
        throw ArgumentError("verify_tail_ratio: alpha and theta must be positive");
    }
    double prev = -std::numeric_limits<double>::infinity();
    std::vector<TailRatioPoint> out;
    for (double s : s_grid) {
        if (!(s > 0.0) || s <= prev) {
            throw ArgumentError("verify_tail_ratio: s grid must be positive ascending");
        }
        prev = s;
        TailRatioPoint point;
        point.alpha = alpha;
        point.theta = theta;
        point.s = s;
        point.log_ratio =
            stats::log_gamma_sf(alpha, 2.0, s) - stats::log_gamma_sf(alpha, theta, s);
        point.saturated = std::abs(point.log_ratio) > 700.0;
        point.ratio = point.saturated ? (point.log_ratio > 0
                                             ? std::numeric_limits<double>::infinity()
                                             : 0.0)
                                      : std::exp(point.log_ratio);
        out.push_back(point);
    }
    return out;
}

PropositionReport verify_propositions() {
    PropositionReport report;
    for (double mu_star : {0.5, 1.0, 2.0}) {
        for (double rho : {0.1, 0.5, 1.0}) {
            for (double sigma : {0.5, 1.0}) {
                report.mixture_bias.push_back(verify_mixture_bias(mu_star, rho, sigma));
            }
        }
    }
    const std::vector<double> grid = {1.0, 10.0, 100.0, 200.0, 500.0};
    for (double theta : {1.5, 2.0, 3.0}) {
        const auto points = verify_tail_ratio(2.0, theta, grid);
        report.tail_ratio.insert(report.tail_ratio.end(), points.begin(), points.end());
    }
    return report;
}

std::string proposition_report_text(const PropositionReport& report) {
    std::ostringstream out;
    char line[160];
    out << "misspecification bias (KL projection of a symmetric two-component "
           "mixture onto a fixed-sigma normal)\n";
    out << "  mu*     rho   sigma   mu_bar        bias         bound\n";
    for (const auto& p : report.mixture_bias) {
        std::snprintf(line, sizeof(line), "  %-7.3g %-5.3g %-7.3g %-13.6g %-12.3e %-.6g\n",
                      p.mu_star, p.rho, p.sigma, p.mu_bar, p.bias, p.bound);
        out << line;
    }
    out << "\ntail-probability ratio: chi-square(2 alpha) over Gamma(alpha, theta)\n";
    out << "  alpha  theta  S        ratio         log_ratio\n";
    for (const auto& p : report.tail_ratio) {
        std::snprintf(line, sizeof(line), "  %-6.3g %-6.3g %-8.6g %-13.6g %-.6g%s\n",
                      p.alpha, p.theta, p.s, p.ratio, p.log_ratio,
                      p.saturated ? "  (saturated)" : "");
        out << line;
    }
    return out.str();
}

// ---- Ablation ----------------------------------------------------------

std::vector<AblationVariant> standard_ablation_variants() {
    return {
        {"static_4sigma", true, false, false},
        {"normal_chi2", false, true, true},
        {"normal_gamma", false, true, false},
        {"gmm_chi2", false, false, true},
        {"gmm_gamma", false, false, false},
    };
}

std::vector<AblationRow> run_ablation(const AssetFrame& raw,
                                      std::span<const LabeledInterval> truth,
                                      const PipelineConfig& config,
                                      std::span<const AblationVariant> variants) {
    PreparedTraining prepared = preprocess_training(raw, config);
    const AssetFrame& frame = prepared.frame;
    const std::size_t n = prepared.split.train_end;
    const std::size_t d = frame.sensor_count();
    const std::size_t w = config.forecaster.window;

    const WindowedDataset dataset = make_windows(frame, w, 0, n);
    ForecastModel forecaster = init_forecaster(
        dataset.input_width, config.forecaster.hidden, d, config.forecaster.train.seed);
    train(forecaster, dataset, config.forecaster.train);

    const std::vector<DiscrepancyConfig> sensor_errors = [&] {
        std::vector<DiscrepancyConfig> out;
        for (const auto& meta : frame.sensor_meta) {
            out.push_back(config.discrepancy.for_sensor(meta).discrepancy());
        }
        return out;
    }();

    // One error pass over the whole series; rows [w, n) are training.
    const ErrorSeriesMatrix errors =
        compute_errors(forecaster, sensor_errors, frame, 0, frame.rows());
    const std::size_t train_rows = n - w;
    const std::size_t test_rows = errors.indices.size() - train_rows;

    // The chi-square comparison is only the classical one on the unweighted
    // Fisher statistic (lambda_k = 1, null chi-square(2d) under
    // independence), so every variant scores with classical weights.
    const std::vector<double> weights(d, 1.0);
    const double weight_sum = static_cast<double>(d);

    std::vector<AblationRow> rows;
    for (const auto& variant : variants) {
        AblationRow row;
        row.variant = variant.name;

        std::vector<std::uint8_t> flags(test_rows, 0);
        std::vector<double> peak_scores(test_rows, 0.0);

        if (variant.static_threshold) {
            // Any sensor outside its train mu +- 4 sigma flags the asset.
            for (std::size_t k = 0; k < d; ++k) {
                std::vector<double> train_e(train_rows);
                for (std::size_t t = 0; t < train_rows; ++t) {
                    train_e[t] = errors.errors(t, k);
                }
                const double mu = stats::mean(train_e);
                const double sd = stats::stdev(train_e);
                for (std::size_t t = 0; t < test_rows; ++t) {
                    const double z =
                        sd > 0.0
                            ? std::abs(errors.errors(train_rows + t, k) - mu) / sd
                            : 0.0;
                    peak_scores[t] = std::max(peak_scores[t], z);
                    if (z > 4.0) flags[t] = 1;
                }
            }
            row.threshold = 4.0;
        } else {
            std::vector<GmmModel> gmms(d);
            for (std::size_t k = 0; k < d; ++k) {
                std::vector<double> train_e(train_rows);
                for (std::size_t t = 0; t < train_rows; ++t) {
                    train_e[t] = errors.errors(t, k);
                }
                EmOptions opts;
                opts.seed = derive_seed(config.gmm.seed, k);
                opts.max_iter = config.gmm.max_iter;
                opts.tol = config.gmm.tol;
                const int m =
                    variant.force_single_component
                        ? 1
                        : config.gmm.components_for(frame.sensor_meta[k].system);
                gmms[k] = m == 0 ? select_components(train_e, config.gmm.m_max, opts).model
                                 : em_fit(train_e, static_cast<std::size_t>(m), opts);
                gmms[k].tail_mode = frame.sensor_meta[k].tail_mode;
            }

            std::vector<double> scores(errors.indices.size());
            std::vector<double> p(d);
            for (std::size_t t = 0; t < errors.indices.size(); ++t) {
                for (std::size_t k = 0; k < d; ++k) {
                    p[k] = p_value(gmms[k], errors.errors(t, k));
                }
                scores[t] = fisher_score_step(p, weights);
            }
            const std::vector<double> train_scores(scores.begin(),
                                                   scores.begin() + train_rows);
            if (variant.chi_square_calibration) {
                row.threshold = stats::gamma_quantile(weight_sum, 2.0,
                                                      1.0 - config.scoring.significance);
            } else {
                const auto [alpha, theta] = fit_gamma_moments(train_scores);
                row.threshold =
                    stats::gamma_quantile(alpha, theta, 1.0 - config.scoring.significance);
            }
            for (std::size_t t = 0; t < test_rows; ++t) {
                peak_scores[t] = scores[train_rows + t];
                flags[t] = scores[train_rows + t] > row.threshold ? 1 : 0;
            }
        }

        const std::vector<AnomalyEvent> events =
            extract_events(flags, peak_scores, config.scoring.max_gap);
        std::vector<LabeledInterval> detected;
        for (const auto& ev : events) {
            detected.push_back({frame.timestamps[errors.indices[train_rows + ev.start]],
                                frame.timestamps[errors.indices[train_rows + ev.end]],
                                IntervalKind::anomaly, config.asset});
        }
        const MatchCounts counts = match_detection(detected, truth);
        const std::vector<std::pair<std::string, MatchCounts>> per_signal = {
            {config.asset, counts}};
        row.report = aggregate(per_signal);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ablation_table_text(std::span<const AblationRow> rows) {
    std::ostringstream out;
    out << "variant         threshold   tp  fp  fn  precision  recall  f1      f0.5\n";
    char line[160];
    for (const auto& row : rows) {
        const auto fmt = [](const std::optional<double>& v) {
            char buf[16];
            if (!v) return std::string("-");
            std::snprintf(buf, sizeof(buf), "%.4f", *v);
            return std::string(buf);
        };
        std::snprintf(line, sizeof(line), "%-15s %-11.4g %-3zu %-3zu %-3zu %-10s %-7s %-7s %s\n",
                      row.variant.c_str(), row.threshold, row.report.tp, row.report.fp,
                      row.report.fn, fmt(row.report.precision).c_str(),
                      fmt(row.report.recall).c_str(), fmt(row.report.f1).c_str(),
                      fmt(row.report.f05).c_str());
        out << line;
    }
    return out.str();
}

} // namespace m2ad
