#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m2ad/config.hpp"
#include "m2ad/data_model.hpp"
#include "m2ad/evaluation.hpp"
#include "m2ad/pipeline.hpp"

namespace m2ad {

enum class AnomalyType { spike, level_shift, contextual };

std::string to_string(AnomalyType type);
AnomalyType anomaly_type_from_string(const std::string& s);

struct AnomalySpec {
    AnomalyType type = AnomalyType::level_shift;
    std::string column; // system.sensor.summary
    std::size_t start = 0;
    std::size_t duration = 1;
    double magnitude = 4.0; // in units of the sensor's noise sigma
};

struct SensorSpec {
    std::string name;
    std::string summary = "value";
    double period = 24.0; // steps per cycle
    double amplitude = 1.0;
    double phase = 0.0;
    double noise_sigma = 0.1;
    double latent_loading = 1.0;
    // Two-level regime switching (normal behavior, e.g. run vs idle);
    // gap 0 disables it.
    double regime_gap = 0.0;
    double regime_flip_prob = 0.0;
};

struct SystemSpec {
    std::string name;
    std::vector<SensorSpec> sensors;
};

// Cyclic categorical covariate whose level shifts every sensor's baseline.
struct CovariateSpec {
    std::string name;       // full column name, cov.*
    std::size_t period = 168;
    int levels = 3;
    double effect = 0.0;
};

struct SynthConfig {
    std::string asset = "synthetic";
    std::uint64_t seed = 1;
    std::size_t rows = 5000;
    std::int64_t step_seconds = 3600;
    std::int64_t start_time = 0;
    double rho_dep = 0.0; // shared latent factor loading, in [0, 1)
    double ar_phi = 0.8;  // AR(1) coefficient of the latent factor
    std::vector<SystemSpec> systems;
    std::vector<CovariateSpec> covariates;
    std::vector<AnomalySpec> anomalies;
};

struct SynthResult {
    AssetFrame frame;
    std::vector<LabeledInterval> truth;
};

// Deterministic per seed; sensors are base pattern + shared AR(1) latent
// factor + independent noise, with anomalies injected per spec.
SynthResult generate(const SynthConfig& config);

SynthConfig load_scenario(const std::string& path);
SynthConfig parse_scenario(const std::string& json_text);

// Writes frame + truth in the CLI file formats (data CSV, labels CSV).
std::string frame_to_csv(const AssetFrame& frame);
std::string labels_to_csv(std::span<const LabeledInterval> truth);
std::vector<LabeledInterval> load_labels_csv(const std::string& path);

// ---- Numeric verification of the scoring claims -----------------------

struct MixtureBiasPoint {
    double mu_star, rho, sigma;
    double mu_bar;  // KL projection of the mixture onto a fixed-sigma normal
    double bias;    // |mu_star - mu_bar|
    double bound;   // rho|mu*| + (rho|mu*|/sigma)^(1/4), constant c = 1
};

// Minimizes KL(mixture, N(mu, sigma^2)) by quadrature + golden section.
MixtureBiasPoint verify_mixture_bias(double mu_star, double rho, double sigma);

struct TailRatioPoint {
    double alpha, theta, s;
    double log_ratio; // log of tail ratio chi-square(2 alpha) / Gamma(a,theta)
    double ratio;     // exp(log_ratio); +inf or 0 when saturated
    bool saturated;   // |log_ratio| too large for a finite double ratio
};

// Tail-probability ratio of the chi-square(2 alpha) approximation to the
// true Gamma(alpha, theta), evaluated in log space so deep tails stay
// exact. Limits: 1 at theta = 2, +inf for theta < 2, 0 for theta > 2 --
// the chi-square recipe misjudges the tail by exp(S(1/theta - 1/2)).
std::vector<TailRatioPoint> verify_tail_ratio(double alpha, double theta,
                                              std::span<const double> s_grid);

struct PropositionReport {
    std::vector<MixtureBiasPoint> mixture_bias;
    std::vector<TailRatioPoint> tail_ratio;
};

// Default grids used by the verify-props command.
PropositionReport verify_propositions();
std::string proposition_report_text(const PropositionReport& report);

// ---- Ablation harness -------------------------------------------------

struct AblationVariant {
    std::string name;
    bool static_threshold = false;       // per-sensor mu +- 4 sigma flagging
    bool force_single_component = false; // Normal instead of GMM
    bool chi_square_calibration = false; // Gamma(sum lambda, 2) threshold
};

std::vector<AblationVariant> standard_ablation_variants();

struct AblationRow {
    std::string variant;
    double threshold = 0.0;
    EvalReport report;
};

// Shares one forecaster fit across variants, then scores each variant's
// sensor-model / calibration combination against the truth intervals.
std::vector<AblationRow> run_ablation(const AssetFrame& raw,
                                      std::span<const LabeledInterval> truth,
                                      const PipelineConfig& config,
                                      std::span<const AblationVariant> variants);

std::string ablation_table_text(std::span<const AblationRow> rows);

} // namespace m2ad
