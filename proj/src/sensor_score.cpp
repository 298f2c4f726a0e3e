#include "m2ad/sensor_score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "m2ad/errors.hpp"
#include "m2ad/rng.hpp"
#include "m2ad/stats.hpp"

namespace m2ad {

namespace {

double sigma_floor(double sample_stdev) {
    return std::max(1e-6, 1e-4 * sample_stdev);
}

double log_normal_pdf(double x, double mean, double stdev) {
    const double z = (x - mean) / stdev;
    return -0.5 * z * z - std::log(stdev) - 0.5 * std::log(2.0 * M_PI);
}

double log_sum_exp(std::span<const double> xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

struct EmRun {
    std::vector<GmmComponent> components;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> ll_trace;
};

EmRun run_em(std::span<const double> errors, std::vector<GmmComponent> comps,
             double floor, const EmOptions& options) {
    const std::size_t n = errors.size();
    const std::size_t m = comps.size();
    std::vector<double> resp(n * m);
    std::vector<double> logs(m);

    EmRun run;
    run.components = std::move(comps);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
        // E-step with log-sum-exp; also accumulates the log-likelihood.
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                logs[j] = std::log(run.components[j].weight) +
                          log_normal_pdf(errors[i], run.components[j].mean,
                                         run.components[j].stdev);
            }
            const double denom = log_sum_exp(logs);
            ll += denom;
            for (std::size_t j = 0; j < m; ++j) {
                resp[i * m + j] = std::exp(logs[j] - denom);
            }
        }
        run.ll_trace.push_back(ll);
        run.iterations = iter;
        run.log_likelihood = ll;

        if (std::isfinite(prev_ll)) {
            const double rel = std::abs(ll - prev_ll) /
                               std::max(1.0, std::abs(prev_ll));
            if (rel < options.tol) {
                run.converged = true;
                break;
            }
        }
        prev_ll = ll;

        // M-step.
        for (std::size_t j = 0; j < m; ++j) {
            double nj = 0.0;
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nj += resp[i * m + j];
                sum += resp[i * m + j] * errors[i];
            }
            if (nj < 1e-12) {
                // Dead component: keep its parameters, floor the weight.
                run.components[j].weight = 1e-12;
                continue;
            }
            const double mean = sum / nj;
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = errors[i] - mean;
                var += resp[i * m + j] * d * d;
            }
            var /= nj;
            run.components[j].weight = nj / static_cast<double>(n);
            run.components[j].mean = mean;
            run.components[j].stdev = std::max(floor, std::sqrt(var));
        }
        double wsum = 0.0;
        for (const auto& c : run.components) wsum += c.weight;
        for (auto& c : run.components) c.weight /= wsum;
    }
    return run;
}

} // namespace

void GmmModel::validate() const {
    if (components.empty()) throw ArgumentError("GMM has no components");
    double wsum = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0 && c.weight <= 1.0)) {
            throw NumericError("GMM component weight outside (0, 1]");
        }
        if (!(c.stdev > 0.0) || !std::isfinite(c.mean)) {
            throw NumericError("GMM component has invalid parameters");
        }
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9) {
        throw NumericError("GMM weights do not sum to 1");
    }
    for (std::size_t j = 1; j < components.size(); ++j) {
        if (components[j].mean < components[j - 1].mean) {
            throw NumericError("GMM components not sorted by mean");
        }
    }
}

GmmModel em_fit(std::span<const double> errors, std::size_t components,
                const EmOptions& options) {
    if (components < 1) throw ArgumentError("em_fit: need at least one component");
    if (errors.size() < 8 * components) {
        throw ArgumentError("em_fit: " + std::to_string(errors.size()) +
                            " samples is too few for " + std::to_string(components) +
                            " components (need >= " + std::to_string(8 * components) +
                            ")");
    }

    const double sample_mean = stats::mean(errors);
    double sample_sd = 0.0;
    {
        double s = 0.0;
        for (double e : errors) {
            const double d = e - sample_mean;
            s += d * d;
        }
        sample_sd = std::sqrt(s / static_cast<double>(errors.size()));
    }
    const double floor = sigma_floor(sample_sd);

    GmmModel model;
    if (components == 1) {
        model.components = {{1.0, sample_mean, std::max(floor, sample_sd)}};
        model.log_likelihood = gmm_log_likelihood(model, errors);
        model.converged = true;
        model.ll_trace = {model.log_likelihood};
        model.validate();
        return model;
    }

    if (sample_sd == 0.0) {
        throw NumericError("em_fit: all samples identical; cannot fit " +
                           std::to_string(components) + " components");
    }

    // Quantile-spread initialization; restarts jitter the means.
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    const double span_lo = sorted.front();
    const double span_hi = sorted.back();

    EmRun best;
    for (std::uint64_t restart = 0; restart < 3; ++restart) {
        std::vector<GmmComponent> init(components);
        Rng rng(derive_seed(options.seed, 0x6e11 + restart));
        for (std::size_t j = 0; j < components; ++j) {
            const double q = (static_cast<double>(j) + 0.5) /
                             static_cast<double>(components);
            double mean = stats::quantile(sorted, q);
            if (restart > 0) {
                mean += rng.uniform(-0.5, 0.5) * (span_hi - span_lo) /
                        static_cast<double>(components);
            }
            init[j] = {1.0 / static_cast<double>(components), mean,
                       std::max(floor, sample_sd)};
        }
        EmRun run = run_em(errors, std::move(init), floor, options);
        if (run.log_likelihood > best.log_likelihood) best = std::move(run);
    }

    model.components = best.components;
    model.log_likelihood = best.log_likelihood;
    model.iterations = best.iterations;
    model.converged = best.converged;
    model.ll_trace = best.ll_trace;
    std::sort(model.components.begin(), model.components.end(),
              [](const GmmComponent& a, const GmmComponent& b) {
                  return a.mean < b.mean;
              });
    double wsum = 0.0;
    for (const auto& c : model.components) wsum += c.weight;
    for (auto& c : model.components) c.weight /= wsum;
    model.validate();
    return model;
}

double gmm_log_likelihood(const GmmModel& model, std::span<const double> xs) {
    std::vector<double> logs(model.components.size());
    double ll = 0.0;
    for (double x : xs) {
        for (std::size_t j = 0; j < model.components.size(); ++j) {
            const auto& c = model.components[j];
            logs[j] = std::log(c.weight) + log_normal_pdf(x, c.mean, c.stdev);
        }
        ll += log_sum_exp(logs);
    }
    return ll;
}

double bic(const GmmModel& model, std::span<const double> errors) {
    if (errors.empty()) throw ArgumentError("bic: empty data");
    const double k = 3.0 * static_cast<double>(model.component_count()) - 1.0;
    return -2.0 * gmm_log_likelihood(model, errors) +
           k * std::log(static_cast<double>(errors.size()));
}

ComponentSelection select_components(std::span<const double> errors,
                                     std::size_t m_max, const EmOptions& options) {
    if (m_max < 1) throw ArgumentError("select_components: m_max must be >= 1");

    ComponentSelection out;
    out.chosen = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 1; m <= m_max; ++m) {
        GmmModel candidate = em_fit(errors, m, options);
        const double score = bic(candidate, errors);
        out.bic_values.push_back(score);
        if (score < best) {
            best = score;
            out.model = std::move(candidate);
            out.chosen = m;
        }
    }
    return out;
}

double gmm_cdf(const GmmModel& model, double x) {
    double f = 0.0;
    for (const auto& c : model.components) {
        f += c.weight * stats::normal_cdf((x - c.mean) / c.stdev);
    }
    return std::min(1.0, std::max(0.0, f));
}

double p_value(const GmmModel& model, double e) {
    const double f = gmm_cdf(model, e);
    double p = 0.0;
    switch (model.tail_mode) {
        case TailMode::two_sided: p = 2.0 * std::min(f, 1.0 - f); break;
        case TailMode::upper: p = 1.0 - f; break;
        case TailMode::lower: p = f; break;
    }
    return std::min(1.0, std::max(kPValueFloor, p));
}

} // namespace m2ad
