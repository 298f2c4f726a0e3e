#include "m2ad/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "m2ad/errors.hpp"
#include "m2ad/parallel.hpp"
#include "m2ad/rng.hpp"

namespace m2ad {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y[0..m) += A[m x n] * x[0..n), A row-major at `a`.
void gemv_accum(const double* a, std::size_t m, std::size_t n, const double* x,
                double* y) {
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = a + r * n;
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += row[c] * x[c];
        y[r] += s;
    }
}

// Per-step activations kept for backpropagation.
struct StepTrace {
    std::vector<double> gates; // 4h: i, f, g, o after activation
    std::vector<double> c;
    std::vector<double> tanh_c;
    std::vector<double> h;
};

struct ForwardTrace {
    std::vector<StepTrace> steps;
    std::vector<double> output;
};

ForwardTrace run_forward(const ForecastModel& model, const Matrix& window,
                         bool keep_trace) {
    const std::size_t h = model.hidden;
    const std::size_t in = model.input_width;
    const std::size_t d = model.output_dim;
    const double* w = model.params.data() + model.off_w();
    const double* u = model.params.data() + model.off_u();
    const double* b = model.params.data() + model.off_b();
    const double* wout = model.params.data() + model.off_wout();
    const double* bout = model.params.data() + model.off_bout();

    ForwardTrace trace;
    if (keep_trace) trace.steps.resize(window.rows());

    std::vector<double> hs(h, 0.0);
    std::vector<double> cs(h, 0.0);
    std::vector<double> z(4 * h);

    for (std::size_t t = 0; t < window.rows(); ++t) {
        std::copy(b, b + 4 * h, z.begin());
        gemv_accum(w, 4 * h, in, window.row(t), z.data());
        gemv_accum(u, 4 * h, h, hs.data(), z.data());

        StepTrace* st = keep_trace ? &trace.steps[t] : nullptr;
        if (st) {
            st->gates.resize(4 * h);
            st->c.resize(h);
            st->tanh_c.resize(h);
            st->h.resize(h);
        }
        for (std::size_t j = 0; j < h; ++j) {
            const double gi = sigmoid(z[j]);
            const double gf = sigmoid(z[h + j]);
            const double gg = std::tanh(z[2 * h + j]);
            const double go = sigmoid(z[3 * h + j]);
            const double c_new = gf * cs[j] + gi * gg;
            const double tc = std::tanh(c_new);
            cs[j] = c_new;
            hs[j] = go * tc;
            if (st) {
                st->gates[j] = gi;
                st->gates[h + j] = gf;
                st->gates[2 * h + j] = gg;
                st->gates[3 * h + j] = go;
                st->c[j] = c_new;
                st->tanh_c[j] = tc;
                st->h[j] = hs[j];
            }
        }
    }

    trace.output.assign(bout, bout + d);
    gemv_accum(wout, d, h, hs.data(), trace.output.data());
    return trace;
}

// Squared-L2 loss gradient for one pair, accumulated into grad (same layout
// as params, scaled by `scale`). Returns the pair loss.
double backward_pair(const ForecastModel& model, const Matrix& window,
                     std::span<const double> target, double scale,
                     std::vector<double>& grad) {
    if (window.rows() == 0 || window.cols() != model.input_width ||
        target.size() != model.output_dim) {
        throw ArgumentError("backward: window or target shape does not match model");
    }
    const std::size_t h = model.hidden;
    const std::size_t in = model.input_width;
    const std::size_t d = model.output_dim;
    const std::size_t steps = window.rows();
    const double* u = model.params.data() + model.off_u();
    const double* wout = model.params.data() + model.off_wout();

    const ForwardTrace trace = run_forward(model, window, true);

    double loss = 0.0;
    std::vector<double> dy(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double r = trace.output[j] - target[j];
        loss += r * r;
        dy[j] = 2.0 * r;
    }

    double* g_w = grad.data() + model.off_w();
    double* g_u = grad.data() + model.off_u();
    double* g_b = grad.data() + model.off_b();
    double* g_wout = grad.data() + model.off_wout();
    double* g_bout = grad.data() + model.off_bout();

    const std::vector<double>& h_last = trace.steps[steps - 1].h;
    std::vector<double> dh(h, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        g_bout[j] += scale * dy[j];
        for (std::size_t k = 0; k < h; ++k) {
            g_wout[j * h + k] += scale * dy[j] * h_last[k];
            dh[k] += wout[j * h + k] * dy[j];
        }
    }

    std::vector<double> dc(h, 0.0);
    std::vector<double> dz(4 * h);
    std::vector<double> dh_prev(h);
    for (std::size_t t = steps; t-- > 0;) {
        const StepTrace& st = trace.steps[t];
        const double* c_prev = t > 0 ? trace.steps[t - 1].c.data() : nullptr;
        const double* h_prev = t > 0 ? trace.steps[t - 1].h.data() : nullptr;

        for (std::size_t j = 0; j < h; ++j) {
            const double gi = st.gates[j];
            const double gf = st.gates[h + j];
            const double gg = st.gates[2 * h + j];
            const double go = st.gates[3 * h + j];
            const double tc = st.tanh_c[j];

            const double d_o = dh[j] * tc;
            dc[j] += dh[j] * go * (1.0 - tc * tc);
            const double d_i = dc[j] * gg;
            const double d_g = dc[j] * gi;
            const double d_f = dc[j] * (c_prev ? c_prev[j] : 0.0);

            dz[j] = d_i * gi * (1.0 - gi);
            dz[h + j] = d_f * gf * (1.0 - gf);
            dz[2 * h + j] = d_g * (1.0 - gg * gg);
            dz[3 * h + j] = d_o * go * (1.0 - go);

            dc[j] *= gf; // becomes dc for step t-1
        }

        const double* x = window.row(t);
        for (std::size_t r = 0; r < 4 * h; ++r) {
            const double dzr = dz[r];
            if (dzr == 0.0) continue;
            double* gw_row = g_w + r * in;
            for (std::size_t c = 0; c < in; ++c) gw_row[c] += scale * dzr * x[c];
            g_b[r] += scale * dzr;
            if (h_prev) {
                double* gu_row = g_u + r * h;
                for (std::size_t c = 0; c < h; ++c) gu_row[c] += scale * dzr * h_prev[c];
            }
        }

        if (t > 0) {
            std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
            for (std::size_t r = 0; r < 4 * h; ++r) {
                const double dzr = dz[r];
                if (dzr == 0.0) continue;
                const double* u_row = u + r * h;
                for (std::size_t c = 0; c < h; ++c) dh_prev[c] += u_row[c] * dzr;
            }
            dh = dh_prev;
        }
    }

    return loss;
}

} // namespace

std::size_t ForecastModel::param_count() const {
    return 4 * hidden * input_width + 4 * hidden * hidden + 4 * hidden +
           output_dim * hidden + output_dim;
}

ForecastModel init_forecaster(std::size_t input_width, std::size_t hidden,
                              std::size_t output_dim, std::uint64_t seed) {
    if (input_width == 0 || hidden == 0 || output_dim == 0) {
        throw ArgumentError("forecaster dimensions must be positive");
    }
    ForecastModel model;
    model.input_width = input_width;
    model.hidden = hidden;
    model.output_dim = output_dim;
    model.train_config.seed = seed;
    model.params.assign(model.param_count(), 0.0);

    Rng rng(derive_seed(seed, 0x10f5));
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (std::size_t i = 0; i < model.off_b(); ++i) {
        model.params[i] = rng.uniform(-bound, bound);
    }
    for (std::size_t i = model.off_wout(); i < model.off_bout(); ++i) {
        model.params[i] = rng.uniform(-bound, bound);
    }
    // Forget-gate bias at 1 so early training keeps cell memory alive.
    for (std::size_t j = 0; j < hidden; ++j) {
        model.params[model.off_b() + hidden + j] = 1.0;
    }
    return model;
}

std::vector<double> forward(const ForecastModel& model, const Matrix& window) {
    if (window.cols() != model.input_width) {
        throw ArgumentError("forward: window width " + std::to_string(window.cols()) +
                            " does not match model input width " +
                            std::to_string(model.input_width));
    }
    if (window.rows() == 0) throw ArgumentError("forward: empty window");
    return run_forward(model, window, false).output;
}

TrainReport train(ForecastModel& model, const WindowedDataset& dataset,
                  const TrainOptions& options) {
    if (dataset.size() == 0) throw ArgumentError("train: empty dataset");
    if (dataset.input_width != model.input_width) {
        throw ArgumentError("train: dataset width does not match model");
    }
    if (options.batch == 0) throw ArgumentError("train: batch must be positive");

    model.train_config = options;
    model.window = dataset.window;

    TrainReport report;
    if (options.epochs == 0) return report;

    const std::size_t n_params = model.param_count();
    std::vector<double> grad(n_params);
    std::vector<double> adam_m(n_params, 0.0);
    std::vector<double> adam_v(n_params, 0.0);
    const double beta1 = 0.9;
    const double beta2 = 0.999;
    const double adam_eps = 1e-8;
    std::size_t adam_step = 0;

    Rng rng(derive_seed(options.seed, 0x7a11));
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stall = 0;

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss_sum = 0.0;

        for (std::size_t start = 0; start < order.size(); start += options.batch) {
            const std::size_t stop = std::min(order.size(), start + options.batch);
            const double inv = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = start; i < stop; ++i) {
                const std::size_t idx = order[i];
                epoch_loss_sum += backward_pair(model, dataset.inputs[idx],
                                                dataset.targets[idx], inv, grad);
            }

            ++adam_step;
            const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(adam_step));
            const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(adam_step));
            for (std::size_t p = 0; p < n_params; ++p) {
                adam_m[p] = beta1 * adam_m[p] + (1.0 - beta1) * grad[p];
                adam_v[p] = beta2 * adam_v[p] + (1.0 - beta2) * grad[p] * grad[p];
                const double mhat = adam_m[p] / corr1;
                const double vhat = adam_v[p] / corr2;
                model.params[p] -= options.learning_rate * mhat /
                                   (std::sqrt(vhat) + adam_eps);
            }
        }

        const double epoch_loss = epoch_loss_sum / static_cast<double>(dataset.size());
        if (!std::isfinite(epoch_loss)) {
            throw NumericError("training diverged (non-finite loss); "
                               "try a lower learning rate");
        }
        for (double p : model.params) {
            if (!std::isfinite(p)) {
                throw NumericError("training diverged (non-finite parameter); "
                                   "try a lower learning rate");
            }
        }
        report.epoch_loss.push_back(epoch_loss);
        report.epochs_run = epoch + 1;

        if (epoch_loss < best_loss * (1.0 - 1e-4)) {
            best_loss = epoch_loss;
            stall = 0;
        } else {
            best_loss = std::min(best_loss, epoch_loss);
            if (++stall >= options.patience) {
                report.early_stopped = true;
                break;
            }
        }
    }
    return report;
}

PredictionSeries predict_series(const ForecastModel& model, const AssetFrame& frame,
                                std::size_t begin, std::size_t end) {
    const std::size_t w = model.window;
    if (w == 0) throw ArgumentError("predict_series: model has no window size");
    if (end > frame.rows() || begin >= end || end - begin <= w) {
        throw ArgumentError("predict_series: range must be longer than the window");
    }

    const std::size_t count = end - begin - w;
    PredictionSeries out;
    out.predictions = Matrix(count, model.output_dim);
    out.indices.resize(count);

    parallel_for(count, [&](std::size_t i) {
        const std::size_t target_row = begin + w + i;
        // Materialize just this window; keeps memory flat for long series.
        const std::vector<double> y =
            forward(model, window_block(frame, w, target_row));
        for (std::size_t k = 0; k < model.output_dim; ++k) {
            out.predictions(i, k) = y[k];
        }
        out.indices[i] = target_row;
    });
    return out;
}

double gradient_check(const ForecastModel& model, const Matrix& window,
                      std::span<const double> target, double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
        throw ArgumentError("gradient_check: epsilon must lie in (0, 1e-2]");
    }
    const std::size_t n = model.param_count();
    std::vector<double> analytic(n, 0.0);
    backward_pair(model, window, target, 1.0, analytic);

    ForecastModel probe = model;
    const auto loss_at = [&]() {
        const std::vector<double> y = forward(probe, window);
        double loss = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double r = y[j] - target[j];
            loss += r * r;
        }
        return loss;
    };

    double worst = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double saved = probe.params[p];
        probe.params[p] = saved + epsilon;
        const double up = loss_at();
        probe.params[p] = saved - epsilon;
        const double down = loss_at();
        probe.params[p] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double rel = std::abs(analytic[p] - numeric) /
                           std::max(std::abs(analytic[p]) + std::abs(numeric), 1e-8);
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace m2ad
