#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "m2ad/data_model.hpp"
#include "m2ad/matrix.hpp"

namespace m2ad {

struct TrainOptions {
    std::size_t epochs = 30;
    double learning_rate = 1e-3;
    std::size_t batch = 64;
    std::size_t patience = 5;
    std::uint64_t seed = 42;
};

struct TrainReport {
    std::vector<double> epoch_loss; // mean squared-L2 loss per epoch
    std::size_t epochs_run = 0;
    bool early_stopped = false;
};

// Single-layer LSTM with a dense readout of the final hidden state.
// Parameters live in one flat vector so optimizer state, finite-difference
// checks, and serialization all see the same layout:
//   [W 4h x in][U 4h x h][b 4h][Wout d x h][bout d]
// with gate rows packed input, forget, candidate, output.
struct ForecastModel {
    std::size_t input_width = 0;
    std::size_t hidden = 0;
    std::size_t output_dim = 0;
    std::size_t window = 0; // snapshot of the training window size
    TrainOptions train_config;
    std::vector<double> params;

    std::size_t param_count() const;

    // Flat offsets into params.
    std::size_t off_w() const { return 0; }
    std::size_t off_u() const { return 4 * hidden * input_width; }
    std::size_t off_b() const { return off_u() + 4 * hidden * hidden; }
    std::size_t off_wout() const { return off_b() + 4 * hidden; }
    std::size_t off_bout() const { return off_wout() + output_dim * hidden; }
};

// Uniform init in +-1/sqrt(hidden); forget-gate bias starts at 1.
ForecastModel init_forecaster(std::size_t input_width, std::size_t hidden,
                              std::size_t output_dim, std::uint64_t seed);

// Runs the cell over the window rows in time order from zero state and
// returns the readout of the final hidden state. Pure.
std::vector<double> forward(const ForecastModel& model, const Matrix& window);

// Minimizes the mean squared-L2 loss by backpropagation through time with
// Adam updates. Mini-batches are drawn in seeded shuffled order; stops early
// after `patience` epochs without a relative 1e-4 improvement.
TrainReport train(ForecastModel& model, const WindowedDataset& dataset,
                  const TrainOptions& options);

struct PredictionSeries {
    Matrix predictions;               // (len - window) x d
    std::vector<std::size_t> indices; // frame row of each prediction
};

// Sliding one-step-ahead predictions over frame rows [begin, end); the
// prediction for row t reads only rows before t.
PredictionSeries predict_series(const ForecastModel& model, const AssetFrame& frame,
                                std::size_t begin, std::size_t end);

// Max over parameters of |g_analytic - g_numeric| / max(|ga|+|gn|, 1e-8)
// for the squared-L2 loss at (window, target), central differences.
double gradient_check(const ForecastModel& model, const Matrix& window,
                      std::span<const double> target, double epsilon);

} // namespace m2ad
