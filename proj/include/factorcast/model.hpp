// model.hpp
// Recurrent forecasters (vanilla RNN, LSTM, GRU) with a fully connected
// head, trained by full backpropagation through time under quantile
// (pinball) or RMSE loss. Training is deterministic given (seed, config,
// data); gradient_check verifies the BPTT path against central finite
// differences.

#pragma once

#include "factorcast/timeseries.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace factorcast {

enum class Architecture { Rnn, Lstm, Gru };

struct LossConfig {
    enum class Kind { Quantile, Rmse };
    Kind kind = Kind::Quantile;
    std::vector<double> quantiles = {0.1, 0.5, 0.9}; // ascending, in (0,1)

    int output_width() const {
        return kind == Kind::Quantile ? static_cast<int>(quantiles.size()) : 1;
    }
};

struct ModelConfig {
    Architecture architecture = Architecture::Lstm;
    int hidden_size = 16;
    int input_size = 0; // 0: adopt from the training data
    LossConfig loss;
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 32;
    std::uint64_t seed = 0;
    int window_len = 5;
    double grad_clip = 0.0; // global-norm threshold; <= 0 disables

    void validate() const; // throws ConfigError
};

// Named segment of the flat parameter vector.
struct ParamSegment {
    std::string name;
    int offset = 0;
    int rows = 0;
    int cols = 0;
};

std::vector<ParamSegment> param_segments(const ModelConfig& config);
int param_count(const ModelConfig& config);

// Min-max scaling fitted on the training split only. Degenerate features
// (max == min) are widened by +-0.5 so the pair stays strictly ordered.
struct MinMaxNormalizer {
    std::vector<std::pair<double, double>> feature_range; // per input column
    std::pair<double, double> target_range{0.0, 1.0};

    Eigen::MatrixXd transform(const Eigen::MatrixXd& window) const;
    double normalize_target(double value) const;
    double denormalize_target(double value) const;
};

struct TrainedForecaster {
    ModelConfig config;
    Eigen::VectorXd weights;
    MinMaxNormalizer normalizer;
    std::vector<double> training_loss_history; // mean loss per epoch
};

struct ForecastSeries {
    std::vector<std::string> dates;
    std::vector<Eigen::VectorXd> predicted; // one value per quantile (or 1)
    std::vector<double> actual;
    std::vector<double> point_estimate;     // median quantile / single output

    std::size_t size() const { return dates.size(); }
};

// Runs the recurrence over the window rows from zero initial state and
// maps the final hidden state through the head.
Eigen::VectorXd forward(const ModelConfig& config, const Eigen::VectorXd& weights,
                        const Eigen::MatrixXd& window);

// Mean over quantiles of max((q-1)*e, q*e) with e = actual - predicted_q.
double quantile_loss(std::span<const double> predicted, double actual,
                     std::span<const double> quantiles);

// sqrt(mean of squared errors).
double rmse_loss(std::span<const double> predicted, std::span<const double> actual);

TrainedForecaster train(const ModelConfig& config, const WindowedDataset& train_set);

ForecastSeries predict(const TrainedForecaster& model, const WindowedDataset& dataset);

// Max relative error between the analytic gradient and central finite
// differences (step 1e-6) over a seeded subset of >= 200 coordinates.
double gradient_check(const ModelConfig& config, const Eigen::VectorXd& weights,
                      const Eigen::MatrixXd& window, double target);

// Versioned text serialization; hexfloat fields round-trip bit-exactly.
void save_forecaster(const TrainedForecaster& model, const std::string& path);
TrainedForecaster load_forecaster(const std::string& path);

const char* architecture_name(Architecture arch);
Architecture architecture_from_name(const std::string& name);

} // namespace factorcast
