#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "cloudedge/adam.hpp"
#include "cloudedge/matrix.hpp"
#include "cloudedge/tape.hpp"

namespace cloudedge::gcrl {

using numerics::Matrix;

struct GcrlConfig {
    std::size_t layers = 5;
    std::size_t hidden = 64;
    std::size_t n_classes = 2;
    std::size_t window = 11;  // T = B + 1
    std::size_t n_sensors = 0;
};

void validate(const GcrlConfig& config);

/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I. `adjacency` is
/// row-major n x n, symmetric 0/1 with zero diagonal.
Matrix propagation_matrix(std::span<const int> adjacency, std::size_t n);

/// Trainable weights plus the frozen propagation matrix and the per-sensor
/// standardization of raw inputs.
///
/// Per layer l the weights are, in order:
///   gcn        in x H      (in = T for l = 0, else H)
///   lstm_wx    1 x 4H      input -> gates [i | f | g | o]
///   lstm_wh    H x 4H      hidden -> gates
///   lstm_b     1 x 4H
///   lstm_wout  H x 1       per-step scalar projection
///   lstm_bout  1 x 1
/// followed by readout_w (H x C) and readout_b (1 x C).
struct GcrlParams {
    GcrlConfig config;
    Matrix propagation;
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    std::vector<numerics::NamedMatrix> weights;

    static constexpr std::size_t kPerLayer = 6;
    enum LayerSlot : std::size_t { Gcn = 0, LstmWx, LstmWh, LstmB, LstmWout, LstmBout };

    const Matrix& layer(std::size_t l, LayerSlot slot) const { return weights.at(l * kPerLayer + slot).value; }
    Matrix& layer(std::size_t l, LayerSlot slot) { return weights.at(l * kPerLayer + slot).value; }
    const Matrix& readout_w() const { return weights.at(config.layers * kPerLayer).value; }
    const Matrix& readout_b() const { return weights.at(config.layers * kPerLayer + 1).value; }

    /// Glorot-uniform weights, zero biases, identity standardization.
    static GcrlParams initialize(const GcrlConfig& config, Matrix propagation, std::uint64_t seed);
};

/// Values recorded during one forward pass, per layer.
struct ForwardTrace {
    std::vector<numerics::Var> params;     // parallel to GcrlParams::weights
    std::vector<numerics::Var> gcn;        // y_G,l
    std::vector<numerics::Var> lstm;       // y_L,l
    std::vector<numerics::Var> layer_out;  // y_L+G,l
    numerics::Var logits;
};

/// Records the model on `tape`. `features` stacks a batch of b samples as
/// (b*N) x T rows; inputs are used as given (no standardization).
ForwardTrace forward(numerics::Tape& tape, const GcrlParams& params, const Matrix& features);

/// Logits (1 x C) for one already-standardized N x T sample.
Matrix forward_logits(const Matrix& features, const GcrlParams& params);

/// Applies the per-sensor standardization stored in `params` to a raw N x T window.
Matrix standardize(const Matrix& raw, const GcrlParams& params);

Matrix stack_rows(std::span<const Matrix> samples);

struct Sample {
    Matrix features;  // raw N x T
    int label = 0;
};

struct LossAndGradients {
    double loss = 0.0;
    std::vector<Matrix> gradients;  // parallel to GcrlParams::weights
};

/// Mean cross-entropy over a batch of standardized samples and its gradient.
LossAndGradients loss_and_gradients(const GcrlParams& params, std::span<const Matrix> features,
                                    std::span<const int> labels);

struct TrainOptions {
    std::size_t max_epochs = 500;
    std::size_t patience = 20;
    /// A validation loss must undercut the best by more than this to reset patience.
    double min_improvement = 1e-4;
    std::size_t batch_size = 32;
    double validation_fraction = 0.1;
    numerics::AdamOptions adam;
    std::uint64_t seed = 1;
    /// Record the full training-set loss after each epoch instead of the mean batch loss.
    bool track_train_loss = false;
};

struct TrainReport {
    double initial_loss = 0.0;  // full training-set loss before the first update
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::size_t best_epoch = 0;  // 1-based
    std::size_t epochs_run = 0;
    std::size_t train_size = 0;
    std::size_t validation_size = 0;
};

/// Adam on cross-entropy with a held-out validation split and early stopping;
/// returns the parameters of the best validation epoch.
GcrlParams train(std::span<const Sample> data, const GcrlConfig& config, const Matrix& propagation,
                 const TrainOptions& options, TrainReport* report = nullptr);

struct Prediction {
    int label = 0;
    double confidence = 0.0;  // softmax probability of `label`
};

/// Argmax of the logits; ties go to the lower class id.
Prediction predict_from_logits(std::span<const double> logits);

/// Classifies a raw N x T window.
Prediction classify(const Matrix& raw, const GcrlParams& params);
std::vector<Prediction> classify_batch(std::span<const Matrix> raw, const GcrlParams& params,
                                       std::size_t batch_size = 64);

void save(const std::filesystem::path& stem, const GcrlParams& params, const nlohmann::json& meta = {});
GcrlParams load(const std::filesystem::path& stem);

nlohmann::json to_json(const GcrlConfig& config);

}  // namespace cloudedge::gcrl
