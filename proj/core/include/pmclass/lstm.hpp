#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "pmclass/optim.hpp"
#include "pmclass/sensor_model.hpp"

namespace pmclass {

// Single-layer LSTM with a linear + softmax head, one prediction per timestep.
// Default geometry is 10 inputs -> 50 hidden units -> 4 classes; tests shrink
// the hidden size.
struct LstmModel {
    int input_dim = kNumFeatures;
    int hidden_dim = 50;

    // Gate order everywhere: forget, input, output, cell candidate.
    Eigen::MatrixXd w_f, w_i, w_o, w_c;  // hidden x input
    Eigen::MatrixXd u_f, u_i, u_o, u_c;  // hidden x hidden
    Eigen::VectorXd b_f, b_i, b_o, b_c;  // hidden
    Eigen::MatrixXd head_w;              // classes x hidden
    Eigen::Vector4d head_b = Eigen::Vector4d::Zero();

    Scaler scaler;
    std::uint64_t seed = 0;  // initialization seed, recorded for provenance

    // Weights uniform in (-k, k) with k = 1/sqrt(hidden_dim); zero biases.
    static LstmModel init(int input_dim, int hidden_dim, std::uint64_t seed);

    Eigen::Index parameter_count() const;
    Eigen::VectorXd parameter_vector() const;
    void set_parameters(const Eigen::VectorXd& params);
};

// Per-timestep activations cached by the forward pass for backpropagation.
struct LstmTape {
    Eigen::MatrixXd inputs;                  // input_dim x T (already scaled)
    Eigen::MatrixXd f, i, o, cand, c, h;     // hidden_dim x T
    Eigen::MatrixXd logits;                  // classes x T

    Eigen::Index length() const { return inputs.cols(); }
};

// Runs the gate equations left to right with h_0 = c_0 = 0. `inputs` columns
// are timesteps in scaled feature space.
LstmTape lstm_forward(const LstmModel& model, const Eigen::MatrixXd& inputs);

// Exact gradients of sum_t loss_t under the given per-step logit gradients.
// Layout matches parameter_vector().
Eigen::VectorXd lstm_backward(const LstmModel& model, const LstmTape& tape,
                              const Eigen::MatrixXd& dlogits);

struct LstmOptions {
    int iterations = 1000;  // full passes over the training set
    double learning_rate = 0.001;
    int hidden_dim = 50;
    std::uint64_t seed = 0;
};

struct LstmTrainResult {
    LstmModel model;
    std::vector<double> loss_history;  // mean per-step cross-entropy, pre-update
};

// Full BPTT per session (no truncation), gradients summed across sessions,
// one Adam update per pass. Loss is the mean over every timestep of every
// session. Deterministic given the seed.
LstmTrainResult train_lstm(const Dataset& train, const LstmOptions& options = {});

// Streaming hidden state; reset at session boundaries.
struct LstmState {
    Eigen::VectorXd h, c;
    explicit LstmState(int hidden_dim)
        : h(Eigen::VectorXd::Zero(hidden_dim)), c(Eigen::VectorXd::Zero(hidden_dim)) {}
};

// One frame: scales the features, advances the state, returns the posterior.
ProbVector lstm_step(const LstmModel& model, LstmState& state, const FeatureVector& x);

std::vector<PollutantLabel> predict_sequence(const LstmModel& model,
                                             std::span<const SensorFrame> frames);

}  // namespace pmclass
