#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "pmclass/optim.hpp"
#include "pmclass/sensor_model.hpp"

namespace pmclass {

// Markov-chain classifier run with the discriminative forward recursion:
// frequency-estimated prior and transitions, logistic emission posterior.
// The observation law itself is never modeled.
struct HmcModel {
    Eigen::Vector4d prior = Eigen::Vector4d::Constant(0.25);
    // transition(j, i) = P(Y_{t+1} = i | Y_t = j); rows sum to 1.
    Eigen::Matrix4d transition = Eigen::Matrix4d::Constant(0.25);
    LogisticModel emission;
    double epsilon = 1e-6;  // transition floor used at training time

    void validate() const;  // throws ConfigError on broken stochasticity
};

// Running posterior over classes given the observation prefix, renormalized
// to sum 1 after every step.
struct ForwardState {
    Eigen::Vector4d alpha = Eigen::Vector4d::Zero();
    long t = 0;
};

// P(class) by frequency. Throws DataError if any class is absent (the prior
// sits in a denominator of the recursion).
Eigen::Vector4d estimate_prior(const Dataset& train);

// Row j = bigram frequencies out of state j, counted within sessions only.
// Rows with no outgoing bigram become uniform; all entries are floored at
// `epsilon` and rows renormalized. Raw zeros would annihilate states for good.
Eigen::Matrix4d estimate_transitions(const Dataset& train, double epsilon);

// alpha_1 = emission posterior at x1.
ForwardState forward_init(const HmcModel& model, const FeatureVector& x1);

// alpha_{t+1}(i) = [P(y=i|x)/P(y=i)] * sum_j alpha_t(j) * transition(j,i),
// then renormalized. Renormalization cannot change the argmax.
ForwardState forward_step(const HmcModel& model, const ForwardState& state,
                          const FeatureVector& x);

// Argmax of alpha (ties go to the lowest class code) plus the posterior.
std::pair<PollutantLabel, ProbVector> classify_step(const ForwardState& state);

struct HmcOptions {
    double epsilon = 1e-6;
    LogisticOptions emission = {};  // 5000 iterations, lr 0.01
};

struct HmcTrainResult {
    HmcModel model;
    std::vector<double> emission_loss_history;
};

HmcTrainResult train_hmc(const Dataset& train, const HmcOptions& options = {});

// One session: forward state starts fresh at the first frame.
std::vector<PollutantLabel> predict_sequence(const HmcModel& model,
                                             std::span<const SensorFrame> frames);

}  // namespace pmclass
