#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "pmclass/sensor_model.hpp"

namespace pmclass {

using ProbVector = Eigen::Vector4d;

// Numerically stable softmax (max subtraction).
ProbVector softmax(const Eigen::Vector4d& logits);

// Index of the largest entry; exact ties resolve to the lowest class code.
inline int argmax_class(const Eigen::Vector4d& v) {
    int best = 0;
    for (int k = 1; k < kNumClasses; ++k) {
        if (v[k] > v[best]) best = k;
    }
    return best;
}

// loss = -log softmax(logits)[target], grad = softmax(logits) - onehot(target).
// Throws NumericError on non-finite logits.
std::pair<double, Eigen::Vector4d> softmax_cross_entropy(const Eigen::Vector4d& logits,
                                                         PollutantLabel target);

// Standard Adam with bias correction; beta1/beta2/eps at the canonical
// 0.9 / 0.999 / 1e-8.
class AdamOptimizer {
  public:
    AdamOptimizer(double learning_rate, Eigen::Index dim);

    // In-place update. Throws ConfigError on a shape mismatch.
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

    double learning_rate() const { return lr_; }
    long step_count() const { return t_; }

  private:
    double lr_;
    long t_ = 0;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
};

// Multinomial logistic regression over the 10 ratio features; serves as the
// per-frame emission posterior of the Markov-chain classifier.
struct LogisticModel {
    Eigen::Matrix<double, kNumClasses, kNumFeatures> weights =
        Eigen::Matrix<double, kNumClasses, kNumFeatures>::Zero();
    Eigen::Vector4d bias = Eigen::Vector4d::Zero();
    Scaler scaler;  // applied to raw features before the linear map

    Eigen::Vector4d logits(const FeatureVector& x) const;
    ProbVector predict_proba(const FeatureVector& x) const;
};

struct LogisticBatchGradient {
    double loss = 0.0;  // mean cross-entropy over the batch
    Eigen::Matrix<double, kNumClasses, kNumFeatures> dweights =
        Eigen::Matrix<double, kNumClasses, kNumFeatures>::Zero();
    Eigen::Vector4d dbias = Eigen::Vector4d::Zero();
};

// Mean cross-entropy of the model on raw features (the model's scaler is
// applied) and its exact parameter gradients. The training loop consumes this
// computation verbatim, so a finite-difference check of it covers training.
LogisticBatchGradient logistic_batch_gradient(const LogisticModel& model,
                                              const std::vector<FeatureVector>& features,
                                              const std::vector<PollutantLabel>& labels);

struct LogisticOptions {
    int iterations = 5000;  // full-batch passes
    double learning_rate = 0.01;
};

struct LogisticTrainResult {
    LogisticModel model;
    std::vector<double> loss_history;  // mean cross-entropy before each update
};

// Full-batch Adam on mean cross-entropy, zero-initialized (convex, no RNG).
// `features` are raw ratios; `scaler` is applied once up front and attached to
// the returned model. Requires every class to be present.
LogisticTrainResult train_logistic(const std::vector<FeatureVector>& features,
                                   const std::vector<PollutantLabel>& labels,
                                   const Scaler& scaler,
                                   const LogisticOptions& options = {});

}  // namespace pmclass
