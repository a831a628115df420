#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pmclass/optim.hpp"
#include "pmclass/sensor_model.hpp"

namespace pmclass {

// Regression tree node. feature < 0 marks a leaf; split sends x[feature] <
// threshold to the left child.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf output, before learning-rate scaling
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(const FeatureVector& x) const;
    int leaf_index(const FeatureVector& x) const;
};

// First and second derivatives of softmax cross-entropy w.r.t. the logits:
// g = p - onehot(target), h = p * (1 - p).
struct GradHess {
    Eigen::Vector4d grad;
    Eigen::Vector4d hess;
};

GradHess compute_grad_hess(const Eigen::Vector4d& logits, PollutantLabel target);

struct SplitCandidate {
    int feature;
    double threshold;
    double gain;
};

struct TreeParams {
    int max_depth = 6;
    double lambda = 1.0;  // L2 penalty on leaf weights
    double gamma = 0.0;   // per-leaf complexity penalty
    int min_points = 1;   // minimum points per child
};

// Exhaustive scan over every feature and every midpoint between consecutive
// distinct sorted values. Gain:
//   1/2 * [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma.
// Returns the max-gain split if its gain is > 0; ties break toward the lowest
// feature index, then the lowest threshold.
std::optional<SplitCandidate> best_split(std::span<const int> points,
                                         const std::vector<FeatureVector>& features,
                                         std::span<const double> grad,
                                         std::span<const double> hess,
                                         const TreeParams& params);

// Greedy recursive growth; every leaf weight is the closed form -G/(H+lambda).
Tree build_tree(std::span<const int> points, const std::vector<FeatureVector>& features,
                std::span<const double> grad, std::span<const double> hess,
                const TreeParams& params);

struct GbdtOptions {
    int rounds = 100;
    double eta = 0.3;  // learning rate in (0, 1]
    TreeParams tree = {};
};

// Boosted ensemble: one tree per class per round with softmax coupling; trees
// are stored round-major (round r, class k at index r * 4 + k). Prediction is
// base_score + eta * sum of tree outputs per class, then softmax.
struct GbdtModel {
    int rounds = 0;
    double eta = 0.3;
    double lambda = 1.0;
    double gamma = 0.0;
    int max_depth = 6;
    int min_points = 1;
    double base_score = 0.0;
    std::vector<Tree> trees;

    Eigen::Vector4d predict_logits(const FeatureVector& x) const;
    ProbVector predict_proba(const FeatureVector& x) const;
};

struct GbdtTrainResult {
    GbdtModel model;
    // loss_history[0] is the pre-training loss; entry r is the mean
    // cross-entropy after round r.
    std::vector<double> loss_history;
};

// Deterministic: exhaustive splits, no RNG, no subsampling. All four trees of
// a round are fit against the same round-start logits.
GbdtTrainResult train_gbdt(const Dataset& train, const GbdtOptions& options = {});

// Stateless per-frame prediction.
std::vector<PollutantLabel> predict_sequence(const GbdtModel& model,
                                             std::span<const SensorFrame> frames);

}  // namespace pmclass
