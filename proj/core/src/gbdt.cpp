#include "pmclass/gbdt.hpp"

#include <algorithm>
#include <cmath>

namespace pmclass {

double Tree::predict(const FeatureVector& x) const {
    return nodes[static_cast<std::size_t>(leaf_index(x))].weight;
}

int Tree::leaf_index(const FeatureVector& x) const {
    int idx = 0;
    while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
        const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
        idx = x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left
                                                                         : node.right;
    }
    return idx;
}

GradHess compute_grad_hess(const Eigen::Vector4d& logits, PollutantLabel target) {
    if (!logits.allFinite()) throw NumericError("grad/hess: non-finite logits");
    const Eigen::Vector4d p = softmax(logits);
    GradHess gh;
    gh.grad = p;
    gh.grad[static_cast<int>(target)] -= 1.0;
    gh.hess = p.array() * (1.0 - p.array());
    return gh;
}

namespace {

double structure_score(double g, double h, double lambda) {
    return g * g / (h + lambda);
}

}  // namespace

std::optional<SplitCandidate> best_split(std::span<const int> points,
                                         const std::vector<FeatureVector>& features,
                                         std::span<const double> grad,
                                         std::span<const double> hess,
                                         const TreeParams& params) {
    if (points.size() < 2) return std::nullopt;

    double total_g = 0.0;
    double total_h = 0.0;
    for (int p : points) {
        total_g += grad[static_cast<std::size_t>(p)];
        total_h += hess[static_cast<std::size_t>(p)];
    }
    const double parent_score = structure_score(total_g, total_h, params.lambda);

    std::optional<SplitCandidate> best;
    std::vector<int> order(points.begin(), points.end());
    for (int feature = 0; feature < kNumFeatures; ++feature) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return features[static_cast<std::size_t>(a)][static_cast<std::size_t>(feature)] <
                   features[static_cast<std::size_t>(b)][static_cast<std::size_t>(feature)];
        });
        double left_g = 0.0;
        double left_h = 0.0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const int p = order[i];
            left_g += grad[static_cast<std::size_t>(p)];
            left_h += hess[static_cast<std::size_t>(p)];
            const double lo =
                features[static_cast<std::size_t>(p)][static_cast<std::size_t>(feature)];
            const double hi = features[static_cast<std::size_t>(
                order[i + 1])][static_cast<std::size_t>(feature)];
            if (lo == hi) continue;  // no boundary between equal values
            const auto left_count = i + 1;
            const auto right_count = order.size() - left_count;
            if (left_count < static_cast<std::size_t>(params.min_points) ||
                right_count < static_cast<std::size_t>(params.min_points)) {
                continue;
            }
            double threshold = 0.5 * (lo + hi);
            if (threshold <= lo) threshold = hi;  // midpoint rounded onto lo

            const double gain =
                0.5 * (structure_score(left_g, left_h, params.lambda) +
                       structure_score(total_g - left_g, total_h - left_h, params.lambda) -
                       parent_score) -
                params.gamma;
            // Strict > keeps the lowest feature index / lowest threshold on ties.
            if (gain > 0.0 && (!best || gain > best->gain)) {
                best = SplitCandidate{feature, threshold, gain};
            }
        }
    }
    return best;
}

namespace {

int grow(Tree& tree, std::vector<int>& points, std::size_t begin, std::size_t end,
         const std::vector<FeatureVector>& features, std::span<const double> grad,
         std::span<const double> hess, const TreeParams& params, int depth) {
    double g = 0.0;
    double h = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        g += grad[static_cast<std::size_t>(points[i])];
        h += hess[static_cast<std::size_t>(points[i])];
    }

    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});

    std::optional<SplitCandidate> split;
    if (depth < params.max_depth) {
        split = best_split(std::span<const int>(points.data() + begin, end - begin),
                           features, grad, hess, params);
    }
    if (!split) {
        tree.nodes[static_cast<std::size_t>(node_index)].weight =
            -g / (h + params.lambda);
        return node_index;
    }

    const auto mid = std::partition(points.begin() + static_cast<std::ptrdiff_t>(begin),
                                    points.begin() + static_cast<std::ptrdiff_t>(end),
                                    [&](int p) {
                                        return features[static_cast<std::size_t>(
                                                   p)][static_cast<std::size_t>(
                                                   split->feature)] < split->threshold;
                                    }) -
                     points.begin();

    const int left = grow(tree, points, begin, static_cast<std::size_t>(mid), features,
                          grad, hess, params, depth + 1);
    const int right = grow(tree, points, static_cast<std::size_t>(mid), end, features,
                           grad, hess, params, depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    return node_index;
}

}  // namespace

Tree build_tree(std::span<const int> points, const std::vector<FeatureVector>& features,
                std::span<const double> grad, std::span<const double> hess,
                const TreeParams& params) {
    if (points.empty()) throw ConfigError("build_tree: no points");
    Tree tree;
    std::vector<int> work(points.begin(), points.end());
    grow(tree, work, 0, work.size(), features, grad, hess, params, 0);
    return tree;
}

Eigen::Vector4d GbdtModel::predict_logits(const FeatureVector& x) const {
    Eigen::Vector4d logits = Eigen::Vector4d::Constant(base_score);
    for (std::size_t t = 0; t < trees.size(); ++t) {
        logits[static_cast<int>(t % kNumClasses)] += eta * trees[t].predict(x);
    }
    return logits;
}

ProbVector GbdtModel::predict_proba(const FeatureVector& x) const {
    return softmax(predict_logits(x));
}

GbdtTrainResult train_gbdt(const Dataset& train, const GbdtOptions& options) {
    if (train.empty()) throw DataError("gbdt training set is empty");
    if (options.rounds < 0) throw ConfigError("rounds must be >= 0");
    if (!(options.eta > 0.0 && options.eta <= 1.0)) {
        throw ConfigError("eta must lie in (0, 1]");
    }
    if (options.tree.lambda < 0.0 || options.tree.gamma < 0.0) {
        throw ConfigError("lambda and gamma must be >= 0");
    }

    const auto features = train.feature_matrix();
    const auto labels = train.label_vector();
    const std::size_t n = features.size();

    GbdtTrainResult result;
    result.model.rounds = options.rounds;
    result.model.eta = options.eta;
    result.model.lambda = options.tree.lambda;
    result.model.gamma = options.tree.gamma;
    result.model.max_depth = options.tree.max_depth;
    result.model.min_points = options.tree.min_points;
    result.model.base_score = 0.0;
    result.model.trees.reserve(static_cast<std::size_t>(options.rounds) * kNumClasses);

    Eigen::MatrixXd logits =
        Eigen::MatrixXd::Constant(kNumClasses, static_cast<Eigen::Index>(n),
                                  result.model.base_score);
    std::vector<int> all_points(n);
    for (std::size_t i = 0; i < n; ++i) all_points[i] = static_cast<int>(i);

    auto mean_loss = [&]() {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            loss += softmax_cross_entropy(logits.col(static_cast<Eigen::Index>(i)),
                                          labels[i])
                        .first;
        }
        return loss / static_cast<double>(n);
    };
    result.loss_history.push_back(mean_loss());

    std::vector<double> grad(n);
    std::vector<double> hess(n);
    for (int round = 0; round < options.rounds; ++round) {
        // Round-start probabilities drive all four class trees of this round.
        Eigen::MatrixXd probs(kNumClasses, static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            probs.col(static_cast<Eigen::Index>(i)) =
                softmax(logits.col(static_cast<Eigen::Index>(i)));
        }
        for (int k = 0; k < kNumClasses; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = probs(k, static_cast<Eigen::Index>(i));
                grad[i] = p - (static_cast<int>(labels[i]) == k ? 1.0 : 0.0);
                hess[i] = p * (1.0 - p);
            }
            result.model.trees.push_back(
                build_tree(all_points, features, grad, hess, options.tree));
        }
        for (int k = 0; k < kNumClasses; ++k) {
            const Tree& tree =
                result.model.trees[static_cast<std::size_t>(round) * kNumClasses +
                                   static_cast<std::size_t>(k)];
            for (std::size_t i = 0; i < n; ++i) {
                logits(k, static_cast<Eigen::Index>(i)) +=
                    options.eta * tree.predict(features[i]);
            }
        }
        result.loss_history.push_back(mean_loss());
    }
    return result;
}

std::vector<PollutantLabel> predict_sequence(const GbdtModel& model,
                                             std::span<const SensorFrame> frames) {
    std::vector<PollutantLabel> out;
    out.reserve(frames.size());
    for (const auto& frame : frames) {
        out.push_back(static_cast<PollutantLabel>(
            argmax_class(model.predict_proba(compute_ratios(frame)))));
    }
    return out;
}

}  // namespace pmclass
