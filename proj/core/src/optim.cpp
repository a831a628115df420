#include "pmclass/optim.hpp"

#include <cmath>

namespace pmclass {

ProbVector softmax(const Eigen::Vector4d& logits) {
    const Eigen::Vector4d shifted = logits.array() - logits.maxCoeff();
    const Eigen::Vector4d e = shifted.array().exp();
    return e / e.sum();
}

std::pair<double, Eigen::Vector4d> softmax_cross_entropy(const Eigen::Vector4d& logits,
                                                         PollutantLabel target) {
    if (!logits.allFinite()) throw NumericError("cross-entropy: non-finite logits");
    const double max = logits.maxCoeff();
    const Eigen::Vector4d shifted = logits.array() - max;
    const double log_sum = std::log(shifted.array().exp().sum());
    const int k = static_cast<int>(target);
    const double loss = log_sum - shifted[k];
    Eigen::Vector4d grad = (shifted.array() - log_sum).exp();
    grad[k] -= 1.0;
    return {loss, grad};
}

AdamOptimizer::AdamOptimizer(double learning_rate, Eigen::Index dim)
    : lr_(learning_rate),
      m_(Eigen::VectorXd::Zero(dim)),
      v_(Eigen::VectorXd::Zero(dim)) {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw ConfigError("adam: parameter/gradient size " +
                          std::to_string(params.size()) + "/" +
                          std::to_string(grad.size()) + " does not match state size " +
                          std::to_string(m_.size()));
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;

    ++t_;
    m_ = beta1 * m_ + (1.0 - beta1) * grad;
    v_ = beta2 * v_.array() + (1.0 - beta2) * grad.array().square();
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    params.array() -=
        lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps);
}

Eigen::Vector4d LogisticModel::logits(const FeatureVector& x) const {
    const FeatureVector scaled = scaler.transform(x);
    const Eigen::Map<const Eigen::Matrix<double, kNumFeatures, 1>> xv(scaled.data());
    return weights * xv + bias;
}

ProbVector LogisticModel::predict_proba(const FeatureVector& x) const {
    for (double v : x) {
        if (!std::isfinite(v)) throw NumericError("predict_proba: non-finite feature");
    }
    return softmax(logits(x));
}

LogisticBatchGradient logistic_batch_gradient(const LogisticModel& model,
                                              const std::vector<FeatureVector>& features,
                                              const std::vector<PollutantLabel>& labels) {
    if (features.empty()) throw DataError("logistic gradient: empty batch");
    if (features.size() != labels.size()) {
        throw ConfigError("logistic gradient: feature/label count mismatch");
    }
    LogisticBatchGradient out;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const FeatureVector scaled = model.scaler.transform(features[i]);
        const Eigen::Map<const Eigen::Matrix<double, kNumFeatures, 1>> xv(scaled.data());
        const auto [loss, grad] =
            softmax_cross_entropy(model.weights * xv + model.bias, labels[i]);
        out.loss += loss;
        out.dweights += grad * xv.transpose();
        out.dbias += grad;
    }
    const double inv_n = 1.0 / static_cast<double>(features.size());
    out.loss *= inv_n;
    out.dweights *= inv_n;
    out.dbias *= inv_n;
    return out;
}

LogisticTrainResult train_logistic(const std::vector<FeatureVector>& features,
                                   const std::vector<PollutantLabel>& labels,
                                   const Scaler& scaler, const LogisticOptions& options) {
    if (features.empty()) throw DataError("logistic training set is empty");
    if (features.size() != labels.size()) {
        throw ConfigError("logistic training: feature/label count mismatch");
    }
    if (options.iterations < 0) throw ConfigError("iterations must be >= 0");

    std::array<std::int64_t, kNumClasses> class_counts{};
    for (PollutantLabel y : labels) ++class_counts[static_cast<int>(y)];
    for (int k = 0; k < kNumClasses; ++k) {
        if (class_counts[k] == 0) {
            throw DataError(std::string("class \"") +
                            label_name(static_cast<PollutantLabel>(k)) +
                            "\" is absent from the training data");
        }
    }

    constexpr Eigen::Index w_size = kNumClasses * kNumFeatures;

    LogisticTrainResult result;
    result.model.scaler = scaler;
    result.loss_history.reserve(static_cast<std::size_t>(options.iterations));

    Eigen::VectorXd params = Eigen::VectorXd::Zero(w_size + kNumClasses);
    AdamOptimizer adam(options.learning_rate, params.size());
    Eigen::VectorXd grad(params.size());

    for (int it = 0; it < options.iterations; ++it) {
        result.model.weights =
            Eigen::Map<const Eigen::Matrix<double, kNumClasses, kNumFeatures>>(
                params.data());
        result.model.bias = Eigen::Map<const Eigen::Vector4d>(params.data() + w_size);

        const LogisticBatchGradient batch =
            logistic_batch_gradient(result.model, features, labels);
        result.loss_history.push_back(batch.loss);

        Eigen::Map<Eigen::Matrix<double, kNumClasses, kNumFeatures>>(grad.data()) =
            batch.dweights;
        Eigen::Map<Eigen::Vector4d>(grad.data() + w_size) = batch.dbias;
        adam.step(params, grad);
    }

    result.model.weights =
        Eigen::Map<const Eigen::Matrix<double, kNumClasses, kNumFeatures>>(params.data());
    result.model.bias = Eigen::Map<const Eigen::Vector4d>(params.data() + w_size);
    return result;
}

}  // namespace pmclass
