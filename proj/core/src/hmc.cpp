#include "pmclass/hmc.hpp"

#include <cmath>

namespace pmclass {

void HmcModel::validate() const {
    if (!prior.allFinite() || std::abs(prior.sum() - 1.0) > 1e-9 ||
        (prior.array() <= 0.0).any()) {
        throw ConfigError("hmc: prior must be strictly positive and sum to 1");
    }
    if (!transition.allFinite() || (transition.array() <= 0.0).any()) {
        throw ConfigError("hmc: transition entries must be strictly positive");
    }
    for (int j = 0; j < kNumClasses; ++j) {
        if (std::abs(transition.row(j).sum() - 1.0) > 1e-9) {
            throw ConfigError("hmc: transition row " + std::to_string(j) +
                              " does not sum to 1");
        }
    }
}

Eigen::Vector4d estimate_prior(const Dataset& train) {
    Eigen::Vector4d counts = Eigen::Vector4d::Zero();
    for (const auto& seq : train.sequences) {
        for (PollutantLabel y : seq.labels) counts[static_cast<int>(y)] += 1.0;
    }
    const double total = counts.sum();
    if (total == 0.0) throw DataError("prior estimation: empty dataset");
    for (int k = 0; k < kNumClasses; ++k) {
        if (counts[k] == 0.0) {
            throw DataError(std::string("prior estimation: class \"") +
                            label_name(static_cast<PollutantLabel>(k)) +
                            "\" is absent from the training data");
        }
    }
    return counts / total;
}

Eigen::Matrix4d estimate_transitions(const Dataset& train, double epsilon) {
    if (epsilon < 0.0) throw ConfigError("transition smoothing epsilon must be >= 0");
    Eigen::Matrix4d counts = Eigen::Matrix4d::Zero();
    bool any_bigram = false;
    for (const auto& seq : train.sequences) {
        for (std::size_t i = 0; i + 1 < seq.labels.size(); ++i) {
            counts(static_cast<int>(seq.labels[i]),
                   static_cast<int>(seq.labels[i + 1])) += 1.0;
            any_bigram = true;
        }
    }
    if (!any_bigram) {
        throw DataError("transition estimation needs a session with at least 2 points");
    }

    Eigen::Matrix4d transition;
    for (int j = 0; j < kNumClasses; ++j) {
        const double row_total = counts.row(j).sum();
        if (row_total == 0.0) {
            transition.row(j).setConstant(1.0 / kNumClasses);
        } else {
            transition.row(j) = counts.row(j) / row_total;
        }
        if (epsilon > 0.0) {
            transition.row(j) = transition.row(j).cwiseMax(epsilon);
            transition.row(j) /= transition.row(j).sum();
        }
    }
    return transition;
}

ForwardState forward_init(const HmcModel& model, const FeatureVector& x1) {
    ForwardState state;
    state.alpha = model.emission.predict_proba(x1);
    state.t = 1;
    return state;
}

ForwardState forward_step(const HmcModel& model, const ForwardState& state,
                          const FeatureVector& x) {
    if (state.t < 1) throw ConfigError("forward_step: state not initialized");
    const Eigen::Vector4d emission = model.emission.predict_proba(x);
    const Eigen::Vector4d propagated = model.transition.transpose() * state.alpha;
    const Eigen::Vector4d unnormalized =
        emission.cwiseQuotient(model.prior).cwiseProduct(propagated);
    const double total = unnormalized.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
        // Unreachable with smoothed transitions and softmax emissions.
        throw NumericError("forward_step: degenerate (all-zero) forward vector");
    }
    ForwardState next;
    next.alpha = unnormalized / total;
    next.t = state.t + 1;
    return next;
}

std::pair<PollutantLabel, ProbVector> classify_step(const ForwardState& state) {
    if (state.t < 1) throw ConfigError("classify_step: state not initialized");
    return {static_cast<PollutantLabel>(argmax_class(state.alpha)), state.alpha};
}

HmcTrainResult train_hmc(const Dataset& train, const HmcOptions& options) {
    if (train.empty()) throw DataError("hmc training set is empty");
    HmcTrainResult result;
    result.model.prior = estimate_prior(train);
    result.model.transition = estimate_transitions(train, options.epsilon);
    result.model.epsilon = options.epsilon;

    const auto features = train.feature_matrix();
    const auto labels = train.label_vector();
    const Scaler scaler = Scaler::fit(features);
    auto logistic = train_logistic(features, labels, scaler, options.emission);
    result.model.emission = std::move(logistic.model);
    result.emission_loss_history = std::move(logistic.loss_history);
    return result;
}

std::vector<PollutantLabel> predict_sequence(const HmcModel& model,
                                             std::span<const SensorFrame> frames) {
    std::vector<PollutantLabel> out;
    out.reserve(frames.size());
    ForwardState state;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const FeatureVector x = compute_ratios(frames[i]);
        state = i == 0 ? forward_init(model, x) : forward_step(model, state, x);
        out.push_back(classify_step(state).first);
    }
    return out;
}

}  // namespace pmclass
