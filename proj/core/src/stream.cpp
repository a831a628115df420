#include "pmclass/stream.hpp"

namespace pmclass {

namespace {

class HmcStream final : public StreamClassifier {
  public:
    explicit HmcStream(HmcModel model) : model_(std::move(model)) { model_.validate(); }

    StreamPrediction predict(const SensorFrame& frame) override {
        const FeatureVector x = compute_ratios(frame);
        state_ = started_ ? forward_step(model_, state_, x) : forward_init(model_, x);
        started_ = true;
        const auto [label, proba] = classify_step(state_);
        return {label, proba};
    }

    void reset() override { started_ = false; }
    ModelKind kind() const override { return ModelKind::Hmc; }

  private:
    HmcModel model_;
    ForwardState state_;
    bool started_ = false;
};

class LstmStream final : public StreamClassifier {
  public:
    explicit LstmStream(LstmModel model)
        : model_(std::move(model)), state_(model_.hidden_dim) {}

    StreamPrediction predict(const SensorFrame& frame) override {
        const ProbVector proba = lstm_step(model_, state_, compute_ratios(frame));
        return {static_cast<PollutantLabel>(argmax_class(proba)), proba};
    }

    void reset() override { state_ = LstmState(model_.hidden_dim); }
    ModelKind kind() const override { return ModelKind::Lstm; }

  private:
    LstmModel model_;
    LstmState state_;
};

class GbdtStream final : public StreamClassifier {
  public:
    explicit GbdtStream(GbdtModel model) : model_(std::move(model)) {}

    StreamPrediction predict(const SensorFrame& frame) override {
        const ProbVector proba = model_.predict_proba(compute_ratios(frame));
        return {static_cast<PollutantLabel>(argmax_class(proba)), proba};
    }

    void reset() override {}
    ModelKind kind() const override { return ModelKind::Gbdt; }

  private:
    GbdtModel model_;
};

}  // namespace

std::unique_ptr<StreamClassifier> make_classifier(HmcModel model) {
    return std::make_unique<HmcStream>(std::move(model));
}

std::unique_ptr<StreamClassifier> make_classifier(LstmModel model) {
    return std::make_unique<LstmStream>(std::move(model));
}

std::unique_ptr<StreamClassifier> make_classifier(GbdtModel model) {
    return std::make_unique<GbdtStream>(std::move(model));
}

std::unique_ptr<StreamClassifier> load_classifier(const std::string& path) {
    switch (peek_model_kind(path)) {
        case ModelKind::Hmc: return make_classifier(load_hmc_model(path));
        case ModelKind::Lstm: return make_classifier(load_lstm_model(path));
        case ModelKind::Gbdt: return make_classifier(load_gbdt_model(path));
    }
    throw DataError("unsupported model kind in '" + path + "'");
}

}  // namespace pmclass
