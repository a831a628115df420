#pragma once

#include <memory>
#include <string>

#include "pmclass/model_io.hpp"

namespace pmclass {

struct StreamPrediction {
    PollutantLabel label = PollutantLabel::Background;
    ProbVector proba = ProbVector::Constant(0.25);
};

// Frame-by-frame classifier. HMC and LSTM carry state across frames and must
// be reset() at session boundaries; GBDT is stateless and reset() is a no-op.
class StreamClassifier {
  public:
    virtual ~StreamClassifier() = default;

    virtual StreamPrediction predict(const SensorFrame& frame) = 0;
    virtual void reset() = 0;
    virtual ModelKind kind() const = 0;
};

std::unique_ptr<StreamClassifier> make_classifier(HmcModel model);
std::unique_ptr<StreamClassifier> make_classifier(LstmModel model);
std::unique_ptr<StreamClassifier> make_classifier(GbdtModel model);

// Reads the kind from the file header and loads the matching model.
std::unique_ptr<StreamClassifier> load_classifier(const std::string& path);

}  // namespace pmclass
