#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmclass/errors.hpp"

namespace pmclass {

inline constexpr int kNumChannels = 5;
inline constexpr int kNumFeatures = 10;
inline constexpr int kNumClasses = 4;

// Channel k counts particles with diameter above kChannelThresholdsUm[k]
// (every measurement is capped at 10 um), so a frame's counts are
// non-increasing across channels.
inline constexpr std::array<double, kNumChannels> kChannelThresholdsUm = {0.3, 0.5, 1.0,
                                                                          2.5, 5.0};

enum class PollutantLabel : int {
    Background = 0,
    Ash = 1,
    Sand = 2,
    Candle = 3,
};

inline constexpr std::array<PollutantLabel, kNumClasses> kAllLabels = {
    PollutantLabel::Background, PollutantLabel::Ash, PollutantLabel::Sand,
    PollutantLabel::Candle};

// Lowercase canonical name ("background", "ash", "sand", "candle").
const char* label_name(PollutantLabel label);
std::optional<PollutantLabel> try_parse_label(std::string_view text);
PollutantLabel parse_label(std::string_view text);  // throws DataError

struct SensorFrame {
    std::int64_t timestamp = 0;  // seconds since session start
    std::array<double, kNumChannels> counts{};

    // Throws DataError on non-finite / negative counts or a nesting violation.
    void validate() const;
};

// The ten pairwise channel ratios counts[i]/counts[j], i < j, in lexicographic
// pair order: 1/2, 1/3, 1/4, 1/5, 2/3, 2/4, 2/5, 3/4, 3/5, 4/5.
using FeatureVector = std::array<double, kNumFeatures>;

// Fingerprint of the feature layout above. Persisted in every model file and
// checked on load so stored weights are never applied to a different layout.
extern const char* const kFeatureOrderFingerprint;

// A zero denominator counts as one particle; a 0/0 pair is 1.
// Throws DataError naming the channel for non-finite or negative counts.
FeatureVector compute_ratios(const SensorFrame& frame);

struct LabeledSequence {
    std::string session_id;
    std::vector<SensorFrame> frames;
    std::vector<PollutantLabel> labels;  // one per frame

    std::size_t size() const { return frames.size(); }
};

struct Dataset {
    std::vector<LabeledSequence> sequences;

    std::size_t total_points() const;
    bool empty() const { return total_points() == 0; }

    // Per-frame features / labels concatenated in session order.
    std::vector<FeatureVector> feature_matrix() const;
    std::vector<PollutantLabel> label_vector() const;
};

// First floor(train_fraction * N) points (concatenated session order) become
// the train set; a session straddling the cut is split in two, never shuffled.
std::pair<Dataset, Dataset> chronological_split(const Dataset& dataset,
                                                double train_fraction);

// Per-dimension z-score parameters fitted on training features only.
// Columns with zero spread store std 1 so they map to all-zeros.
struct Scaler {
    FeatureVector mean{};
    FeatureVector std{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};

    static Scaler fit(const std::vector<FeatureVector>& features);

    FeatureVector transform(const FeatureVector& x) const;
    FeatureVector inverse(const FeatureVector& x) const;
};

}  // namespace pmclass
