#include "pmclass/sensor_model.hpp"

#include <cmath>
#include <cstddef>

namespace pmclass {

const char* const kFeatureOrderFingerprint =
    "ch1/ch2 ch1/ch3 ch1/ch4 ch1/ch5 ch2/ch3 ch2/ch4 ch2/ch5 ch3/ch4 ch3/ch5 ch4/ch5";

const char* label_name(PollutantLabel label) {
    switch (label) {
        case PollutantLabel::Background: return "background";
        case PollutantLabel::Ash: return "ash";
        case PollutantLabel::Sand: return "sand";
        case PollutantLabel::Candle: return "candle";
    }
    throw ConfigError("invalid pollutant label code " +
                      std::to_string(static_cast<int>(label)));
}

std::optional<PollutantLabel> try_parse_label(std::string_view text) {
    for (PollutantLabel label : kAllLabels) {
        if (text == label_name(label)) return label;
    }
    return std::nullopt;
}

PollutantLabel parse_label(std::string_view text) {
    if (auto label = try_parse_label(text)) return *label;
    throw DataError("unknown pollutant label \"" + std::string(text) + "\"");
}

void SensorFrame::validate() const {
    for (int k = 0; k < kNumChannels; ++k) {
        if (!std::isfinite(counts[k])) {
            throw DataError("channel " + std::to_string(k + 1) + " count is not finite");
        }
        if (counts[k] < 0.0) {
            throw DataError("channel " + std::to_string(k + 1) + " count is negative");
        }
    }
    for (int k = 0; k + 1 < kNumChannels; ++k) {
        if (counts[k] < counts[k + 1]) {
            throw DataError("channel nesting violated: channel " + std::to_string(k + 2) +
                            " (" + std::to_string(counts[k + 1]) + ") exceeds channel " +
                            std::to_string(k + 1) + " (" + std::to_string(counts[k]) + ")");
        }
    }
}

FeatureVector compute_ratios(const SensorFrame& frame) {
    for (int k = 0; k < kNumChannels; ++k) {
        if (!std::isfinite(frame.counts[k])) {
            throw DataError("channel " + std::to_string(k + 1) + " count is not finite");
        }
        if (frame.counts[k] < 0.0) {
            throw DataError("channel " + std::to_string(k + 1) + " count is negative");
        }
    }
    FeatureVector out{};
    std::size_t idx = 0;
    for (int i = 0; i < kNumChannels; ++i) {
        for (int j = i + 1; j < kNumChannels; ++j) {
            const double num = frame.counts[i];
            const double den = frame.counts[j];
            if (den > 0.0) {
                out[idx] = num / den;
            } else {
                // Empty channel counts as one particle; 0/0 is 1.
                out[idx] = num == 0.0 ? 1.0 : num;
            }
            ++idx;
        }
    }
    return out;
}

std::size_t Dataset::total_points() const {
    std::size_t n = 0;
    for (const auto& seq : sequences) n += seq.size();
    return n;
}

std::vector<FeatureVector> Dataset::feature_matrix() const {
    std::vector<FeatureVector> out;
    out.reserve(total_points());
    for (const auto& seq : sequences) {
        for (const auto& frame : seq.frames) out.push_back(compute_ratios(frame));
    }
    return out;
}

std::vector<PollutantLabel> Dataset::label_vector() const {
    std::vector<PollutantLabel> out;
    out.reserve(total_points());
    for (const auto& seq : sequences) {
        out.insert(out.end(), seq.labels.begin(), seq.labels.end());
    }
    return out;
}

std::pair<Dataset, Dataset> chronological_split(const Dataset& dataset,
                                                double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie in (0,1), got " +
                          std::to_string(train_fraction));
    }
    const std::size_t n = dataset.total_points();
    if (n == 0) throw DataError("cannot split an empty dataset");

    // floor(f*N), with a nudge so short decimal fractions land on the intended
    // integer (0.7 * 1500 must give 1050, not 1049 from the rounded product).
    const auto cut = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(n) + 1e-9));

    Dataset train;
    Dataset test;
    std::size_t used = 0;
    for (const auto& seq : dataset.sequences) {
        if (used >= cut) {
            test.sequences.push_back(seq);
            continue;
        }
        if (used + seq.size() <= cut) {
            train.sequences.push_back(seq);
            used += seq.size();
            continue;
        }
        // Session straddles the cut: split it, preserving order.
        const std::size_t take = cut - used;
        LabeledSequence head{seq.session_id,
                             {seq.frames.begin(), seq.frames.begin() + take},
                             {seq.labels.begin(), seq.labels.begin() + take}};
        LabeledSequence tail{seq.session_id,
                             {seq.frames.begin() + take, seq.frames.end()},
                             {seq.labels.begin() + take, seq.labels.end()}};
        train.sequences.push_back(std::move(head));
        test.sequences.push_back(std::move(tail));
        used = cut;
    }
    return {std::move(train), std::move(test)};
}

Scaler Scaler::fit(const std::vector<FeatureVector>& features) {
    if (features.empty()) throw DataError("cannot fit a scaler on empty data");
    Scaler scaler;
    const double n = static_cast<double>(features.size());
    for (int d = 0; d < kNumFeatures; ++d) {
        double sum = 0.0;
        for (const auto& x : features) sum += x[d];
        const double mean = sum / n;
        double sq = 0.0;
        for (const auto& x : features) sq += (x[d] - mean) * (x[d] - mean);
        const double sd = std::sqrt(sq / n);
        scaler.mean[d] = mean;
        scaler.std[d] = sd > 0.0 ? sd : 1.0;
    }
    return scaler;
}

FeatureVector Scaler::transform(const FeatureVector& x) const {
    FeatureVector out{};
    for (int d = 0; d < kNumFeatures; ++d) out[d] = (x[d] - mean[d]) / std[d];
    return out;
}

FeatureVector Scaler::inverse(const FeatureVector& x) const {
    FeatureVector out{};
    for (int d = 0; d < kNumFeatures; ++d) out[d] = x[d] * std[d] + mean[d];
    return out;
}

}  // namespace pmclass
