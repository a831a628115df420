#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmclass/sensor_model.hpp"

namespace pmclass {

// Rows index the true label, columns the predicted label.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

    std::int64_t& at(PollutantLabel truth, PollutantLabel predicted) {
        return counts[static_cast<std::size_t>(truth)]
                     [static_cast<std::size_t>(predicted)];
    }
    std::int64_t at(PollutantLabel truth, PollutantLabel predicted) const {
        return counts[static_cast<std::size_t>(truth)]
                     [static_cast<std::size_t>(predicted)];
    }

    std::int64_t row_total(PollutantLabel truth) const;
    std::int64_t col_total(PollutantLabel predicted) const;
    std::int64_t total() const;
};

struct ClassMetrics {
    std::int64_t support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    ConfusionMatrix confusion;
    std::array<ClassMetrics, kNumClasses> per_class{};
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    std::int64_t total = 0;
};

ConfusionMatrix tally_confusion(std::span<const PollutantLabel> truth,
                                std::span<const PollutantLabel> predicted);

// Precision, recall, and F1 fall back to 0 whenever their denominator is 0.
EvalReport evaluate(std::span<const PollutantLabel> truth,
                    std::span<const PollutantLabel> predicted);

EvalReport evaluate(const ConfusionMatrix& confusion);

std::string to_text(const EvalReport& report);
std::string to_json(const EvalReport& report);
std::string confusion_csv(const ConfusionMatrix& confusion);

}  // namespace pmclass
