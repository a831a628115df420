#include "pmclass/metrics.hpp"

#include <cstdio>

#include <json.hpp>

#include "pmclass/errors.hpp"

namespace pmclass {

std::int64_t ConfusionMatrix::row_total(PollutantLabel truth) const {
    std::int64_t sum = 0;
    for (auto v : counts[static_cast<std::size_t>(truth)]) sum += v;
    return sum;
}

std::int64_t ConfusionMatrix::col_total(PollutantLabel predicted) const {
    std::int64_t sum = 0;
    for (const auto& row : counts) sum += row[static_cast<std::size_t>(predicted)];
    return sum;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t sum = 0;
    for (const auto& row : counts)
        for (auto v : row) sum += v;
    return sum;
}

ConfusionMatrix tally_confusion(std::span<const PollutantLabel> truth,
                                std::span<const PollutantLabel> predicted) {
    if (truth.size() != predicted.size()) {
        throw DataError("confusion: truth and prediction lengths differ");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++cm.at(truth[i], predicted[i]);
    }
    return cm;
}

EvalReport evaluate(const ConfusionMatrix& confusion) {
    EvalReport report;
    report.confusion = confusion;
    report.total = confusion.total();
    if (report.total == 0) throw DataError("evaluate: empty confusion matrix");

    std::int64_t correct = 0;
    double weighted = 0.0;
    for (PollutantLabel label : kAllLabels) {
        const auto tp = confusion.at(label, label);
        correct += tp;
        const auto row = confusion.row_total(label);
        const auto col = confusion.col_total(label);
        ClassMetrics& m = report.per_class[static_cast<std::size_t>(label)];
        m.support = row;
        m.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        m.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        const double pr = m.precision + m.recall;
        m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
        weighted += static_cast<double>(row) * m.f1;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.total);
    report.weighted_f1 = weighted / static_cast<double>(report.total);
    return report;
}

EvalReport evaluate(std::span<const PollutantLabel> truth,
                    std::span<const PollutantLabel> predicted) {
    return evaluate(tally_confusion(truth, predicted));
}

std::string to_text(const EvalReport& report) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof(buf), "points: %lld\naccuracy: %.4f\n",
                  static_cast<long long>(report.total), report.accuracy);
    out += buf;
    out += "\nclass        support  precision  recall     f1\n";
    for (PollutantLabel label : kAllLabels) {
        const ClassMetrics& m = report.per_class[static_cast<std::size_t>(label)];
        std::snprintf(buf, sizeof(buf), "%-12s %7lld  %9.4f  %6.4f  %6.4f\n",
                      label_name(label), static_cast<long long>(m.support), m.precision,
                      m.recall, m.f1);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "\nweighted f1: %.4f\n", report.weighted_f1);
    out += buf;
    out += "\nconfusion (rows = truth, columns = predicted):\n";
    out += confusion_csv(report.confusion);
    return out;
}

std::string to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["points"] = report.total;
    j["accuracy"] = report.accuracy;
    j["weighted_f1"] = report.weighted_f1;
    nlohmann::ordered_json classes;
    for (PollutantLabel label : kAllLabels) {
        const ClassMetrics& m = report.per_class[static_cast<std::size_t>(label)];
        classes[label_name(label)] = {{"support", m.support},
                                      {"precision", m.precision},
                                      {"recall", m.recall},
                                      {"f1", m.f1}};
    }
    j["classes"] = std::move(classes);
    nlohmann::ordered_json rows;
    for (PollutantLabel truth : kAllLabels) {
        nlohmann::ordered_json row;
        for (PollutantLabel predicted : kAllLabels) {
            row[label_name(predicted)] = report.confusion.at(truth, predicted);
        }
        rows[label_name(truth)] = std::move(row);
    }
    j["confusion"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::string confusion_csv(const ConfusionMatrix& confusion) {
    std::string out = "truth\\predicted";
    for (PollutantLabel predicted : kAllLabels) {
        out += ',';
        out += label_name(predicted);
    }
    out += '\n';
    for (PollutantLabel truth : kAllLabels) {
        out += label_name(truth);
        for (PollutantLabel predicted : kAllLabels) {
            out += ',';
            out += std::to_string(confusion.at(truth, predicted));
        }
        out += '\n';
    }
    return out;
}

}  // namespace pmclass
