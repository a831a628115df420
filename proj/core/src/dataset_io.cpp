#include "pmclass/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <vector>

namespace pmclass {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& context) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw DataError(context + ": cannot parse \"" + std::string(text) +
                        "\" as a number");
    }
    return value;
}

std::int64_t parse_int(std::string_view text, const std::string& context) {
    std::int64_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw DataError(context + ": cannot parse \"" + std::string(text) +
                        "\" as an integer");
    }
    return value;
}

Dataset parse_sessions_csv(std::string_view text, const std::string& origin) {
    Dataset dataset;
    std::map<std::string, std::size_t, std::less<>> index;  // session_id -> position

    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool saw_header = false;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = eol == std::string_view::npos
                                    ? text.substr(pos)
                                    : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        line = strip_cr(line);
        ++line_no;
        if (line.empty()) continue;

        if (!saw_header) {
            if (line != kSessionCsvHeader) {
                throw DataError(origin + ":1: expected header \"" +
                                std::string(kSessionCsvHeader) + "\"");
            }
            saw_header = true;
            continue;
        }

        const std::string where = origin + ":" + std::to_string(line_no);
        const auto fields = split_fields(line);
        if (fields.size() != 8) {
            throw DataError(where + ": expected 8 fields, got " +
                            std::to_string(fields.size()));
        }

        SensorFrame frame;
        frame.timestamp = parse_int(fields[1], where + " (timestamp)");
        for (int k = 0; k < kNumChannels; ++k) {
            frame.counts[k] =
                parse_double(fields[2 + k], where + " (ch" + std::to_string(k + 1) + ")");
        }
        try {
            frame.validate();
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        auto label = try_parse_label(fields[7]);
        if (!label) {
            throw DataError(where + ": unknown label \"" + std::string(fields[7]) + "\"");
        }

        const std::string session_id(fields[0]);
        auto it = index.find(session_id);
        if (it == index.end()) {
            it = index.emplace(session_id, dataset.sequences.size()).first;
            dataset.sequences.push_back(LabeledSequence{session_id, {}, {}});
        }
        auto& seq = dataset.sequences[it->second];
        seq.frames.push_back(frame);
        seq.labels.push_back(*label);
    }
    if (!saw_header) throw DataError(origin + ": missing header line");

    // Frames arrive grouped but possibly unordered; sort by timestamp per session.
    for (auto& seq : dataset.sequences) {
        std::vector<std::size_t> order(seq.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return seq.frames[a].timestamp < seq.frames[b].timestamp;
        });
        LabeledSequence sorted{seq.session_id, {}, {}};
        sorted.frames.reserve(seq.size());
        sorted.labels.reserve(seq.size());
        for (std::size_t i : order) {
            sorted.frames.push_back(seq.frames[i]);
            sorted.labels.push_back(seq.labels[i]);
        }
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            if (sorted.frames[i].timestamp >= sorted.frames[i + 1].timestamp) {
                throw DataError(origin + ": session \"" + seq.session_id +
                                "\" has duplicate timestamp " +
                                std::to_string(sorted.frames[i].timestamp));
            }
        }
        seq = std::move(sorted);
    }
    return dataset;
}

Dataset load_sessions(const std::filesystem::path& path) {
    return parse_sessions_csv(read_file(path), path.string());
}

std::string sessions_to_csv(const Dataset& dataset) {
    std::string out(kSessionCsvHeader);
    out += '\n';
    for (const auto& seq : dataset.sequences) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            const auto& frame = seq.frames[i];
            out += seq.session_id;
            out += ',';
            out += std::to_string(frame.timestamp);
            for (int k = 0; k < kNumChannels; ++k) {
                out += ',';
                out += format_double(frame.counts[k]);
            }
            out += ',';
            out += label_name(seq.labels[i]);
            out += '\n';
        }
    }
    return out;
}

void save_sessions(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << sessions_to_csv(dataset);
    if (!out) throw DataError("write failed for " + path.string());
}

SensorFrame parse_stream_row(std::string_view line) {
    const auto fields = split_fields(strip_cr(line));
    if (fields.size() != 1 + kNumChannels) {
        throw DataError("stream row: expected " + std::to_string(1 + kNumChannels) +
                        " fields (timestamp,ch1..ch5), got " +
                        std::to_string(fields.size()));
    }
    SensorFrame frame;
    frame.timestamp = parse_int(fields[0], "stream row (timestamp)");
    for (int k = 0; k < kNumChannels; ++k) {
        frame.counts[k] =
            parse_double(fields[1 + k], "stream row (ch" + std::to_string(k + 1) + ")");
    }
    frame.validate();
    return frame;
}

std::string format_stream_row(const SensorFrame& frame) {
    std::string out = std::to_string(frame.timestamp);
    for (int k = 0; k < kNumChannels; ++k) {
        out += ',';
        out += format_double(frame.counts[k]);
    }
    return out;
}

}  // namespace pmclass
