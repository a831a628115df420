#include "pmclass/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pmclass/dataset_io.hpp"
#include "pmclass/rng.hpp"

namespace pmclass {

void ScenarioProfile::validate() const {
    for (int k = 0; k < kNumChannels; ++k) {
        if (!std::isfinite(channel_log_means[k])) {
            throw ConfigError("profile " + std::string(label_name(label)) +
                              ": log mean for channel " + std::to_string(k + 1) +
                              " is not finite");
        }
        if (!(channel_log_stds[k] > 0.0) || !std::isfinite(channel_log_stds[k])) {
            throw ConfigError("profile " + std::string(label_name(label)) +
                              ": log std for channel " + std::to_string(k + 1) +
                              " must be finite and > 0");
        }
    }
    for (int k = 0; k + 1 < kNumChannels; ++k) {
        if (channel_log_means[k] < channel_log_means[k + 1]) {
            throw ConfigError("profile " + std::string(label_name(label)) +
                              ": log means must be non-increasing across channels");
        }
    }
    if (!(temporal_correlation >= 0.0 && temporal_correlation < 1.0)) {
        throw ConfigError("profile " + std::string(label_name(label)) +
                          ": temporal_correlation must lie in [0,1)");
    }
    if (!(burst_rate >= 0.0) || !std::isfinite(burst_rate)) {
        throw ConfigError("profile " + std::string(label_name(label)) +
                          ": burst_rate must be finite and >= 0");
    }
}

int SessionPlan::total_duration_s() const {
    int total = 0;
    for (const auto& e : entries) total += e.duration_s;
    return total;
}

SessionPlan default_session_plan() {
    using L = PollutantLabel;
    return SessionPlan{{
        {L::Background, 180},
        {L::Sand, 180},
        {L::Ash, 120},
        {L::Background, 180},
        {L::Ash, 180},
        {L::Background, 60},
        {L::Candle, 180},
        {L::Sand, 180},
        {L::Ash, 60},
        {L::Background, 180},
    }};
}

ProfileMap default_profiles() {
    using L = PollutantLabel;
    ProfileMap profiles;
    // Background: fine-dominated, moderate totals, smooth.
    profiles[L::Background] = ScenarioProfile{
        L::Background,
        {7.60, 6.20, 4.20, 2.20, 0.70},
        {0.10, 0.10, 0.11, 0.12, 0.14},
        0.85,
        0.3,
    };
    // Ash: broad distribution with a strong coarse tail, spiky.
    profiles[L::Ash] = ScenarioProfile{
        L::Ash,
        {9.20, 8.70, 8.00, 6.80, 5.10},
        {0.10, 0.10, 0.11, 0.12, 0.13},
        0.80,
        2.0,
    };
    // Sand: mineral dust, nearly flat across channels.
    profiles[L::Sand] = ScenarioProfile{
        L::Sand,
        {7.90, 7.70, 7.40, 6.90, 6.10},
        {0.09, 0.09, 0.10, 0.11, 0.12},
        0.80,
        2.0,
    };
    // Candle: overwhelmingly sub-micron smoke.
    profiles[L::Candle] = ScenarioProfile{
        L::Candle,
        {11.00, 9.20, 6.40, 3.60, 1.60},
        {0.10, 0.11, 0.12, 0.13, 0.14},
        0.85,
        1.0,
    };
    return profiles;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::array<double, kNumChannels> parse_five(std::string_view value,
                                            const std::string& context) {
    std::array<double, kNumChannels> out{};
    std::istringstream in{std::string(value)};
    std::string tok;
    int k = 0;
    while (in >> tok) {
        if (k >= kNumChannels) throw ConfigError(context + ": expected 5 values");
        out[k++] = parse_double(tok, context);
    }
    if (k != kNumChannels) throw ConfigError(context + ": expected 5 values");
    return out;
}

}  // namespace

ProfileMap parse_profiles(std::string_view text, const std::string& origin) {
    ProfileMap profiles;
    ScenarioProfile* current = nullptr;
    std::array<bool, 4> seen_key{};  // log_means, log_stds, corr, burst per section

    auto finish_section = [&](const ScenarioProfile* p) {
        if (!p) return;
        for (int i = 0; i < 4; ++i) {
            if (!seen_key[i]) {
                static const char* names[] = {"log_means", "log_stds",
                                              "temporal_correlation", "burst_rate"};
                throw ConfigError(origin + ": profile [" + label_name(p->label) +
                                  "] is missing key " + names[i]);
            }
        }
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = eol == std::string_view::npos
                                    ? text.substr(pos)
                                    : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const std::string where = origin + ":" + std::to_string(line_no);

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section");
            const auto name = trim(line.substr(1, line.size() - 2));
            const auto label = try_parse_label(name);
            if (!label) {
                throw ConfigError(where + ": unknown scenario \"" + std::string(name) +
                                  "\"");
            }
            finish_section(current);
            if (profiles.count(*label)) {
                throw ConfigError(where + ": duplicate section [" +
                                  std::string(name) + "]");
            }
            current = &profiles[*label];
            current->label = *label;
            seen_key = {};
            continue;
        }

        if (!current) throw ConfigError(where + ": key outside of a [scenario] section");
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(where + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key == "log_means") {
            current->channel_log_means = parse_five(value, where + " (log_means)");
            seen_key[0] = true;
        } else if (key == "log_stds") {
            current->channel_log_stds = parse_five(value, where + " (log_stds)");
            seen_key[1] = true;
        } else if (key == "temporal_correlation") {
            current->temporal_correlation =
                parse_double(value, where + " (temporal_correlation)");
            seen_key[2] = true;
        } else if (key == "burst_rate") {
            current->burst_rate = parse_double(value, where + " (burst_rate)");
            seen_key[3] = true;
        } else {
            throw ConfigError(where + ": unknown key \"" + std::string(key) + "\"");
        }
    }
    finish_section(current);
    for (auto& [label, profile] : profiles) profile.validate();
    return profiles;
}

ProfileMap load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open profile config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_profiles(buf.str(), path.string());
}

std::string profiles_to_text(const ProfileMap& profiles) {
    std::string out = "# pmclass scenario profiles\n";
    for (const auto& [label, p] : profiles) {
        out += "\n[";
        out += label_name(label);
        out += "]\n";
        out += "log_means =";
        for (double v : p.channel_log_means) out += " " + format_double(v);
        out += "\nlog_stds =";
        for (double v : p.channel_log_stds) out += " " + format_double(v);
        out += "\ntemporal_correlation = " + format_double(p.temporal_correlation);
        out += "\nburst_rate = " + format_double(p.burst_rate);
        out += "\n";
    }
    return out;
}

LabeledSequence generate_session(const ScenarioProfile& profile, int duration_s,
                                 std::uint64_t seed, std::string session_id) {
    profile.validate();
    if (duration_s < 1) throw ConfigError("session duration must be >= 1 s");
    if (session_id.empty()) {
        session_id = std::string(label_name(profile.label)) + "-" + std::to_string(seed);
    }

    struct Burst {
        int start;
        double tau;
        std::array<double, kNumChannels> amplitude;
    };

    Rng rng(seed);
    LabeledSequence seq{std::move(session_id), {}, {}};
    seq.frames.reserve(duration_s);
    seq.labels.reserve(duration_s);

    std::array<double, kNumChannels> dev{};  // AR(1) log-space deviations
    std::vector<Burst> active;
    const double burst_p = std::min(1.0, profile.burst_rate / 60.0);

    for (int t = 0; t < duration_s; ++t) {
        for (int k = 0; k < kNumChannels; ++k) {
            dev[k] = profile.temporal_correlation * dev[k] +
                     profile.channel_log_stds[k] * rng.gaussian();
        }
        if (burst_p > 0.0 && rng.bernoulli(burst_p)) {
            Burst b;
            b.start = t;
            b.tau = rng.uniform(2.0, 6.0);
            const double base = 0.4 + std::abs(rng.gaussian());
            for (int k = 0; k < kNumChannels; ++k) {
                // Mostly a common intensity spike; the per-channel jitter puts a
                // little of the burst into ratio space as well.
                b.amplitude[k] = base * std::exp(0.15 * rng.gaussian());
            }
            active.push_back(b);
        }

        SensorFrame frame;
        frame.timestamp = t;
        for (int k = 0; k < kNumChannels; ++k) {
            double log_count = profile.channel_log_means[k] + dev[k];
            for (const auto& b : active) {
                log_count += b.amplitude[k] * std::exp(-(t - b.start) / b.tau);
            }
            frame.counts[k] = std::exp(log_count);
        }
        std::erase_if(active, [&](const Burst& b) { return t - b.start > 10.0 * b.tau; });

        // Noise can break the channel nesting; restore it by sorting.
        std::sort(frame.counts.begin(), frame.counts.end(), std::greater<>());
        seq.frames.push_back(frame);
        seq.labels.push_back(profile.label);
    }
    return seq;
}

Dataset generate_corpus(const SessionPlan& plan, const ProfileMap& profiles,
                        std::uint64_t seed) {
    Dataset dataset;
    dataset.sequences.reserve(plan.entries.size());
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        const auto& entry = plan.entries[i];
        const auto it = profiles.find(entry.label);
        if (it == profiles.end()) {
            throw ConfigError(std::string("no scenario profile for label \"") +
                              label_name(entry.label) + "\"");
        }
        std::string id = "s" + std::to_string(i) + "_" + label_name(entry.label);
        dataset.sequences.push_back(generate_session(
            it->second, entry.duration_s, seed + static_cast<std::uint64_t>(i),
            std::move(id)));
    }
    return dataset;
}

}  // namespace pmclass
