#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pmclass/sensor_model.hpp"

namespace pmclass {

// Generative recipe for one scenario: per-channel log-scale levels with AR(1)
// noise plus Poisson-timed multiplicative bursts. The shipped defaults are
// tuned so the four scenarios separate cleanly in ratio space; they are not
// measurements of any physical sensor.
struct ScenarioProfile {
    PollutantLabel label = PollutantLabel::Background;
    std::array<double, kNumChannels> channel_log_means{};
    std::array<double, kNumChannels> channel_log_stds{};
    double temporal_correlation = 0.0;  // AR(1) coefficient in [0, 1)
    double burst_rate = 0.0;            // expected bursts per 60 s

    void validate() const;  // throws ConfigError
};

using ProfileMap = std::map<PollutantLabel, ScenarioProfile>;

struct SessionPlan {
    struct Entry {
        PollutantLabel label;
        int duration_s;
    };
    std::vector<Entry> entries;

    int total_duration_s() const;
};

// The recorded session plan: four background sessions (3x180 s + 60 s), two
// sand sessions (180 s), three ash sessions (60/120/180 s) and one candle
// session (180 s) -- 1500 s at 1 Hz. Sessions are interleaved so that a 70/30
// chronological cut leaves every pollutant class on both sides (the single
// candle session straddles the cut).
SessionPlan default_session_plan();

ProfileMap default_profiles();

// Profile config file: "[label]" sections with log_means, log_stds,
// temporal_correlation and burst_rate keys. See the README for the schema.
ProfileMap load_profiles(const std::filesystem::path& path);
ProfileMap parse_profiles(std::string_view text, const std::string& origin);
std::string profiles_to_text(const ProfileMap& profiles);

// One session at 1 Hz. Identical (profile, duration, seed) give bit-identical
// frames. Channel nesting is enforced by a descending sort after noise.
LabeledSequence generate_session(const ScenarioProfile& profile, int duration_s,
                                 std::uint64_t seed, std::string session_id = "");

// One sequence per plan entry; entry i uses seed + i.
Dataset generate_corpus(const SessionPlan& plan, const ProfileMap& profiles,
                        std::uint64_t seed);

}  // namespace pmclass
