#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pmclass/sensor_model.hpp"

namespace pmclass {

// Shortest text representation that parses back to the identical double.
std::string format_double(double value);
// Throws DataError with `context` in the message on failure.
double parse_double(std::string_view text, const std::string& context);
std::int64_t parse_int(std::string_view text, const std::string& context);

inline constexpr const char* kSessionCsvHeader =
    "session_id,timestamp,ch1,ch2,ch3,ch4,ch5,label";

// Session CSV: one row per second, sessions grouped by id in first-appearance
// order, frames sorted by timestamp. Every row is validated against the
// SensorFrame invariants; errors carry the offending line number.
Dataset load_sessions(const std::filesystem::path& path);
Dataset parse_sessions_csv(std::string_view text, const std::string& origin);

void save_sessions(const Dataset& dataset, const std::filesystem::path& path);
std::string sessions_to_csv(const Dataset& dataset);

// Stream rows carry no session or label columns: "timestamp,ch1,ch2,ch3,ch4,ch5".
SensorFrame parse_stream_row(std::string_view line);
std::string format_stream_row(const SensorFrame& frame);

}  // namespace pmclass
