#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pmclass/gbdt.hpp"
#include "pmclass/hmc.hpp"
#include "pmclass/lstm.hpp"

namespace pmclass {

enum class ModelKind { Hmc, Lstm, Gbdt };

const char* model_kind_name(ModelKind kind);
std::optional<ModelKind> try_parse_model_kind(std::string_view text);
ModelKind parse_model_kind(std::string_view text);  // throws ConfigError

// Model files are line-oriented text: a "pmclass-model 1" magic line, the
// kind, the feature-layout fingerprint, then kind-specific key/value and
// matrix blocks. Doubles are written in shortest round-trip form, so
// save -> load -> save is byte-identical.
std::string serialize_model(const HmcModel& model);
std::string serialize_model(const LstmModel& model);
std::string serialize_model(const GbdtModel& model);

void save_model(const HmcModel& model, const std::string& path);
void save_model(const LstmModel& model, const std::string& path);
void save_model(const GbdtModel& model, const std::string& path);

// Reads only the header; throws DataError on a foreign or corrupt file.
ModelKind peek_model_kind(const std::string& path);

// Loaders throw DataError on any structural problem, including a feature
// fingerprint that does not match the current layout.
HmcModel load_hmc_model(const std::string& path);
LstmModel load_lstm_model(const std::string& path);
GbdtModel load_gbdt_model(const std::string& path);

HmcModel parse_hmc_model(std::string_view text, const std::string& origin);
LstmModel parse_lstm_model(std::string_view text, const std::string& origin);
GbdtModel parse_gbdt_model(std::string_view text, const std::string& origin);

}  // namespace pmclass
