#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "whdpd/tx_sim.hpp"
#include "whdpd/wh_learn.hpp"
#include "whdpd/wh_model.hpp"

namespace whdpd {

using Json = nlohmann::json;

inline constexpr std::string_view kModelSchema = "whdpd.model/1";
inline constexpr std::string_view kArtifactSchema = "whdpd.artifact/1";
inline constexpr std::string_view kChannelSchema = "whdpd.channel/1";

/// {"schema", "layers": [{"kind": "fir", "taps": [...]}, {"kind": "poly", "coeffs": {"3": a}}]}
Json model_to_json(const WhModel& model);
/// Throws ConfigError on a malformed document or a schema tag of another kind.
WhModel model_from_json(const Json& doc);

/// {"schema", "model", "stored_nl_input_amplitude": [...], "training": {...}}.
/// The per-iteration log is not persisted.
Json artifact_to_json(const DpdArtifact& artifact);
DpdArtifact artifact_from_json(const Json& doc);

/// Channel fields; `{"preset": "paper-like", ...}` starts from the preset and
/// overrides the fields given.
Json channel_to_json(const TxChannel& channel);
TxChannel channel_from_json(const Json& doc);
/// Throws ConfigError for unknown names.
TxChannel channel_preset(std::string_view name);

/// Throws IoError when the file cannot be read, ConfigError when it is not JSON.
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
void write_json_file(const std::filesystem::path& path, const Json& doc);

/// One sample per line; blank lines and lines starting with '#' are skipped.
SampledSignal read_waveform_csv(const std::filesystem::path& path, double samples_per_symbol = 1.0);
std::string waveform_to_csv(const SampledSignal& x);

/// Shortest text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace whdpd
