#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "semswarm/evolution.hpp"

namespace semswarm {

/// Run logs are JSON lines: one header object ({"type": "header", ...}) with
/// prompt, revisions, priors, config and generator id, then one
/// {"type": "generation", ...} object per GenerationRecord. Field names are
/// listed in docs/run_log.md.
inline constexpr int kRunLogVersion = 1;

nlohmann::json config_to_json(const EvolutionConfig& config);

/// Applies the keys present in `overrides` on top of `base`. Unknown keys are
/// ignored; mistyped values throw ConfigError.
EvolutionConfig config_from_json(const nlohmann::json& overrides, EvolutionConfig base = {});

nlohmann::json record_to_json(const GenerationRecord& record, bool include_wall_ms = true);
GenerationRecord record_from_json(const nlohmann::json& j);

nlohmann::json header_to_json(const RunHistory& history);

std::string serialize_run(const RunHistory& history, bool include_wall_ms = true);

/// Throws ParseError naming the offending line.
RunHistory parse_run(std::string_view text);

/// Writes the log through a temporary file and rename.
void write_run_log(const RunHistory& history, const std::filesystem::path& path);

RunHistory read_run_log(const std::filesystem::path& path);

/// True for ids made of [A-Za-z0-9_-], 1 to 128 characters.
bool valid_run_id(std::string_view id);

/// Stores the history as {store}/{run_id}.jsonl and returns the id.
std::string persist_run(const RunHistory& history, const std::filesystem::path& store);

/// Throws NotFound for an unknown id and ParseError for a corrupt file.
RunHistory load_run(const std::filesystem::path& store, std::string_view run_id);

}  // namespace semswarm
