#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "safevsc/harness.hpp"

namespace safevsc {

/// Thrown for invalid configuration documents; the message names the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Overlays `doc` on top of `base`. Unknown keys and wrongly typed values
/// raise ConfigError with the dotted key path.
RunConfig apply_config(const RunConfig& base, const nlohmann::json& doc);

/// Parses a JSON config file (// and /* */ comments allowed) over the defaults.
RunConfig load_config_file(const std::filesystem::path& path, const RunConfig& base = {});

nlohmann::json to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);

/// Canonical serialized form; equal reports give byte-identical text.
std::string dump_report(const RunReport& r);

nlohmann::json agent_meta(const DqnAgent& agent, std::uint64_t seed);

void save_agent(const std::filesystem::path& checkpoint, const DqnAgent& agent, const RunConfig& cfg);

/// Loads a checkpoint into a fresh agent built from cfg.agent.
DqnAgent load_agent(const std::filesystem::path& checkpoint, const RunConfig& cfg);

}  // namespace safevsc
