#pragma once

// Run configuration: flags over environment over a key=value file over
// defaults. The API token is only ever taken from the environment.

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "anaflow/generator.hpp"

namespace anaflow {

enum class OutputFormat { Text, JsonLines };

inline constexpr std::string_view kApiKeyEnv = "ANAFLOW_API_KEY";
inline constexpr std::string_view kEnvPrefix = "ANAFLOW_";

struct RunConfig {
    double vdd = 5.0;
    std::string library_path;
    std::string generator = "replay";  // "remote" or "replay"
    RemoteOptions remote;
    std::string script_path;
    int concurrency = 1;
    OutputFormat output = OutputFormat::Text;
    bool inverter_standard = false;
};

using Settings = std::map<std::string, std::string>;

/// Keys a config file, an ANAFLOW_<KEY> variable or a flag may set.
const std::vector<std::string>& config_keys();

/// Parses a flat key=value file; '#' starts a comment. Throws ConfigError
/// with "config line N:" diagnostics.
Settings parse_config_text(std::string_view text);
Settings read_config_file(const std::string& path);

/// Merges the layers (later wins: file, env, flags) onto the defaults and
/// validates. `env` holds the process environment by variable name.
RunConfig load_config(const Settings& file, const std::map<std::string, std::string>& env, const Settings& flags);

/// Environment snapshot of the ANAFLOW_ variables.
std::map<std::string, std::string> process_environment();

/// Copies the token into config.remote; throws ConfigError naming the
/// variable when it is missing.
void require_api_key(RunConfig& config, const std::map<std::string, std::string>& env);

}  // namespace anaflow
