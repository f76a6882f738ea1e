#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dimo/config.hpp"

namespace dimo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitImage = 4;
inline constexpr int kExitNoSamples = 5;
inline constexpr int kExitGeneration = 6;
inline constexpr int kExitInterrupted = 130;

/// The process environment as far as the CLI cares.
struct CliEnv {
  std::optional<std::string> config_path;  ///< DIMO_CONFIG
  std::optional<std::string> api_token;    ///< DIMO_API_TOKEN

  static CliEnv from_process();
};

/// Sources of a RunConfig, lowest precedence first: built-in defaults, the
/// config file (explicit path, else the environment), the token from the
/// environment, then flag overrides as "section.key" = value pairs.
struct ConfigLayers {
  std::optional<std::filesystem::path> file;
  CliEnv env;
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// Merges the layers and validates the result. Throws ConfigError.
RunConfig resolve_config(const ConfigLayers& layers);

/// Inclusive range "a..b" or a comma list of non-negative integers.
std::vector<int> parse_sweep_spec(const std::string& spec);

/// Entry point of the dimo executable. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliEnv& env = CliEnv::from_process());

}  // namespace dimo
