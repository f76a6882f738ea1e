#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dimo/backend.hpp"
#include "dimo/dataset.hpp"
#include "dimo/engine.hpp"
#include "dimo/synthetic.hpp"

namespace dimo {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalSettings {
  int parallelism = 1;
  std::filesystem::path out_dir = "dimo-out";
  bool overlay = false;
  bool traces = false;
};

/// Everything a CLI run needs. Built from defaults, then a config file, then
/// command-line flags, each layer overriding the previous one.
struct RunConfig {
  EngineConfig engine;
  BackendConfig backend;
  EvalSettings eval;
  OracleConfig oracle;
  ManifestFormat format;
  GenConfig synth;
  std::uint64_t synth_seed = 0;

  /// Re-checks every component invariant; throws ConfigError.
  void validate() const;
};

/// Sets "section.key" from its textual form. Throws ConfigError on an
/// unknown key or a malformed value.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies an INI-style key/value tree:
///
///   [engine]
///   max_iters = 7
///   mode = full
///
/// "\n" in a value is read as a newline. Lines starting with ';' are comments.
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Every recognized key, "section.key".
std::vector<std::string> config_keys();

/// The config as an INI document that apply_config_text accepts.
std::string dump_config(const RunConfig& cfg);

}  // namespace dimo
