#include "dimo/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace dimo {

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("{}: \"{}\" is not a valid number", key, text));
  }
  return value;
}

// libstdc++ 11 lacks floating-point from_chars on some targets; strtod with a
// full-consumption check is equivalent here.
double parse_double(std::string_view key, std::string_view text) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError(fmt::format("{}: \"{}\" is not a valid number", key, text));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(fmt::format("{}: \"{}\" is not a boolean", key, text));
}

std::string unescape(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size() && text[i + 1] == 'n') {
      out += '\n';
      ++i;
    } else {
      out += text[i];
    }
  }
  return out;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

template <typename F>
auto wrap(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

struct Field {
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, Field, std::less<>>& fields() {
  using K = std::string_view;
  using V = std::string_view;
  static const std::map<std::string, Field, std::less<>> table = {
      {"engine.max_iters",
       {[](RunConfig& c, K k, V v) { c.engine.max_iters = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.engine.max_iters); }}},
      {"engine.crop_scale",
       {[](RunConfig& c, K k, V v) { c.engine.crop_scale = parse_double(k, v); },
        [](const RunConfig& c) { return fmt::format("{}", c.engine.crop_scale); }}},
      {"engine.stop_ratio",
       {[](RunConfig& c, K k, V v) { c.engine.stop_ratio = parse_double(k, v); },
        [](const RunConfig& c) { return fmt::format("{}", c.engine.stop_ratio); }}},
      {"engine.min_region_side",
       {[](RunConfig& c, K k, V v) { c.engine.min_region_side = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.engine.min_region_side); }}},
      {"engine.mode",
       {[](RunConfig& c, K k, V v) { c.engine.mode = wrap(k, [&] { return parse_mode(v); }); },
        [](const RunConfig& c) { return to_string(c.engine.mode); }}},

      {"backend.kind",
       {[](RunConfig& c, K k, V v) {
          c.backend.kind = wrap(k, [&] { return parse_backend_kind(v); });
        },
        [](const RunConfig& c) { return to_string(c.backend.kind); }}},
      {"backend.endpoint",
       {[](RunConfig& c, K, V v) { c.backend.endpoint = v; },
        [](const RunConfig& c) { return c.backend.endpoint; }}},
      {"backend.model",
       {[](RunConfig& c, K, V v) { c.backend.model = v; },
        [](const RunConfig& c) { return c.backend.model; }}},
      {"backend.convention",
       {[](RunConfig& c, K k, V v) {
          c.backend.convention = wrap(k, [&] { return parse_convention(std::string(v)); });
        },
        [](const RunConfig& c) { return to_string(c.backend.convention); }}},
      {"backend.timeout_ms",
       {[](RunConfig& c, K k, V v) {
          c.backend.timeout = std::chrono::milliseconds(parse_number<long>(k, v));
        },
        [](const RunConfig& c) { return std::to_string(c.backend.timeout.count()); }}},
      {"backend.retries",
       {[](RunConfig& c, K k, V v) { c.backend.retries = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.backend.retries); }}},
      {"backend.retry_backoff_ms",
       {[](RunConfig& c, K k, V v) {
          c.backend.retry_backoff = std::chrono::milliseconds(parse_number<long>(k, v));
        },
        [](const RunConfig& c) { return std::to_string(c.backend.retry_backoff.count()); }}},
      {"backend.script",
       {[](RunConfig& c, K, V v) { c.backend.script_path = v; },
        [](const RunConfig& c) { return c.backend.script_path; }}},
      {"backend.api_token",
       {[](RunConfig& c, K, V v) { c.backend.api_token = v; },
        [](const RunConfig&) { return std::string(); }}},
      {"backend.prompt_text",
       {[](RunConfig& c, K, V v) { c.backend.prompts.text = unescape(v); },
        [](const RunConfig& c) { return escape(c.backend.prompts.text); }}},
      {"backend.prompt_icon",
       {[](RunConfig& c, K, V v) { c.backend.prompts.icon = unescape(v); },
        [](const RunConfig& c) { return escape(c.backend.prompts.icon); }}},
      {"backend.prompt_generic",
       {[](RunConfig& c, K, V v) { c.backend.prompts.generic = unescape(v); },
        [](const RunConfig& c) { return escape(c.backend.prompts.generic); }}},
      {"backend.prompt_select",
       {[](RunConfig& c, K, V v) { c.backend.prompts.select = unescape(v); },
        [](const RunConfig& c) { return escape(c.backend.prompts.select); }}},

      {"eval.parallelism",
       {[](RunConfig& c, K k, V v) { c.eval.parallelism = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.eval.parallelism); }}},
      {"eval.out",
       {[](RunConfig& c, K, V v) { c.eval.out_dir = std::string(v); },
        [](const RunConfig& c) { return c.eval.out_dir.string(); }}},
      {"eval.overlay",
       {[](RunConfig& c, K k, V v) { c.eval.overlay = parse_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.eval.overlay ? "true" : "false"); }}},
      {"eval.traces",
       {[](RunConfig& c, K k, V v) { c.eval.traces = parse_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.eval.traces ? "true" : "false"); }}},

      {"oracle.noise_alpha",
       {[](RunConfig& c, K k, V v) { c.oracle.noise_alpha = parse_double(k, v); },
        [](const RunConfig& c) { return fmt::format("{}", c.oracle.noise_alpha); }}},
      {"oracle.distractor_bias",
       {[](RunConfig& c, K k, V v) { c.oracle.distractor_bias = parse_double(k, v); },
        [](const RunConfig& c) { return fmt::format("{}", c.oracle.distractor_bias); }}},
      {"oracle.seed",
       {[](RunConfig& c, K k, V v) { c.oracle.seed = parse_number<std::uint64_t>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.oracle.seed); }}},
      {"oracle.select_error_rate",
       {[](RunConfig& c, K k, V v) { c.oracle.select_error_rate = parse_double(k, v); },
        [](const RunConfig& c) { return fmt::format("{}", c.oracle.select_error_rate); }}},

      {"format.bbox",
       {[](RunConfig& c, K k, V v) {
          c.format.bbox = wrap(k, [&] { return parse_box_convention(v); });
        },
        [](const RunConfig& c) { return to_string(c.format.bbox); }}},
      {"format.id_field",
       {[](RunConfig& c, K, V v) { c.format.id_field = v; },
        [](const RunConfig& c) { return c.format.id_field; }}},
      {"format.image_field",
       {[](RunConfig& c, K, V v) { c.format.image_field = v; },
        [](const RunConfig& c) { return c.format.image_field; }}},
      {"format.instruction_field",
       {[](RunConfig& c, K, V v) { c.format.instruction_field = v; },
        [](const RunConfig& c) { return c.format.instruction_field; }}},
      {"format.bbox_field",
       {[](RunConfig& c, K, V v) { c.format.bbox_field = v; },
        [](const RunConfig& c) { return c.format.bbox_field; }}},
      {"format.modality_field",
       {[](RunConfig& c, K, V v) { c.format.modality_field = v; },
        [](const RunConfig& c) { return c.format.modality_field; }}},
      {"format.group_field",
       {[](RunConfig& c, K, V v) { c.format.group_field = v; },
        [](const RunConfig& c) { return c.format.group_field; }}},
      {"format.platform_field",
       {[](RunConfig& c, K, V v) { c.format.platform_field = v; },
        [](const RunConfig& c) { return c.format.platform_field; }}},
      {"format.distractor_field",
       {[](RunConfig& c, K, V v) { c.format.distractor_field = v; },
        [](const RunConfig& c) { return c.format.distractor_field; }}},
      {"format.images_dir",
       {[](RunConfig& c, K, V v) { c.format.images_dir = std::string(v); },
        [](const RunConfig& c) { return c.format.images_dir.string(); }}},

      {"synth.seed",
       {[](RunConfig& c, K k, V v) { c.synth_seed = parse_number<std::uint64_t>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth_seed); }}},
      {"synth.width",
       {[](RunConfig& c, K k, V v) { c.synth.screen.width = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.screen.width); }}},
      {"synth.height",
       {[](RunConfig& c, K k, V v) { c.synth.screen.height = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.screen.height); }}},
      {"synth.min_elements",
       {[](RunConfig& c, K k, V v) { c.synth.min_elements = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.min_elements); }}},
      {"synth.max_elements",
       {[](RunConfig& c, K k, V v) { c.synth.max_elements = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.max_elements); }}},
      {"synth.icon_min_side",
       {[](RunConfig& c, K k, V v) { c.synth.icon_min_side = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.icon_min_side); }}},
      {"synth.icon_max_side",
       {[](RunConfig& c, K k, V v) { c.synth.icon_max_side = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.icon_max_side); }}},
      {"synth.text_min_height",
       {[](RunConfig& c, K k, V v) { c.synth.text_min_height = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.text_min_height); }}},
      {"synth.text_max_height",
       {[](RunConfig& c, K k, V v) { c.synth.text_max_height = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.text_max_height); }}},
      {"synth.distractor_rate",
       {[](RunConfig& c, K k, V v) { c.synth.distractor_rate = parse_double(k, v); },
        [](const RunConfig& c) { return fmt::format("{}", c.synth.distractor_rate); }}},
      {"synth.icon_target_rate",
       {[](RunConfig& c, K k, V v) { c.synth.icon_target_rate = parse_double(k, v); },
        [](const RunConfig& c) { return fmt::format("{}", c.synth.icon_target_rate); }}},
      {"synth.distractor_min_distance",
       {[](RunConfig& c, K k, V v) { c.synth.distractor_min_distance = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.distractor_min_distance); }}},
      {"synth.max_attempts",
       {[](RunConfig& c, K k, V v) { c.synth.max_attempts = parse_number<int>(k, v); },
        [](const RunConfig& c) { return std::to_string(c.synth.max_attempts); }}},
      {"synth.group",
       {[](RunConfig& c, K, V v) { c.synth.group = v; },
        [](const RunConfig& c) { return c.synth.group; }}},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  try {
    engine.validate();
    backend.validate();
    oracle.validate();
    synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (eval.parallelism < 1) throw ConfigError("eval.parallelism must be >= 1");
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError(fmt::format("unknown config key \"{}\"", key));
  it->second.set(cfg, key, value);
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(fmt::format("config key \"{}\" must live in a section", section));
    }
    for (const auto& [key, value] : body) {
      set_config_value(cfg, section + "." + key, value.data());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(cfg, buffer.str());
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [key, field] : fields()) out.push_back(key);
  return out;
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& [key, field] : fields()) {
    if (key == "backend.api_token") continue;
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      out += fmt::format("{}[{}]\n", section.empty() ? "" : "\n", s);
      section = s;
    }
    out += fmt::format("{} = {}\n", key.substr(dot + 1), field.get(cfg));
  }
  return out;
}

}  // namespace dimo
