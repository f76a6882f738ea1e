#include <doctest.h>

#include <set>

#include "dimo/cli.hpp"
#include "dimo/config.hpp"
#include "support.hpp"

using namespace dimo;

namespace {

std::filesystem::path default_conf() {
  return std::filesystem::path(DIMO_FIXTURES_DIR) / ".." / ".." / "config" / "default.conf";
}

}  // namespace

TEST_CASE("shipped default.conf reproduces the built-in defaults") {
  RunConfig from_file;
  apply_config_file(from_file, default_conf());
  CHECK(dump_config(from_file) == dump_config(RunConfig{}));
}

TEST_CASE("dump and apply round-trip every key") {
  RunConfig cfg;
  set_config_value(cfg, "engine.max_iters", "4");
  set_config_value(cfg, "engine.crop_scale", "0.3");
  set_config_value(cfg, "engine.stop_ratio", "0.1");
  set_config_value(cfg, "engine.mode", "modality-only");
  set_config_value(cfg, "backend.kind", "openai-compat");
  set_config_value(cfg, "backend.endpoint", "http://127.0.0.1:9/v1");
  set_config_value(cfg, "backend.model", "m");
  set_config_value(cfg, "backend.convention", "norm1000");
  set_config_value(cfg, "backend.prompt_text", "line one\\nline two {instruction}");
  set_config_value(cfg, "eval.overlay", "yes");
  set_config_value(cfg, "oracle.noise_alpha", "0.125");
  set_config_value(cfg, "format.bbox", "xywh");
  set_config_value(cfg, "synth.group", "CAD");
  set_config_value(cfg, "synth.seed", "18446744073709551615");

  const std::string dumped = dump_config(cfg);
  RunConfig back;
  apply_config_text(back, dumped);
  CHECK(dump_config(back) == dumped);
  CHECK(back.engine.max_iters == 4);
  CHECK(back.engine.crop_scale == 0.3);
  CHECK(back.engine.mode == EngineMode::ModalityOnly);
  CHECK(back.backend.convention == CoordConvention::Normalized1000);
  CHECK(back.backend.prompts.text == "line one\nline two {instruction}");
  CHECK(back.eval.overlay);
  CHECK(back.oracle.noise_alpha == 0.125);
  CHECK(back.synth_seed == UINT64_MAX);
  CHECK(back.synth.group == "CAD");
}

TEST_CASE("the api token is never dumped") {
  RunConfig cfg;
  set_config_value(cfg, "backend.api_token", "secret-token");
  CHECK(cfg.backend.api_token == "secret-token");
  CHECK(dump_config(cfg).find("secret-token") == std::string::npos);
  CHECK(dump_config(cfg).find("api_token") == std::string::npos);
}

TEST_CASE("every key is settable and dumped keys are known") {
  const auto keys = config_keys();
  const std::set<std::string> known(keys.begin(), keys.end());
  CHECK(known.size() == keys.size());
  for (const char* k : {"engine.max_iters", "engine.crop_scale", "engine.stop_ratio",
                        "engine.min_region_side", "engine.mode", "backend.kind", "backend.retries",
                        "eval.parallelism", "oracle.seed", "format.images_dir", "synth.width"}) {
    CHECK(known.count(k) == 1);
  }
  std::string section;
  for (const auto& line : support::split_lines(dump_config(RunConfig{}))) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const std::string key = section + "." + line.substr(0, line.find(" = "));
    CHECK(known.count(key) == 1);
  }
}

TEST_CASE("bad input is rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(set_config_value(cfg, "engine.nope", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_value(cfg, "max_iters", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_value(cfg, "engine.max_iters", "seven"), ConfigError);
  CHECK_THROWS_AS(set_config_value(cfg, "engine.max_iters", "7x"), ConfigError);
  CHECK_THROWS_AS(set_config_value(cfg, "engine.crop_scale", ""), ConfigError);
  CHECK_THROWS_AS(set_config_value(cfg, "engine.mode", "turbo"), ConfigError);
  CHECK_THROWS_AS(set_config_value(cfg, "backend.kind", "carrier-pigeon"), ConfigError);
  CHECK_THROWS_AS(set_config_value(cfg, "eval.overlay", "maybe"), ConfigError);
  CHECK_THROWS_AS(set_config_value(cfg, "format.bbox", "polar"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "max_iters = 3\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "[engine]\nfoo = 3\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "[engine\nmax_iters = 3\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/dimo.conf"), ConfigError);
  CHECK(cfg.engine.max_iters == EngineConfig{}.max_iters);
}

TEST_CASE("booleans accept the usual spellings") {
  RunConfig cfg;
  for (const char* t : {"true", "1", "yes", "on"}) {
    cfg.eval.traces = false;
    set_config_value(cfg, "eval.traces", t);
    CHECK(cfg.eval.traces);
  }
  for (const char* f : {"false", "0", "no", "off"}) {
    cfg.eval.traces = true;
    set_config_value(cfg, "eval.traces", f);
    CHECK_FALSE(cfg.eval.traces);
  }
}

TEST_CASE("merged values are re-validated") {
  support::TempDir dir;
  support::write_text(dir / "a.conf", "[engine]\ncrop_scale = 1.5\n");
  CHECK_THROWS_AS(resolve_config({dir / "a.conf", {}, {}}), ConfigError);
  // A later layer can repair an earlier one.
  CHECK(resolve_config({dir / "a.conf", {}, {{"engine.crop_scale", "0.4"}}}).engine.crop_scale ==
        0.4);
  CHECK_THROWS_AS(resolve_config({std::nullopt, {}, {{"eval.parallelism", "0"}}}), ConfigError);
  CHECK_THROWS_AS(resolve_config({std::nullopt, {}, {{"backend.kind", "native-http"}}}),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config({std::nullopt, {}, {{"oracle.distractor_bias", "2"}}}),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config({std::nullopt, {}, {{"synth.min_elements", "0"}}}), ConfigError);
}

TEST_CASE("precedence: defaults, file, environment, overrides") {
  support::TempDir dir;
  support::write_text(dir / "run.conf",
                      "[engine]\nmax_iters = 3\ncrop_scale = 0.4\n"
                      "[backend]\napi_token = from-file\nretries = 5\n");
  struct Case {
    bool file;
    bool env;
    bool flag;
    int max_iters;
    std::string token;
  };
  const Case cases[] = {
      {false, false, false, 7, ""},        {true, false, false, 3, "from-file"},
      {false, true, false, 7, "from-env"}, {true, true, false, 3, "from-env"},
      {false, false, true, 9, "from-flag"}, {true, false, true, 9, "from-flag"},
      {false, true, true, 9, "from-flag"}, {true, true, true, 9, "from-flag"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.file);
    CAPTURE(c.env);
    CAPTURE(c.flag);
    ConfigLayers layers;
    if (c.file) layers.file = dir / "run.conf";
    if (c.env) layers.env.api_token = "from-env";
    if (c.flag) layers.overrides = {{"engine.max_iters", "9"}, {"backend.api_token", "from-flag"}};
    const RunConfig cfg = resolve_config(layers);
    CHECK(cfg.engine.max_iters == c.max_iters);
    CHECK(cfg.backend.api_token == c.token);
    CHECK(cfg.engine.crop_scale == (c.file ? 0.4 : 0.5));
    CHECK(cfg.backend.retries == (c.file ? 5 : 2));
  }
}

TEST_CASE("later overrides win") {
  const RunConfig cfg = resolve_config(
      {std::nullopt, {}, {{"engine.mode", "vanilla"}, {"engine.mode", "dg"}}});
  CHECK(cfg.engine.mode == EngineMode::DynamicOnly);
}

TEST_CASE("sweep specs") {
  CHECK(parse_sweep_spec("0..5") == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(parse_sweep_spec("2..2") == std::vector<int>{2});
  CHECK(parse_sweep_spec("0,2,6") == std::vector<int>{0, 2, 6});
  CHECK(parse_sweep_spec("3") == std::vector<int>{3});
  CHECK_THROWS_AS(parse_sweep_spec("5..1"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("a,b"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("-1"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec(""), ConfigError);
}
