#include "dimo/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <regex>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "dimo/evaluate.hpp"
#include "dimo/http_backend.hpp"
#include "dimo/overlay.hpp"
#include "dimo/report.hpp"
#include "dimo/scripted_backend.hpp"
#include "dimo/trace_json.hpp"

namespace dimo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

// Installs the SIGINT handler for the lifetime of a batch run.
class InterruptGuard {
 public:
  InterruptGuard() {
    g_interrupted.store(false);
    previous_ = std::signal(SIGINT, on_sigint);
  }
  ~InterruptGuard() { std::signal(SIGINT, previous_); }
  InterruptGuard(const InterruptGuard&) = delete;
  InterruptGuard& operator=(const InterruptGuard&) = delete;

 private:
  void (*previous_)(int) = SIG_DFL;
};

// Exit-code carrying failure raised inside a command.
struct CliFailure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, std::string message) { throw CliFailure{code, std::move(message)}; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

// Options shared by every subcommand; each maps onto a config key.
struct CommonFlags {
  std::optional<std::string> config;
  std::vector<std::string> sets;
  std::optional<std::string> backend, endpoint, model, convention, max_iters, mode, parallelism,
      out, script, seed;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config, "Config file (defaults to $DIMO_CONFIG)");
    cmd.add_option("--set", sets, "Override any config key, section.key=value")->take_all();
    cmd.add_option("--backend", backend, "mock | native-http | openai-compat | oracle");
    cmd.add_option("--endpoint", endpoint, "Backend base URL");
    cmd.add_option("--model", model, "Model id");
    cmd.add_option("--convention", convention, "pixels | norm01 | norm1000");
    cmd.add_option("--max-iters", max_iters, "Zoom iteration cap");
    cmd.add_option("--mode", mode, "vanilla | dynamic-only | modality-only | full");
    cmd.add_option("--parallelism", parallelism, "Worker threads");
    cmd.add_option("--out", out, "Output directory");
    cmd.add_option("--script", script, "Script file for the mock backend");
  }

  ConfigLayers layers(const CliEnv& env, const char* seed_key) const {
    ConfigLayers l;
    if (config) {
      l.file = *config;
    } else if (env.config_path && !env.config_path->empty()) {
      l.file = *env.config_path;
    }
    l.env = env;
    const std::pair<const char*, const std::optional<std::string>*> direct[] = {
        {"backend.kind", &backend},       {"backend.endpoint", &endpoint},
        {"backend.model", &model},        {"backend.convention", &convention},
        {"engine.max_iters", &max_iters}, {"engine.mode", &mode},
        {"eval.parallelism", &parallelism}, {"eval.out", &out},
        {"backend.script", &script},
    };
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got " + kv);
      l.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [key, value] : direct) {
      if (*value) l.overrides.emplace_back(key, **value);
    }
    if (seed && seed_key) l.overrides.emplace_back(seed_key, *seed);
    return l;
  }
};

// Episode-level backend source for batch commands.
BackendProvider make_provider(const RunConfig& cfg) {
  switch (cfg.backend.kind) {
    case BackendKind::Mock: {
      if (cfg.backend.script_path.empty()) {
        throw ConfigError("the mock backend needs --script");
      }
      std::shared_ptr<const ScriptBook> book;
      try {
        book = std::make_shared<const ScriptBook>(ScriptBook::load(cfg.backend.script_path));
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
      return [book](const Sample& sample, std::size_t) -> std::shared_ptr<Backend> {
        auto script = book->for_sample(sample.id);
        if (!script) throw BackendUnavailable("no script for sample " + sample.id);
        return std::make_shared<ScriptedBackend>(std::move(*script));
      };
    }
    case BackendKind::NativeHttp:
    case BackendKind::OpenAiCompat: {
      auto shared = std::make_shared<HttpBackend>(cfg.backend);
      if (cfg.backend.kind == BackendKind::NativeHttp) {
        try {
          shared->health();
        } catch (const BackendError& e) {
          fail(kExitBackend, fmt::format("backend health check failed: {}", e.what()));
        }
      }
      return [shared](const Sample&, std::size_t) -> std::shared_ptr<Backend> { return shared; };
    }
    case BackendKind::Oracle: {
      const OracleConfig oracle = cfg.oracle;
      return [oracle](const Sample& sample, std::size_t) -> std::shared_ptr<Backend> {
        return make_oracle(sample, oracle);
      };
    }
  }
  throw ConfigError("unsupported backend");
}

std::vector<Sample> load_samples(const RunConfig& cfg, const fs::path& manifest,
                                 std::ostream& err) {
  LoadResult loaded;
  try {
    loaded = load_dataset(manifest, cfg.format);
  } catch (const ManifestError& e) {
    fail(kExitNoSamples, e.what());
  }
  for (const auto& e : loaded.errors) {
    err << fmt::format("skipping manifest entry {} ({}): {}\n", e.index,
                       e.id.empty() ? "no id" : e.id, e.reason);
  }
  if (loaded.samples.empty()) fail(kExitNoSamples, "no valid samples in " + manifest.string());
  return std::move(loaded.samples);
}

struct BatchJob {
  std::vector<EngineConfig> configs;
  std::vector<std::string> labels;
  std::vector<fs::path> dirs;  ///< per-config output directory
};

struct BatchResult {
  std::vector<EvalReport> reports;
  bool interrupted = false;
};

// Runs every config over the samples, streaming records.jsonl (plus traces
// and overlays when enabled) as episodes finish, then writes the reports.
BatchResult run_batch(const RunConfig& cfg, const std::vector<Sample>& samples,
                      const BatchJob& job) {
  const BackendProvider provider = make_provider(cfg);

  std::vector<std::unique_ptr<std::ofstream>> records;
  for (const auto& dir : job.dirs) {
    fs::create_directories(dir);
    if (cfg.eval.traces) fs::create_directories(dir / "traces");
    if (cfg.eval.overlay) fs::create_directories(dir / "overlays");
    records.push_back(std::make_unique<std::ofstream>(dir / "records.jsonl", std::ios::trunc));
    if (!*records.back()) throw std::runtime_error("cannot write " + (dir / "records.jsonl").string());
  }

  EvalOptions options;
  options.parallelism = cfg.eval.parallelism;
  options.cancel = &g_interrupted;
  options.on_episode = [&](const Sample& sample, std::size_t ci, const GroundingResult* result,
                           const SampleRecord& record) {
    auto& out = *records[ci];
    out << record_to_json(record).dump() << '\n';
    out.flush();
    if (!result || (!cfg.eval.traces && !cfg.eval.overlay)) return;
    const std::string name = safe_name(sample.id);
    try {
      if (cfg.eval.overlay) {
        const Image image = load_image(sample.image_path);
        save_png(render_trace_overlay(image, *result, sample.gt_box),
                 job.dirs[ci] / "overlays" / (name + ".png"));
        if (cfg.eval.traces) {
          write_text(job.dirs[ci] / "traces" / (name + ".json"),
                     trace_document(job.configs[ci], sample.instruction, image.size(), *result)
                             .dump(2) +
                         "\n");
        }
      } else {
        const Size size = probe_image_size(sample.image_path).value_or(Size{0, 0});
        write_text(job.dirs[ci] / "traces" / (name + ".json"),
                   trace_document(job.configs[ci], sample.instruction, size, *result).dump(2) +
                       "\n");
      }
    } catch (const std::exception&) {
      // Artifacts are best effort; the record above already landed.
    }
  };

  BatchResult result;
  {
    InterruptGuard guard;
    result.reports = evaluate_many(samples, job.configs, provider, options, job.labels);
    result.interrupted = g_interrupted.load();
  }
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    write_text(job.dirs[i] / "report.json", report_to_json(r).dump(2) + "\n");
    write_text(job.dirs[i] / "report.csv", report_to_csv(r));
    write_text(job.dirs[i] / "report.md", report_to_markdown(r));
  }
  return result;
}

json overall_json(const EvalReport& r) {
  return report_to_json(r)["overall"];
}

// ---- ground ---------------------------------------------------------------

struct GroundCmd {
  CommonFlags common;
  std::string image;
  std::string instruction;
  std::optional<std::string> overlay;

  int run(const CliEnv& env, std::ostream& out, std::ostream& err) const {
    (void)err;
    RunConfig cfg = resolve_config(common.layers(env, nullptr));
    if (cfg.backend.kind == BackendKind::Oracle) {
      throw ConfigError("the oracle backend needs a ground-truth target; use eval or ablate");
    }
    Image img;
    try {
      img = load_image(image);
    } catch (const std::exception& e) {
      fail(kExitImage, e.what());
    }
    std::shared_ptr<Backend> backend;
    try {
      backend = make_backend(cfg.backend);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    const GroundingResult result = ground(img, instruction, cfg.engine, *backend);
    if (overlay) {
      try {
        save_png(render_trace_overlay(img, result), *overlay);
      } catch (const std::exception& e) {
        fail(kExitImage, e.what());
      }
    }
    out << trace_document(cfg.engine, instruction, img.size(), result).dump(2) << '\n';
    return kExitOk;
  }
};

// ---- eval -----------------------------------------------------------------

struct EvalCmd {
  CommonFlags common;
  std::string manifest;
  std::optional<std::string> images_dir;
  bool overlay = false;
  bool traces = false;

  int run(const CliEnv& env, std::ostream& out, std::ostream& err) const {
    ConfigLayers layers = common.layers(env, "oracle.seed");
    if (images_dir) layers.overrides.emplace_back("format.images_dir", *images_dir);
    if (overlay) layers.overrides.emplace_back("eval.overlay", "true");
    if (traces) layers.overrides.emplace_back("eval.traces", "true");
    const RunConfig cfg = resolve_config(layers);
    const auto samples = load_samples(cfg, manifest, err);

    BatchJob job{{cfg.engine}, {to_string(cfg.engine.mode)}, {cfg.eval.out_dir}};
    const BatchResult batch = run_batch(cfg, samples, job);
    const EvalReport& report = batch.reports.front();
    err << report_to_markdown(report);
    out << json{{"report", (cfg.eval.out_dir / "report.json").generic_string()},
                {"label", report.label},
                {"complete", report.complete},
                {"overall", overall_json(report)}}
               .dump()
        << '\n';
    return batch.interrupted ? kExitInterrupted : kExitOk;
  }
};

// ---- ablate ---------------------------------------------------------------

struct AblateCmd {
  CommonFlags common;
  std::string manifest;
  std::optional<std::string> images_dir;
  std::optional<std::string> modes;
  std::optional<std::string> sweep;
  bool overlay = false;
  bool traces = false;

  static std::vector<EngineMode> parse_modes(const std::string& spec) {
    if (spec == "all") return {std::begin(kAllModes), std::end(kAllModes)};
    std::vector<EngineMode> out;
    std::set<EngineMode> seen;
    std::stringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        const EngineMode m = parse_mode(item);
        if (seen.insert(m).second) out.push_back(m);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("--modes: {}", e.what()));
      }
    }
    if (out.empty()) throw ConfigError("--modes is empty");
    return out;
  }

  int run(const CliEnv& env, std::ostream& out, std::ostream& err) const {
    ConfigLayers layers = common.layers(env, "oracle.seed");
    if (images_dir) layers.overrides.emplace_back("format.images_dir", *images_dir);
    if (overlay) layers.overrides.emplace_back("eval.overlay", "true");
    if (traces) layers.overrides.emplace_back("eval.traces", "true");
    const RunConfig cfg = resolve_config(layers);

    const std::vector<EngineMode> mode_list =
        modes ? parse_modes(*modes)
              : (sweep ? std::vector<EngineMode>{} : std::vector<EngineMode>(std::begin(kAllModes),
                                                                             std::end(kAllModes)));
    const std::vector<int> sweep_list = sweep ? parse_sweep_spec(*sweep) : std::vector<int>{};
    const auto samples = load_samples(cfg, manifest, err);

    BatchJob job;
    for (EngineMode m : mode_list) {
      EngineConfig e = cfg.engine;
      e.mode = m;
      job.configs.push_back(e);
      job.labels.push_back(to_string(m));
      job.dirs.push_back(cfg.eval.out_dir / "modes" / to_string(m));
    }
    for (int v : sweep_list) {
      EngineConfig e = cfg.engine;
      e.max_iters = sweep_to_max_iters(v);
      job.configs.push_back(e);
      job.labels.push_back(fmt::format("max_iter={}", v));
      job.dirs.push_back(cfg.eval.out_dir / "sweep" / std::to_string(v));
    }
    const BatchResult batch = run_batch(cfg, samples, job);

    std::vector<const EvalReport*> mode_reports;
    std::vector<std::pair<int, const EvalReport*>> sweep_reports;
    json comparison = {{"schema", "dimo.ablation/1"},
                       {"base_config", to_json(cfg.engine)},
                       {"modes", json::array()},
                       {"sweep", json::array()}};
    bool complete = true;
    for (std::size_t i = 0; i < batch.reports.size(); ++i) {
      const EvalReport& r = batch.reports[i];
      complete = complete && r.complete;
      if (i < mode_list.size()) {
        mode_reports.push_back(&r);
        comparison["modes"].push_back({{"mode", to_string(mode_list[i])},
                                       {"config", to_json(r.config)},
                                       {"overall", overall_json(r)}});
      } else {
        const int v = sweep_list[i - mode_list.size()];
        sweep_reports.emplace_back(v, &r);
        comparison["sweep"].push_back({{"value", v},
                                       {"config", to_json(r.config)},
                                       {"overall", overall_json(r)}});
      }
    }
    comparison["complete"] = complete;

    std::string md;
    if (!mode_reports.empty()) md += reports_to_markdown(mode_reports);
    if (!sweep_reports.empty()) {
      if (!md.empty()) md += "\n";
      md += sweep_to_markdown(sweep_reports);
    }
    fs::create_directories(cfg.eval.out_dir);
    write_text(cfg.eval.out_dir / "comparison.md", md);
    write_text(cfg.eval.out_dir / "comparison.json", comparison.dump(2) + "\n");
    err << md;
    out << comparison.dump() << '\n';
    return batch.interrupted ? kExitInterrupted : kExitOk;
  }
};

// ---- synth ----------------------------------------------------------------

struct SynthCmd {
  CommonFlags common;
  int n = 10;

  int run(const CliEnv& env, std::ostream& out, std::ostream& err) const {
    (void)err;
    const RunConfig cfg = resolve_config(common.layers(env, "synth.seed"));
    if (n <= 0) throw ConfigError("--n must be >= 1");
    const fs::path dir = cfg.eval.out_dir;
    fs::create_directories(dir / "screens");
    json manifest = json::array();
    for (int i = 0; i < n; ++i) {
      const auto index = static_cast<std::size_t>(i);
      const std::string id = screen_id(index);
      SynthScreen screen;
      try {
        screen = generate_screen(screen_seed(cfg.synth_seed, index), cfg.synth);
      } catch (const GenerationError& e) {
        fail(kExitGeneration, fmt::format("{}: {}", id, e.what()));
      }
      const fs::path rel = fs::path("screens") / (id + ".png");
      save_png(render_screen(screen), dir / rel);
      manifest.push_back(manifest_entry(screen_to_sample(screen, id, rel, cfg.synth.group),
                                        cfg.format));
    }
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    out << json{{"manifest", (dir / "manifest.json").generic_string()},
                {"screens", n},
                {"seed", cfg.synth_seed}}
               .dump()
        << '\n';
    return kExitOk;
  }
};

}  // namespace

CliEnv CliEnv::from_process() {
  CliEnv env;
  if (const char* v = std::getenv("DIMO_CONFIG")) env.config_path = v;
  if (const char* v = std::getenv("DIMO_API_TOKEN")) env.api_token = v;
  return env;
}

RunConfig resolve_config(const ConfigLayers& layers) {
  RunConfig cfg;
  if (layers.file) apply_config_file(cfg, *layers.file);
  if (layers.env.api_token) cfg.backend.api_token = *layers.env.api_token;
  for (const auto& [key, value] : layers.overrides) set_config_value(cfg, key, value);
  cfg.validate();
  return cfg;
}

std::vector<int> parse_sweep_spec(const std::string& spec) {
  static const std::regex range(R"(^\s*(\d+)\s*\.\.\s*(\d+)\s*$)");
  std::vector<int> out;
  std::smatch m;
  if (std::regex_match(spec, m, range)) {
    const int a = std::stoi(m[1]);
    const int b = std::stoi(m[2]);
    if (a > b) throw ConfigError("empty sweep range " + spec);
    for (int v = a; v <= b; ++v) out.push_back(v);
    return out;
  }
  static const std::regex item(R"(^\s*(\d+)\s*$)");
  std::stringstream in(spec);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (!std::regex_match(part, m, item)) throw ConfigError("bad sweep value \"" + part + "\"");
    out.push_back(std::stoi(m[1]));
  }
  if (out.empty()) throw ConfigError("empty sweep spec");
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliEnv& env) {
  CLI::App app{"Dynamic multi-pass GUI grounding", "dimo"};
  app.require_subcommand(1);

  GroundCmd ground_cmd;
  auto* g = app.add_subcommand("ground", "Ground one instruction on one screenshot");
  ground_cmd.common.add_to(*g);
  g->add_option("--image", ground_cmd.image, "Screenshot (PNG or JPEG)")->required();
  g->add_option("--instruction", ground_cmd.instruction, "Instruction text")->required();
  g->add_option("--overlay", ground_cmd.overlay, "Write an annotated PNG here");

  EvalCmd eval_cmd;
  auto* e = app.add_subcommand("eval", "Evaluate a manifest");
  eval_cmd.common.add_to(*e);
  e->add_option("--manifest", eval_cmd.manifest, "Manifest JSON")->required();
  e->add_option("--images-dir", eval_cmd.images_dir, "Resolve image paths here");
  e->add_flag("--overlay", eval_cmd.overlay, "Write per-sample overlays");
  e->add_flag("--traces", eval_cmd.traces, "Write per-sample trace JSON");
  e->add_option("--seed", eval_cmd.common.seed, "Oracle seed");

  AblateCmd ablate_cmd;
  auto* a = app.add_subcommand("ablate", "Compare modes and iteration caps on a manifest");
  ablate_cmd.common.add_to(*a);
  a->add_option("--manifest", ablate_cmd.manifest, "Manifest JSON")->required();
  a->add_option("--images-dir", ablate_cmd.images_dir, "Resolve image paths here");
  a->add_option("--modes", ablate_cmd.modes, "all, or a comma list of modes");
  a->add_option("--sweep-iters", ablate_cmd.sweep, "Zoom steps, \"0..5\" or a comma list");
  a->add_flag("--overlay", ablate_cmd.overlay, "Write per-sample overlays");
  a->add_flag("--traces", ablate_cmd.traces, "Write per-sample trace JSON");
  a->add_option("--seed", ablate_cmd.common.seed, "Oracle seed");

  SynthCmd synth_cmd;
  auto* s = app.add_subcommand("synth", "Generate a synthetic screen suite");
  synth_cmd.common.add_to(*s);
  s->add_option("--n", synth_cmd.n, "Number of screens");
  s->add_option("--seed", synth_cmd.common.seed, "Suite seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << '\n';
    return kExitConfig;
  }

  try {
    if (g->parsed()) return ground_cmd.run(env, out, err);
    if (e->parsed()) return eval_cmd.run(env, out, err);
    if (a->parsed()) return ablate_cmd.run(env, out, err);
    if (s->parsed()) return synth_cmd.run(env, out, err);
  } catch (const CliFailure& f) {
    err << "error: " << f.message << '\n';
    return f.code;
  } catch (const ConfigError& ce) {
    err << "config error: " << ce.what() << '\n';
    return kExitConfig;
  } catch (const BackendError& be) {
    err << "backend error: " << be.what() << '\n';
    return kExitBackend;
  } catch (const ImageError& ie) {
    err << "image error: " << ie.what() << '\n';
    return kExitImage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return kExitConfig;
}

}  // namespace dimo
