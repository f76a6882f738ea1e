#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "dimo/cli.hpp"
#include "dimo/engine.hpp"
#include "dimo/http_backend.hpp"
#include "dimo/overlay.hpp"
#include "dimo/report.hpp"
#include "dimo/scripted_backend.hpp"
#include "dimo/synthetic.hpp"
#include "dimo/trace_json.hpp"

namespace py = pybind11;
using namespace dimo;
using nlohmann::json;

namespace {

using PointT = std::pair<double, double>;
using RegionT = std::tuple<int, int, int, int>;

Point to_point(const PointT& p) { return {p.first, p.second}; }
PointT from_point(Point p) { return {p.x, p.y}; }
Region to_region(const RegionT& r) {
  return {std::get<0>(r), std::get<1>(r), std::get<2>(r), std::get<3>(r)};
}
RegionT from_region(const Region& r) { return {r.x, r.y, r.width(), r.height()}; }

py::bytes as_bytes(const std::vector<std::uint8_t>& data) {
  return py::bytes(reinterpret_cast<const char*>(data.data()), data.size());
}

Image image_from(const py::bytes& data) {
  const std::string_view view = data;
  return decode_image(
      std::span(reinterpret_cast<const std::uint8_t*>(view.data()), view.size()));
}

// Overrides on top of the defaults, as "key" = textual value.
EngineConfig engine_from(const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  for (const auto& [key, value] : overrides) set_config_value(cfg, "engine." + key, value);
  cfg.validate();
  return cfg.engine;
}

OracleConfig oracle_from(const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  for (const auto& [key, value] : overrides) set_config_value(cfg, "oracle." + key, value);
  cfg.validate();
  return cfg.oracle;
}

GenConfig gen_from(const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  for (const auto& [key, value] : overrides) set_config_value(cfg, "synth." + key, value);
  cfg.validate();
  return cfg.synth;
}

BackendConfig wire_config(const std::string& kind, const std::string& model) {
  BackendConfig cfg;
  cfg.kind = parse_backend_kind(kind);
  cfg.endpoint = "http://localhost";
  cfg.model = model;
  return cfg;
}

json screen_json(const SynthScreen& s) {
  json elements = json::array();
  for (const auto& e : s.elements) {
    elements.push_back({{"box", {e.box.x, e.box.y, e.box.width(), e.box.height()}},
                        {"kind", e.kind == ElementKind::Icon ? "icon" : "text"},
                        {"label", e.label},
                        {"is_target", e.is_target}});
  }
  return {{"seed", s.seed},
          {"size", {s.size.width, s.size.height}},
          {"instruction", s.instruction},
          {"target_index", s.target_index},
          {"distractor_index", s.distractor_index ? json(*s.distractor_index) : json()},
          {"elements", elements}};
}

}  // namespace

PYBIND11_MODULE(_dimo, m) {
  m.doc() = "Multi-pass GUI grounding core";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<OutOfRegionError>(m, "OutOfRegionError", PyExc_ValueError);
  auto backend_error = py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);
  py::register_exception<ParseFailure>(m, "ParseFailure", backend_error.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", backend_error.ptr());
  py::register_exception<BackendUnavailable>(m, "BackendUnavailable", backend_error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ImageError>(m, "ImageError", PyExc_RuntimeError);
  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);

  m.def("crop_around",
        [](const RegionT& parent, const PointT& center, double scale) {
          return from_region(crop_around(to_region(parent), to_point(center), scale));
        },
        py::arg("parent"), py::arg("center"), py::arg("scale"));
  m.def("to_global",
        [](const RegionT& r, const PointT& p) { return from_point(to_global(to_region(r), to_point(p))); });
  m.def("to_local",
        [](const RegionT& r, const PointT& p) { return from_point(to_local(to_region(r), to_point(p))); });
  m.def("stop_threshold",
        [](const RegionT& r, double ratio) { return stop_threshold(to_region(r), ratio); },
        py::arg("region"), py::arg("ratio") = 1.0 / 6.0);
  m.def("stop_condition",
        [](const PointT& prev, const PointT& curr, const RegionT& r, double ratio) {
          return stop_condition(to_point(prev), to_point(curr), to_region(r), ratio);
        },
        py::arg("prev"), py::arg("curr"), py::arg("prev_region"), py::arg("ratio") = 1.0 / 6.0);
  m.def("point_in_box",
        [](const PointT& p, const RegionT& box) { return point_in_box(to_point(p), to_region(box)); });
  m.def("parse_point",
        [](const std::string& raw, const std::string& convention, std::pair<int, int> frame) {
          return from_point(
              parse_point(raw, parse_convention(convention), {frame.first, frame.second}));
        },
        py::arg("raw"), py::arg("convention") = "pixels", py::arg("frame"));
  m.def("parse_choice", [](const std::string& raw) { return to_string(parse_choice(raw)); });

  m.def("ground_scripted",
        [](const py::bytes& image, const std::string& instruction, const std::string& script_json,
           const std::map<std::string, std::string>& engine) {
          const Image img = image_from(image);
          const EngineConfig cfg = engine_from(engine);
          ScriptedBackend backend(Script::from_json(json::parse(script_json)));
          py::gil_scoped_release release;
          return trace_document(cfg, instruction, img.size(), ground(img, instruction, cfg, backend))
              .dump();
        },
        py::arg("image"), py::arg("instruction"), py::arg("script"),
        py::arg("engine") = std::map<std::string, std::string>{},
        "Grounds one instruction with a scripted backend; returns the trace document as JSON.");

  m.def("generate_screen",
        [](std::uint64_t seed, const std::map<std::string, std::string>& gen) {
          return screen_json(generate_screen(seed, gen_from(gen))).dump();
        },
        py::arg("seed"), py::arg("gen") = std::map<std::string, std::string>{});
  m.def("render_screen_png",
        [](std::uint64_t seed, const std::map<std::string, std::string>& gen) {
          const SynthScreen s = generate_screen(seed, gen_from(gen));
          return as_bytes(encode_png(render_screen(s)));
        },
        py::arg("seed"), py::arg("gen") = std::map<std::string, std::string>{});

  m.def("run_synthetic_suite",
        [](int n, const std::vector<std::map<std::string, std::string>>& engines,
           const std::vector<std::map<std::string, std::string>>& oracles, std::uint64_t seed,
           const std::map<std::string, std::string>& gen, int parallelism) {
          std::vector<EngineConfig> e;
          for (const auto& o : engines) e.push_back(engine_from(o));
          std::vector<OracleConfig> o;
          for (const auto& x : oracles) o.push_back(oracle_from(x));
          SuiteOptions opts;
          opts.seed = seed;
          opts.gen = gen_from(gen);
          opts.parallelism = parallelism;
          SyntheticReport report;
          {
            py::gil_scoped_release release;
            report = run_synthetic_suite(n, e, o, opts);
          }
          json runs = json::array();
          for (const auto& r : report.runs) runs.push_back(report_to_json(r.report));
          return runs.dump();
        },
        py::arg("n"), py::arg("engines"), py::arg("oracles"), py::arg("seed") = 0,
        py::arg("gen") = std::map<std::string, std::string>{}, py::arg("parallelism") = 1,
        "Evaluates every (engine, oracle) pair on n synthetic screens; returns report JSON list.");

  m.def("predict_request_body",
        [](const py::bytes& crop, const std::string& instruction, const std::string& modality) {
          return build_predict_request(image_from(crop), instruction, parse_modality(modality),
                                       wire_config("native-http", ""))
              .body;
        });
  m.def("select_request_body",
        [](const py::bytes& image, const std::string& instruction, const PointT& text,
           const PointT& icon) {
          return build_select_request(image_from(image), instruction, to_point(text),
                                      to_point(icon), wire_config("native-http", ""))
              .body;
        });
  m.def("chat_request_body",
        [](const py::bytes& image, const std::string& prompt, const std::string& model) {
          return build_chat_request(image_from(image), prompt, wire_config("openai-compat", model))
              .body;
        });

  m.def("aggregate",
        [](const std::string& records_json, const std::string& label) {
          std::vector<SampleRecord> records;
          for (const auto& r : json::parse(records_json)) {
            SampleRecord rec;
            rec.id = r.at("id").get<std::string>();
            rec.group = r.value("group", "");
            rec.modality = parse_modality_label(r.at("modality").get<std::string>());
            rec.hit = r.at("hit").get<bool>();
            records.push_back(std::move(rec));
          }
          const EvalReport report = aggregate(records, label, EngineConfig{});
          return std::make_tuple(report_to_json(report).dump(), report_to_csv(report),
                                 report_to_markdown(report));
        },
        py::arg("records"), py::arg("label") = "",
        "Aggregates {id, group, modality, hit} records; returns (json, csv, markdown).");

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code = 0;
          {
            py::gil_scoped_release release;
            code = run_cli(args, out, err);
          }
          return std::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the dimo command line in-process; returns (code, stdout, stderr).");
}
