#include "dimo/trace_json.hpp"

namespace dimo {

using nlohmann::json;

json point_json(Point p) { return {{"x", p.x}, {"y", p.y}}; }

Point point_from_json(const json& doc) {
  return {doc.at("x").get<double>(), doc.at("y").get<double>()};
}

namespace {

json region_json(const Region& r) { return json::array({r.x, r.y, r.width(), r.height()}); }

Region region_from_json(const json& doc) {
  return {doc.at(0).get<int>(), doc.at(1).get<int>(), doc.at(2).get<int>(), doc.at(3).get<int>()};
}

}  // namespace

json to_json(const EngineConfig& cfg) {
  return {{"max_iters", cfg.max_iters},
          {"crop_scale", cfg.crop_scale},
          {"stop_ratio", cfg.stop_ratio},
          {"min_region_side", cfg.min_region_side},
          {"mode", to_string(cfg.mode)}};
}

EngineConfig engine_config_from_json(const json& doc) {
  EngineConfig cfg;
  cfg.max_iters = doc.at("max_iters").get<int>();
  cfg.crop_scale = doc.at("crop_scale").get<double>();
  cfg.stop_ratio = doc.at("stop_ratio").get<double>();
  cfg.min_region_side = doc.at("min_region_side").get<int>();
  cfg.mode = parse_mode(doc.at("mode").get<std::string>());
  return cfg;
}

json to_json(const GroundingTrace& trace) {
  json iterations = json::array();
  for (const auto& it : trace.iterations) {
    iterations.push_back({{"t", it.index},
                          {"region", region_json(it.region)},
                          {"local", point_json(it.prediction_local)},
                          {"global", point_json(it.prediction_global)},
                          {"raw", it.raw_text},
                          {"parse_fallback", it.parse_fallback},
                          {"stop", to_string(it.stop_reason)}});
  }
  return {{"modality", to_string(trace.modality)},
          {"final_point", point_json(trace.final_point)},
          {"iterations", std::move(iterations)}};
}

GroundingTrace grounding_trace_from_json(const json& doc) {
  GroundingTrace trace;
  trace.modality = parse_modality(doc.at("modality").get<std::string>());
  trace.final_point = point_from_json(doc.at("final_point"));
  for (const auto& it : doc.at("iterations")) {
    IterationRecord rec;
    rec.index = it.at("t").get<int>();
    rec.region = region_from_json(it.at("region"));
    rec.prediction_local = point_from_json(it.at("local"));
    rec.prediction_global = point_from_json(it.at("global"));
    rec.raw_text = it.at("raw").get<std::string>();
    rec.parse_fallback = it.at("parse_fallback").get<bool>();
    rec.stop_reason = parse_stop_reason(it.at("stop").get<std::string>());
    trace.iterations.push_back(std::move(rec));
  }
  return trace;
}

json to_json(const GroundingResult& result) {
  json traces = json::array();
  for (const auto* t : result.traces()) traces.push_back(to_json(*t));
  json choice = nullptr;
  if (result.choice) {
    choice = {{"candidate", to_string(result.choice->candidate)},
              {"raw", result.choice->raw_text}};
  }
  return {{"mode", to_string(result.mode)},
          {"final_point", point_json(result.final_point)},
          {"choice", std::move(choice)},
          {"selection_skipped", result.selection_skipped},
          {"selection_fallback", result.selection_fallback},
          {"traces", std::move(traces)}};
}

GroundingResult grounding_result_from_json(const json& doc) {
  GroundingResult result;
  result.mode = parse_mode(doc.at("mode").get<std::string>());
  result.final_point = point_from_json(doc.at("final_point"));
  if (!doc.at("choice").is_null()) {
    result.choice = Choice{parse_candidate(doc["choice"].at("candidate").get<std::string>()),
                           doc["choice"].at("raw").get<std::string>()};
  }
  result.selection_skipped = doc.at("selection_skipped").get<bool>();
  result.selection_fallback = doc.at("selection_fallback").get<bool>();
  for (const auto& t : doc.at("traces")) {
    GroundingTrace trace = grounding_trace_from_json(t);
    switch (trace.modality) {
      case ModalityTag::Text:
        result.text_trace = std::move(trace);
        break;
      case ModalityTag::Icon:
        result.icon_trace = std::move(trace);
        break;
      case ModalityTag::Generic:
        result.generic_trace = std::move(trace);
        break;
    }
  }
  return result;
}

json trace_document(const EngineConfig& cfg, std::string_view instruction, Size image_size,
                    const GroundingResult& result) {
  return {{"schema", kTraceSchema},
          {"instruction", instruction},
          {"image", {{"width", image_size.width}, {"height", image_size.height}}},
          {"config", to_json(cfg)},
          {"result", to_json(result)}};
}

}  // namespace dimo
