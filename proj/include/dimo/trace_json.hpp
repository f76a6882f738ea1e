#pragma once

#include <string_view>

#include <json.hpp>

#include "dimo/engine.hpp"

namespace dimo {

/// Schema tag of a per-episode trace document. Bump on incompatible changes.
inline constexpr std::string_view kTraceSchema = "dimo.trace/1";

/// Episode document:
///   {"schema": "dimo.trace/1",
///    "instruction": "...", "image": {"width": W, "height": H},
///    "config": {max_iters, crop_scale, stop_ratio, min_region_side, mode},
///    "result": {"mode", "final_point": {x, y}, "choice": {...} | null,
///               "selection_skipped", "selection_fallback",
///               "traces": [{"modality", "final_point", "iterations": [
///                  {"t", "region": [x, y, w, h], "local": {x, y},
///                   "global": {x, y}, "raw", "parse_fallback", "stop"}]}]}}
nlohmann::json trace_document(const EngineConfig& cfg, std::string_view instruction,
                              Size image_size, const GroundingResult& result);

nlohmann::json to_json(const EngineConfig& cfg);
nlohmann::json to_json(const GroundingTrace& trace);
nlohmann::json to_json(const GroundingResult& result);

EngineConfig engine_config_from_json(const nlohmann::json& doc);
GroundingTrace grounding_trace_from_json(const nlohmann::json& doc);
GroundingResult grounding_result_from_json(const nlohmann::json& doc);

nlohmann::json point_json(Point p);
Point point_from_json(const nlohmann::json& doc);

}  // namespace dimo
