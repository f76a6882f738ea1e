#include "dimo/engine.hpp"

#include <fmt/format.h>

namespace dimo {

void EngineConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(crop_scale > 0.0 && crop_scale < 1.0)) {
    throw std::invalid_argument("crop_scale must lie in (0, 1)");
  }
  if (!(stop_ratio > 0.0 && stop_ratio < 1.0)) {
    throw std::invalid_argument("stop_ratio must lie in (0, 1)");
  }
  if (min_region_side < 1) throw std::invalid_argument("min_region_side must be >= 1");
}

std::vector<const GroundingTrace*> GroundingResult::traces() const {
  std::vector<const GroundingTrace*> out;
  for (const auto* t : {&text_trace, &icon_trace, &generic_trace}) {
    if (t->has_value()) out.push_back(&t->value());
  }
  return out;
}

int GroundingResult::iterations_used() const {
  int n = 0;
  for (const auto* t : traces()) n += static_cast<int>(t->iterations.size());
  return n;
}

GroundingTrace dynamic_grounding(const Image& image, std::string_view instruction,
                                 ModalityTag modality, const EngineConfig& cfg, Backend& backend) {
  cfg.validate();
  if (instruction.empty()) throw PreconditionError("instruction must not be empty");

  GroundingTrace trace;
  trace.modality = modality;
  Region region = image.bounds();
  Region prev_region = region;
  Point prev_global;

  for (int t = 1; t <= cfg.max_iters; ++t) {
    IterationRecord rec;
    rec.index = t;
    rec.region = region;
    try {
      Prediction p = backend.predict(image, region, instruction, modality);
      rec.prediction_local = clamp_to(p.point, Region::of(region.size));
      rec.raw_text = std::move(p.raw_text);
    } catch (const ParseFailure& e) {
      rec.parse_fallback = true;
      rec.raw_text = e.raw_text();
      rec.prediction_local = t == 1 ? Region::of(region.size).center()
                                    : to_local(region, prev_global);
    }
    rec.prediction_global = to_global(region, rec.prediction_local);

    const auto finish = [&](StopReason reason) {
      rec.stop_reason = rec.parse_fallback ? StopReason::ParseFallback : reason;
      trace.iterations.push_back(std::move(rec));
    };

    if (t > 1 && stop_condition(prev_global, rec.prediction_global, prev_region, cfg.stop_ratio)) {
      finish(StopReason::Converged);
      break;
    }
    if (t == cfg.max_iters) {
      finish(StopReason::MaxIters);
      break;
    }
    const Region next = crop_around(region, rec.prediction_global, cfg.crop_scale);
    if (next.min_side() < cfg.min_region_side) {
      finish(StopReason::RegionFloor);
      break;
    }
    prev_global = rec.prediction_global;
    prev_region = region;
    region = next;
    trace.iterations.push_back(std::move(rec));
  }
  trace.final_point = trace.iterations.back().prediction_global;
  return trace;
}

EngineConfig effective_config(const EngineConfig& cfg) {
  EngineConfig out = cfg;
  if (cfg.mode == EngineMode::Vanilla || cfg.mode == EngineMode::ModalityOnly) out.max_iters = 1;
  return out;
}

int sweep_to_max_iters(int sweep_value) {
  if (sweep_value < 0) throw std::invalid_argument("sweep values start at 0");
  return sweep_value + 1;
}

GroundingResult ground(const Image& image, std::string_view instruction, const EngineConfig& cfg,
                       Backend& backend) {
  const EngineConfig run = effective_config(cfg);
  run.validate();
  GroundingResult result;
  result.mode = cfg.mode;

  if (cfg.mode == EngineMode::Vanilla || cfg.mode == EngineMode::DynamicOnly) {
    result.generic_trace = dynamic_grounding(image, instruction, ModalityTag::Generic, run, backend);
    result.final_point = result.generic_trace->final_point;
    return result;
  }

  result.text_trace = dynamic_grounding(image, instruction, ModalityTag::Text, run, backend);
  result.icon_trace = dynamic_grounding(image, instruction, ModalityTag::Icon, run, backend);
  const Point text_point = result.text_trace->final_point;
  const Point icon_point = result.icon_trace->final_point;

  Choice choice;
  if (distance(text_point, icon_point) < stop_threshold(image.bounds(), run.stop_ratio)) {
    result.selection_skipped = true;
  } else {
    try {
      choice = backend.select(image, instruction, text_point, icon_point);
    } catch (const ParseFailure& e) {
      result.selection_fallback = true;
      choice = Choice{Candidate::Text, e.raw_text()};
    } catch (const ProtocolError& e) {
      result.selection_fallback = true;
      choice = Choice{Candidate::Text, e.what()};
    }
  }
  result.final_point = choice.candidate == Candidate::Text ? text_point : icon_point;
  result.choice = std::move(choice);
  return result;
}

AblationResult run_ablation(const Image& image, std::string_view instruction,
                            const BackendFactory& backend, const EngineConfig& base_cfg,
                            std::optional<int> sweep_max) {
  base_cfg.validate();
  const auto attempt = [&](const EngineConfig& cfg) -> ModeOutcome {
    try {
      auto b = backend();
      return ground(image, instruction, cfg, *b);
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
  };

  AblationResult out;
  for (EngineMode mode : kAllModes) {
    EngineConfig cfg = base_cfg;
    cfg.mode = mode;
    out.modes.emplace(mode, attempt(cfg));
  }
  if (sweep_max) {
    for (int v = 0; v <= *sweep_max; ++v) {
      EngineConfig cfg = base_cfg;
      cfg.max_iters = sweep_to_max_iters(v);
      out.sweep.emplace(v, attempt(cfg));
    }
  }
  return out;
}

std::string to_string(EngineMode mode) {
  switch (mode) {
    case EngineMode::Vanilla:
      return "vanilla";
    case EngineMode::DynamicOnly:
      return "dynamic-only";
    case EngineMode::ModalityOnly:
      return "modality-only";
    case EngineMode::Full:
      return "full";
  }
  return "full";
}

EngineMode parse_mode(std::string_view text) {
  if (text == "vanilla") return EngineMode::Vanilla;
  if (text == "dynamic-only" || text == "dg") return EngineMode::DynamicOnly;
  if (text == "modality-only" || text == "md") return EngineMode::ModalityOnly;
  if (text == "full") return EngineMode::Full;
  throw std::invalid_argument(fmt::format("unknown engine mode: {}", text));
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::None:
      return "none";
    case StopReason::Converged:
      return "converged";
    case StopReason::MaxIters:
      return "max-iters";
    case StopReason::ParseFallback:
      return "parse-fallback";
    case StopReason::RegionFloor:
      return "region-floor";
  }
  return "none";
}

StopReason parse_stop_reason(std::string_view text) {
  if (text == "none") return StopReason::None;
  if (text == "converged") return StopReason::Converged;
  if (text == "max-iters") return StopReason::MaxIters;
  if (text == "parse-fallback") return StopReason::ParseFallback;
  if (text == "region-floor") return StopReason::RegionFloor;
  throw std::invalid_argument(fmt::format("unknown stop reason: {}", text));
}

}  // namespace dimo
