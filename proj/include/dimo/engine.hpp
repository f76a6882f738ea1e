#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dimo/backend.hpp"

namespace dimo {

/// Ablation modes: a single pass, zooming only, modality split only, or both.
enum class EngineMode { Vanilla, DynamicOnly, ModalityOnly, Full };

struct EngineConfig {
  int max_iters = 7;
  double crop_scale = kDefaultCropScale;
  double stop_ratio = kDefaultStopRatio;
  int min_region_side = 256;
  EngineMode mode = EngineMode::Full;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

enum class StopReason { None, Converged, MaxIters, ParseFallback, RegionFloor };

struct IterationRecord {
  int index = 0;  ///< 1-based iteration number t
  Region region;  ///< region submitted to the backend, full-image frame
  Point prediction_local;
  Point prediction_global;
  std::string raw_text;
  bool parse_fallback = false;
  StopReason stop_reason = StopReason::None;
};

struct GroundingTrace {
  ModalityTag modality = ModalityTag::Generic;
  std::vector<IterationRecord> iterations;
  Point final_point;
};

struct GroundingResult {
  Point final_point;
  EngineMode mode = EngineMode::Full;
  std::optional<GroundingTrace> text_trace;
  std::optional<GroundingTrace> icon_trace;
  std::optional<GroundingTrace> generic_trace;
  std::optional<Choice> choice;
  bool selection_skipped = false;   ///< candidates closer than the stop threshold
  bool selection_fallback = false;  ///< selector answer unusable, text candidate taken

  std::vector<const GroundingTrace*> traces() const;
  int iterations_used() const;
};

/// Iterative zoom for one modality.
///
/// Each step predicts inside the current region, maps the answer to the full
/// image, stops when it lies within `stop_ratio` of the previous region's
/// diagonal from the previous answer (never at t = 1), and otherwise crops
/// around the answer. The loop also ends at `max_iters` and when the next
/// crop's short side would drop below `min_region_side`.
///
/// An unparseable answer is a no-move: the region center on t = 1, the
/// previous answer afterwards. BackendUnavailable and ProtocolError propagate.
GroundingTrace dynamic_grounding(const Image& image, std::string_view instruction,
                                 ModalityTag modality, const EngineConfig& cfg, Backend& backend);

/// Runs the configured mode end to end and returns the final full-image point.
GroundingResult ground(const Image& image, std::string_view instruction, const EngineConfig& cfg,
                       Backend& backend);

/// Config actually executed for `cfg.mode` (Vanilla and ModalityOnly force a
/// single iteration).
EngineConfig effective_config(const EngineConfig& cfg);

/// Sweep value v of the iteration ablation means v zoom steps, i.e.
/// max_iters = v + 1.
int sweep_to_max_iters(int sweep_value);

using BackendFactory = std::function<std::shared_ptr<Backend>()>;
using ModeOutcome = std::variant<GroundingResult, std::string>;

struct AblationResult {
  std::map<EngineMode, ModeOutcome> modes;
  std::map<int, ModeOutcome> sweep;  ///< keyed by sweep value
};

/// Runs all four modes, then (when `sweep_max` is set) the sweep values
/// 0..sweep_max in `base_cfg.mode`. The factory is called once per run so
/// stateful backends start fresh; errors are recorded per run.
AblationResult run_ablation(const Image& image, std::string_view instruction,
                            const BackendFactory& backend, const EngineConfig& base_cfg,
                            std::optional<int> sweep_max = std::nullopt);

inline constexpr EngineMode kAllModes[] = {EngineMode::Vanilla, EngineMode::DynamicOnly,
                                           EngineMode::ModalityOnly, EngineMode::Full};

std::string to_string(EngineMode mode);
EngineMode parse_mode(std::string_view text);
std::string to_string(StopReason reason);
StopReason parse_stop_reason(std::string_view text);

}  // namespace dimo
