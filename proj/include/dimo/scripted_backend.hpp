#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "dimo/backend.hpp"

namespace dimo {

/// One scripted answer: raw model text, or an injected failure.
struct ScriptEntry {
  enum class Kind { Answer, Unavailable, Protocol };
  Kind kind = Kind::Answer;
  std::string text;
};

/// Replayable model answers, one queue per modality plus a shared "any"
/// queue used when a modality has no queue of its own.
///
/// JSON form:
///   {"convention": "norm01",
///    "text": [...], "icon": [...], "generic": [...], "any": [...],
///    "select": ["B"]}
/// Entries are raw strings, [x, y] pairs, or {"error": "unavailable"|"protocol"}.
struct Script {
  CoordConvention convention = CoordConvention::Pixels;
  std::map<std::string, std::deque<ScriptEntry>> predict;
  std::deque<ScriptEntry> select;

  static Script from_json(const nlohmann::json& doc);
  static Script load(const std::filesystem::path& path);
};

/// A set of scripts keyed by sample id, for batch evaluation:
///   {"samples": {"<id>": <script>, ...}, "default": <script>}
/// A plain script document loads as a book whose default is that script.
class ScriptBook {
 public:
  static ScriptBook from_json(const nlohmann::json& doc);
  static ScriptBook load(const std::filesystem::path& path);

  /// Script for `sample_id`, else the default; nullopt if neither exists.
  std::optional<Script> for_sample(const std::string& sample_id) const;

 private:
  std::map<std::string, Script> samples_;
  std::optional<Script> fallback_;
};

/// Replays a Script exactly, in call order. Throws BackendUnavailable once a
/// queue it needs is exhausted.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(Script script);

  Prediction predict(const Image& image, const Region& region, std::string_view instruction,
                     ModalityTag modality) override;
  Choice select(const Image& image, std::string_view instruction, Point text_candidate,
                Point icon_candidate) override;

  int calls() const;

 private:
  ScriptEntry next(std::deque<ScriptEntry>& queue, std::string_view what);

  mutable std::mutex mutex_;
  Script script_;
  int calls_ = 0;
};

}  // namespace dimo
