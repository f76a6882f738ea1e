#include "dimo/scripted_backend.hpp"

#include <fstream>

#include <fmt/format.h>

namespace dimo {

namespace {

using nlohmann::json;

ScriptEntry entry_from_json(const json& value) {
  if (value.is_string()) return {ScriptEntry::Kind::Answer, value.get<std::string>()};
  if (value.is_array() && value.size() == 2 && value[0].is_number() && value[1].is_number()) {
    return {ScriptEntry::Kind::Answer,
            fmt::format("({}, {})", value[0].get<double>(), value[1].get<double>())};
  }
  if (value.is_object() && value.contains("error")) {
    const auto kind = value["error"].get<std::string>();
    if (kind == "unavailable") return {ScriptEntry::Kind::Unavailable, "scripted failure: backend unavailable"};
    if (kind == "protocol") return {ScriptEntry::Kind::Protocol, "scripted failure: protocol error"};
    throw std::invalid_argument("unknown scripted error kind: " + kind);
  }
  throw std::invalid_argument("bad script entry: " + value.dump());
}

std::deque<ScriptEntry> queue_from_json(const json& value) {
  if (!value.is_array()) throw std::invalid_argument("script queues must be arrays");
  std::deque<ScriptEntry> out;
  for (const auto& e : value) out.push_back(entry_from_json(e));
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open script " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw std::invalid_argument("script is not valid JSON: " + path.string());
  return doc;
}

}  // namespace

Script Script::from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("a script must be a JSON object");
  Script script;
  for (const auto& [key, value] : doc.items()) {
    if (key == "convention") {
      script.convention = parse_convention(value.get<std::string>());
    } else if (key == "select") {
      script.select = queue_from_json(value);
    } else if (key == "text" || key == "icon" || key == "generic" || key == "any") {
      script.predict[key] = queue_from_json(value);
    } else {
      throw std::invalid_argument("unknown script key: " + key);
    }
  }
  return script;
}

Script Script::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

ScriptBook ScriptBook::from_json(const json& doc) {
  ScriptBook book;
  if (doc.is_object() && doc.contains("samples")) {
    for (const auto& [id, script] : doc["samples"].items()) {
      book.samples_.emplace(id, Script::from_json(script));
    }
    if (doc.contains("default")) book.fallback_ = Script::from_json(doc["default"]);
  } else {
    book.fallback_ = Script::from_json(doc);
  }
  return book;
}

ScriptBook ScriptBook::load(const std::filesystem::path& path) {
  return from_json(read_json(path));
}

std::optional<Script> ScriptBook::for_sample(const std::string& sample_id) const {
  if (auto it = samples_.find(sample_id); it != samples_.end()) return it->second;
  return fallback_;
}

ScriptedBackend::ScriptedBackend(Script script) : script_(std::move(script)) {}

ScriptEntry ScriptedBackend::next(std::deque<ScriptEntry>& queue, std::string_view what) {
  if (queue.empty()) throw BackendUnavailable(fmt::format("script exhausted ({})", what));
  ScriptEntry e = std::move(queue.front());
  queue.pop_front();
  switch (e.kind) {
    case ScriptEntry::Kind::Answer:
      return e;
    case ScriptEntry::Kind::Unavailable:
      throw BackendUnavailable(e.text);
    case ScriptEntry::Kind::Protocol:
      throw ProtocolError(e.text);
  }
  return e;
}

Prediction ScriptedBackend::predict(const Image&, const Region& region, std::string_view,
                                    ModalityTag modality) {
  std::lock_guard lock(mutex_);
  ++calls_;
  const std::string key = to_string(modality);
  auto it = script_.predict.find(key);
  if (it == script_.predict.end()) it = script_.predict.find("any");
  if (it == script_.predict.end()) {
    throw BackendUnavailable(fmt::format("script has no queue for modality {}", key));
  }
  ScriptEntry e = next(it->second, key);
  Prediction p;
  p.point = parse_point(e.text, script_.convention, region.size);
  p.raw_text = std::move(e.text);
  return p;
}

Choice ScriptedBackend::select(const Image&, std::string_view, Point, Point) {
  std::lock_guard lock(mutex_);
  ++calls_;
  ScriptEntry e = next(script_.select, "select");
  Choice c;
  c.candidate = parse_choice(e.text);
  c.raw_text = std::move(e.text);
  return c;
}

int ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

}  // namespace dimo
