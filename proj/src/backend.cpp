#include "dimo/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <regex>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "dimo/draw.hpp"
#include "dimo/http_backend.hpp"
#include "dimo/scripted_backend.hpp"

namespace dimo {

namespace {

using nlohmann::json;

const std::string kNumber = R"([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)";

std::vector<double> numbers_in(const std::string& text) {
  static const std::regex number_re(kNumber);
  std::vector<double> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), number_re);
       it != std::sregex_iterator(); ++it) {
    out.push_back(std::stod(it->str()));
  }
  return out;
}

Point box_center(double x1, double y1, double x2, double y2) {
  return {(x1 + x2) / 2.0, (y1 + y2) / 2.0};
}

std::optional<Point> from_number_list(const std::vector<double>& v) {
  if (v.size() == 2) return Point{v[0], v[1]};
  if (v.size() == 4) return box_center(v[0], v[1], v[2], v[3]);
  return std::nullopt;
}

std::optional<Point> from_json_value(const json& value) {
  if (value.is_array()) {
    std::vector<double> v;
    for (const auto& e : value) {
      if (!e.is_number()) return std::nullopt;
      v.push_back(e.get<double>());
    }
    return from_number_list(v);
  }
  if (!value.is_object()) return std::nullopt;
  if (value.contains("x") && value.contains("y") && value["x"].is_number() &&
      value["y"].is_number()) {
    return Point{value["x"].get<double>(), value["y"].get<double>()};
  }
  for (const char* key : {"point", "coordinate", "coordinates", "click", "position", "bbox",
                          "bbox_2d", "box"}) {
    if (value.contains(key)) {
      if (auto p = from_json_value(value[key])) return p;
    }
  }
  return std::nullopt;
}

std::optional<Point> try_json(const std::string& raw) {
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    return std::nullopt;
  }
  const json doc = json::parse(raw.substr(open, close - open + 1), nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  return from_json_value(doc);
}

std::optional<Point> try_keyed(const std::string& raw) {
  static const std::regex x_re(R"((?:^|[^A-Za-z_])[xX]\d?['"]?\s*[:=]\s*['"]?()" + kNumber + ")");
  static const std::regex y_re(R"((?:^|[^A-Za-z_])[yY]\d?['"]?\s*[:=]\s*['"]?()" + kNumber + ")");
  std::smatch mx;
  std::smatch my;
  if (std::regex_search(raw, mx, x_re) && std::regex_search(raw, my, y_re) &&
      mx.position(1) < my.position(1)) {
    return Point{std::stod(mx.str(1)), std::stod(my.str(1))};
  }
  return std::nullopt;
}

// A bracketed group counts only when it holds nothing but numbers,
// separators and optional x=/y= keys, so prose such as "(step 1 of 2)" is
// not mistaken for a coordinate.
std::optional<std::vector<double>> numeric_group(const std::string& content) {
  static const std::regex keys_re(R"([xXyY]\d?\s*[=:])");
  static const std::regex shape_re("^[\\s,;]*" + kNumber + "(?:[\\s,;]+" + kNumber +
                                   ")*[\\s,;]*$");
  const std::string stripped = std::regex_replace(content, keys_re, " ");
  if (!std::regex_match(stripped, shape_re)) return std::nullopt;
  return numbers_in(stripped);
}

std::optional<Point> try_groups(const std::string& raw) {
  static const std::regex group_re(R"([\(\[]([^\(\)\[\]]*)[\)\]])");
  static const std::regex joiner_re(R"(^[\s,]*$)");
  std::vector<std::smatch> groups;
  for (auto it = std::sregex_iterator(raw.begin(), raw.end(), group_re);
       it != std::sregex_iterator(); ++it) {
    groups.push_back(*it);
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto values = numeric_group(groups[i].str(1));
    if (!values) continue;
    if (values->size() == 4) return box_center((*values)[0], (*values)[1], (*values)[2], (*values)[3]);
    if (values->size() != 2) continue;
    // Two adjacent pairs are the corners of a box.
    if (i + 1 < groups.size()) {
      const auto gap_begin = groups[i].position(0) + groups[i].length(0);
      const auto gap = raw.substr(gap_begin, groups[i + 1].position(0) - gap_begin);
      const auto next = numeric_group(groups[i + 1].str(1));
      if (next && next->size() == 2 && std::regex_match(gap, joiner_re)) {
        return box_center((*values)[0], (*values)[1], (*next)[0], (*next)[1]);
      }
    }
    return Point{(*values)[0], (*values)[1]};
  }
  return std::nullopt;
}

std::optional<Point> try_bare(const std::string& raw) {
  static const std::regex tag_re(R"(<[^>]*>)");
  const std::string stripped = std::regex_replace(raw, tag_re, " ");
  if (auto values = numeric_group(stripped)) return from_number_list(*values);
  return std::nullopt;
}

std::string format_coord(double v) { return fmt::format("{}", std::lround(v)); }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

void draw_marker(Image& image, Point at, std::string_view label, Rgb color) {
  const double radius = std::max(6.0, std::min(image.width(), image.height()) / 80.0);
  draw::ring(image, at, radius, std::max(2.0, radius / 3.0), color);
  draw::fill_disc(image, at, 2.0, color);
  const int scale = std::max(1, static_cast<int>(radius / 5.0));
  int tx = static_cast<int>(at.x + radius + 2);
  int ty = static_cast<int>(at.y - radius - draw::text_height(scale));
  if (tx + draw::text_width(label, scale) > image.width()) {
    tx = static_cast<int>(at.x - radius - 2) - draw::text_width(label, scale);
  }
  if (ty < 0) ty = static_cast<int>(at.y + radius + 2);
  const Region box{tx - scale, ty - scale, draw::text_width(label, scale) + 2 * scale,
                   draw::text_height(scale) + 2 * scale};
  draw::fill_rect(image, box, {255, 255, 255});
  draw::text(image, tx, ty, label, color, scale);
}

}  // namespace

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates p;
  p.text =
      "Locate the text element that matches the instruction. Consider only text elements such "
      "as labels, menu entries and links; ignore icons and graphical widgets.\n"
      "Instruction: {instruction}\n"
      "Answer with the click point as (x, y).";
  p.icon =
      "Locate the icon or widget that matches the instruction. Consider only icons and "
      "graphical widgets; ignore text elements.\n"
      "Instruction: {instruction}\n"
      "Answer with the click point as (x, y).";
  p.generic =
      "Locate the GUI element that matches the instruction.\n"
      "Instruction: {instruction}\n"
      "Answer with the click point as (x, y).";
  p.select =
      "Two candidate click points were found for the instruction: {instruction}\n"
      "Candidate A is at ({text_x}, {text_y}) and candidate B is at ({icon_x}, {icon_y}); both "
      "are marked in the image.\n"
      "Which candidate is the intended target? Answer with A or B.";
  return p;
}

const std::string& PromptTemplates::for_modality(ModalityTag modality) const {
  switch (modality) {
    case ModalityTag::Text:
      return text;
    case ModalityTag::Icon:
      return icon;
    case ModalityTag::Generic:
      return generic;
  }
  return generic;
}

void BackendConfig::validate() const {
  if (retries < 0) throw std::invalid_argument("backend retries must be >= 0");
  if (timeout.count() <= 0) throw std::invalid_argument("backend timeout must be > 0");
  if (retry_backoff.count() < 0) throw std::invalid_argument("retry backoff must be >= 0");
  if ((kind == BackendKind::NativeHttp || kind == BackendKind::OpenAiCompat) &&
      endpoint.empty()) {
    throw std::invalid_argument("backend endpoint is required for " + to_string(kind));
  }
  if (kind == BackendKind::OpenAiCompat && model.empty()) {
    throw std::invalid_argument("backend model is required for openai-compat");
  }
}

Point parse_point(std::string_view raw_view, CoordConvention convention, Size frame) {
  const std::string raw(raw_view);
  std::optional<Point> found = try_json(raw);
  if (!found) found = try_keyed(raw);
  if (!found) found = try_groups(raw);
  if (!found) found = try_bare(raw);
  if (!found || !std::isfinite(found->x) || !std::isfinite(found->y)) {
    throw ParseFailure(fmt::format("no coordinate pair in model output: \"{}\"", raw), raw);
  }
  return clamp_to(denormalize(*found, convention, frame), Region::of(frame));
}

Candidate parse_choice(std::string_view raw_view) {
  static const std::regex a_re(R"(\bA\b)");
  static const std::regex b_re(R"(\bB\b)");
  static const std::regex text_re(R"(\btext\b)");
  static const std::regex icon_re(R"(\bicon\b)");
  const std::string raw(raw_view);
  const bool a = std::regex_search(raw, a_re);
  const bool b = std::regex_search(raw, b_re);
  if (a != b) return a ? Candidate::Text : Candidate::Icon;
  if (!a) {
    const std::string low = lower(raw);
    const bool t = std::regex_search(low, text_re);
    const bool i = std::regex_search(low, icon_re);
    if (t != i) return t ? Candidate::Text : Candidate::Icon;
  }
  throw ParseFailure(fmt::format("selection answer names no single candidate: \"{}\"", raw), raw);
}

std::string render_prompt(std::string_view tmpl, std::string_view instruction) {
  std::string out(tmpl);
  replace_all(out, "{instruction}", instruction);
  return out;
}

std::string render_select_prompt(std::string_view tmpl, std::string_view instruction,
                                 Point text_candidate, Point icon_candidate) {
  std::string out(tmpl);
  replace_all(out, "{text_x}", format_coord(text_candidate.x));
  replace_all(out, "{text_y}", format_coord(text_candidate.y));
  replace_all(out, "{icon_x}", format_coord(icon_candidate.x));
  replace_all(out, "{icon_y}", format_coord(icon_candidate.y));
  replace_all(out, "{instruction}", instruction);
  return out;
}

Image annotate_candidates(const Image& image, Point text_candidate, Point icon_candidate) {
  Image out = image;
  draw_marker(out, text_candidate, "A", {220, 30, 30});
  draw_marker(out, icon_candidate, "B", {30, 60, 220});
  return out;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case BackendKind::Mock:
      if (cfg.script_path.empty()) {
        throw std::invalid_argument("the mock backend needs a script file");
      }
      return std::make_shared<ScriptedBackend>(Script::load(cfg.script_path));
    case BackendKind::NativeHttp:
    case BackendKind::OpenAiCompat:
      return std::make_shared<HttpBackend>(cfg);
    case BackendKind::Oracle:
      break;
  }
  throw std::invalid_argument("oracle backends are built per screen, not from a config");
}

std::string to_string(ModalityTag modality) {
  switch (modality) {
    case ModalityTag::Text:
      return "text";
    case ModalityTag::Icon:
      return "icon";
    case ModalityTag::Generic:
      return "generic";
  }
  return "generic";
}

ModalityTag parse_modality(std::string_view text) {
  if (text == "text") return ModalityTag::Text;
  if (text == "icon") return ModalityTag::Icon;
  if (text == "generic") return ModalityTag::Generic;
  throw std::invalid_argument(fmt::format("unknown modality: {}", text));
}

std::string to_string(Candidate candidate) {
  return candidate == Candidate::Text ? "text" : "icon";
}

Candidate parse_candidate(std::string_view text) {
  if (text == "text") return Candidate::Text;
  if (text == "icon") return Candidate::Icon;
  throw std::invalid_argument(fmt::format("unknown candidate: {}", text));
}

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Mock:
      return "mock";
    case BackendKind::NativeHttp:
      return "native-http";
    case BackendKind::OpenAiCompat:
      return "openai-compat";
    case BackendKind::Oracle:
      return "oracle";
  }
  return "mock";
}

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "mock") return BackendKind::Mock;
  if (text == "native-http") return BackendKind::NativeHttp;
  if (text == "openai-compat") return BackendKind::OpenAiCompat;
  if (text == "oracle") return BackendKind::Oracle;
  throw std::invalid_argument(fmt::format("unknown backend kind: {}", text));
}

}  // namespace dimo
