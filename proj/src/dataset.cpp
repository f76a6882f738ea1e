#include "dimo/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "dimo/image.hpp"

namespace dimo {

namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string string_field(const json& entry, const std::string& key) {
  if (!entry.contains(key)) return {};
  const auto& v = entry[key];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

Region box_field(const json& entry, const std::string& key, BoxConvention convention) {
  if (!entry.contains(key)) throw std::invalid_argument("missing field \"" + key + "\"");
  const auto& v = entry[key];
  if (!v.is_array() || v.size() != 4) {
    throw std::invalid_argument("\"" + key + "\" must be an array of four numbers");
  }
  std::vector<double> values;
  for (const auto& e : v) {
    if (!e.is_number()) throw std::invalid_argument("\"" + key + "\" holds a non-number");
    values.push_back(e.get<double>());
  }
  return box_from_values(values, convention);
}

Sample parse_entry(const json& entry, std::size_t index, const ManifestFormat& format,
                   const std::filesystem::path& base_dir) {
  if (!entry.is_object()) throw std::invalid_argument("entry is not an object");
  Sample s;
  s.id = string_field(entry, format.id_field);
  if (s.id.empty()) s.id = fmt::format("sample-{:05d}", index);

  const std::string image = string_field(entry, format.image_field);
  if (image.empty()) throw std::invalid_argument("missing image field \"" + format.image_field + "\"");
  const std::filesystem::path dir = format.images_dir.empty() ? base_dir : format.images_dir;
  s.image_path = std::filesystem::path(image).is_absolute() ? std::filesystem::path(image)
                                                            : dir / image;

  s.instruction = string_field(entry, format.instruction_field);
  if (s.instruction.empty()) throw std::invalid_argument("empty instruction");
  s.gt_box = box_field(entry, format.bbox_field, format.bbox);
  s.modality = parse_modality_label(lower(string_field(entry, format.modality_field)));
  s.group = string_field(entry, format.group_field);
  if (s.group.empty()) s.group = "all";
  s.platform = string_field(entry, format.platform_field);
  if (entry.contains(format.distractor_field) && !entry[format.distractor_field].is_null()) {
    s.distractor_box = box_field(entry, format.distractor_field, format.bbox);
  }
  return s;
}

}  // namespace

Region box_from_values(std::span<const double> v, BoxConvention convention) {
  if (v.size() != 4) throw std::invalid_argument("a box needs four numbers");
  for (double d : v) {
    if (!std::isfinite(d)) throw std::invalid_argument("box holds a non-finite number");
  }
  const double x1 = v[0];
  const double y1 = v[1];
  const double x2 = convention == BoxConvention::Xywh ? v[0] + v[2] : v[2];
  const double y2 = convention == BoxConvention::Xywh ? v[1] + v[3] : v[3];
  const int x = static_cast<int>(std::floor(x1));
  const int y = static_cast<int>(std::floor(y1));
  const int w = static_cast<int>(std::ceil(x2)) - x;
  const int h = static_cast<int>(std::ceil(y2)) - y;
  if (w < 1 || h < 1) throw std::invalid_argument("box is empty");
  return {x, y, w, h};
}

json box_to_json(const Region& box, BoxConvention convention) {
  if (convention == BoxConvention::Xywh) {
    return json::array({box.x, box.y, box.width(), box.height()});
  }
  return json::array({box.x, box.y, box.right(), box.bottom()});
}

LoadResult parse_manifest(const json& doc, const ManifestFormat& format,
                          const std::filesystem::path& base_dir) {
  if (!doc.is_array()) throw ManifestError("manifest must be a JSON array");
  LoadResult out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    std::string id = doc[i].is_object() ? string_field(doc[i], format.id_field) : std::string();
    try {
      Sample s = parse_entry(doc[i], i, format, base_dir);
      id = s.id;
      if (!seen.insert(s.id).second) throw std::invalid_argument("duplicate sample id");
      const auto size = probe_image_size(s.image_path);
      if (!size) throw std::invalid_argument("image missing or unreadable: " + s.image_path.string());
      if (!Region::of(*size).contains(s.gt_box)) {
        throw std::invalid_argument(fmt::format("ground-truth box {} exceeds image {}x{}",
                                                to_string(s.gt_box), size->width, size->height));
      }
      if (s.distractor_box && !Region::of(*size).contains(*s.distractor_box)) {
        throw std::invalid_argument("distractor box exceeds the image");
      }
      out.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      out.errors.push_back({i, id, e.what()});
    }
  }
  return out;
}

LoadResult load_dataset(const std::filesystem::path& manifest, const ManifestFormat& format) {
  std::ifstream in(manifest);
  if (!in) throw ManifestError("cannot open manifest " + manifest.string());
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ManifestError("manifest is not valid JSON: " + manifest.string());
  return parse_manifest(doc, format, manifest.parent_path());
}

json manifest_entry(const Sample& sample, const ManifestFormat& format) {
  json entry;
  entry[format.id_field] = sample.id;
  entry[format.image_field] = sample.image_path.generic_string();
  entry[format.instruction_field] = sample.instruction;
  entry[format.bbox_field] = box_to_json(sample.gt_box, format.bbox);
  entry[format.modality_field] = to_string(sample.modality);
  entry[format.group_field] = sample.group;
  if (!sample.platform.empty()) entry[format.platform_field] = sample.platform;
  if (sample.distractor_box) {
    entry[format.distractor_field] = box_to_json(*sample.distractor_box, format.bbox);
  }
  return entry;
}

std::string to_string(ModalityLabel label) {
  return label == ModalityLabel::Text ? "text" : "icon";
}

ModalityLabel parse_modality_label(std::string_view text) {
  if (text == "text") return ModalityLabel::Text;
  if (text == "icon") return ModalityLabel::Icon;
  throw std::invalid_argument(fmt::format("unrecognized modality label \"{}\"", text));
}

std::string to_string(BoxConvention convention) {
  return convention == BoxConvention::Xywh ? "xywh" : "xyxy";
}

BoxConvention parse_box_convention(std::string_view text) {
  if (text == "xywh") return BoxConvention::Xywh;
  if (text == "xyxy") return BoxConvention::Xyxy;
  throw std::invalid_argument(fmt::format("unknown box convention: {}", text));
}

}  // namespace dimo
