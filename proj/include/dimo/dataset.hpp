#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dimo/geometry.hpp"

namespace dimo {

enum class ModalityLabel { Text, Icon };

/// One benchmark instance.
struct Sample {
  std::string id;
  std::filesystem::path image_path;
  std::string instruction;
  Region gt_box;
  ModalityLabel modality = ModalityLabel::Text;
  std::string group;
  std::string platform;
  /// Text distractor location, present in synthetic manifests only.
  std::optional<Region> distractor_box;
};

enum class BoxConvention { Xywh, Xyxy };

/// Field names and box encoding of a manifest. The defaults follow the
/// ScreenSpot-Pro layout.
struct ManifestFormat {
  BoxConvention bbox = BoxConvention::Xyxy;
  std::string id_field = "id";
  std::string image_field = "img_filename";
  std::string instruction_field = "instruction";
  std::string bbox_field = "bbox";
  std::string modality_field = "ui_type";
  std::string group_field = "group";
  std::string platform_field = "platform";
  std::string distractor_field = "distractor_bbox";
  /// Image paths are resolved against this directory; empty means the
  /// manifest's own directory.
  std::filesystem::path images_dir;
};

struct LoadError {
  std::size_t index = 0;
  std::string id;
  std::string reason;
};

struct LoadResult {
  std::vector<Sample> samples;
  std::vector<LoadError> errors;
};

/// Unreadable or structurally invalid manifest.
class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loads and validates every entry: the image must exist with a readable
/// header, the box must be non-empty and inside the image, the modality must
/// be text or icon and ids must be unique. Bad entries go to `errors`.
/// Throws ManifestError when the manifest itself cannot be used.
LoadResult load_dataset(const std::filesystem::path& manifest, const ManifestFormat& format);

/// As load_dataset, for an already parsed manifest. Relative image paths are
/// resolved against `base_dir` unless format.images_dir is set.
LoadResult parse_manifest(const nlohmann::json& doc, const ManifestFormat& format,
                          const std::filesystem::path& base_dir);

/// Integer region covering the box given as four numbers.
Region box_from_values(std::span<const double> values, BoxConvention convention);
nlohmann::json box_to_json(const Region& box, BoxConvention convention);

nlohmann::json manifest_entry(const Sample& sample, const ManifestFormat& format);

std::string to_string(ModalityLabel label);
ModalityLabel parse_modality_label(std::string_view text);
std::string to_string(BoxConvention convention);
BoxConvention parse_box_convention(std::string_view text);

}  // namespace dimo
