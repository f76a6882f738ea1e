#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dimo/engine.hpp"
#include "dimo/image.hpp"

namespace dimo {

/// Shapes of a trace overlay, before rasterization.
struct OverlayScene {
  struct Rect {
    Region region;
    Rgb color;
    int thickness = 2;
  };
  struct Dot {
    Point at;
    double radius = 4.0;
    Rgb color;
    std::string label;
  };

  std::vector<Rect> zoom_regions;  ///< one per iteration, per pass
  std::vector<Dot> dots;           ///< one per iteration, labeled with t
  std::optional<Rect> ground_truth;
  std::optional<Dot> final_point;
};

Rgb pass_color(ModalityTag modality);

OverlayScene build_overlay(const std::vector<const GroundingTrace*>& traces, Size image_size,
                           const std::optional<Region>& gt_box = std::nullopt,
                           const std::optional<Point>& final_point = std::nullopt);

Image rasterize_overlay(const Image& base, const OverlayScene& scene);

/// Zoom regions per pass, labeled iteration points, the final point ringed
/// and the ground-truth box when given. Pure function of its inputs.
Image render_trace_overlay(const Image& image, const GroundingResult& result,
                           const std::optional<Region>& gt_box = std::nullopt);
Image render_trace_overlay(const Image& image, const std::vector<GroundingTrace>& traces,
                           const std::optional<Region>& gt_box = std::nullopt);

}  // namespace dimo
