#include "dimo/overlay.hpp"

#include <algorithm>
#include <cmath>

#include "dimo/draw.hpp"

namespace dimo {

namespace {

constexpr Rgb kGroundTruth{220, 30, 30};
constexpr Rgb kFinal{200, 0, 200};

int stroke_for(Size s) { return std::max(1, std::min(s.width, s.height) / 400); }

}  // namespace

Rgb pass_color(ModalityTag modality) {
  switch (modality) {
    case ModalityTag::Text:
      return {30, 90, 230};
    case ModalityTag::Icon:
      return {240, 140, 20};
    case ModalityTag::Generic:
      return {30, 170, 80};
  }
  return {0, 0, 0};
}

OverlayScene build_overlay(const std::vector<const GroundingTrace*>& traces, Size image_size,
                           const std::optional<Region>& gt_box,
                           const std::optional<Point>& final_point) {
  OverlayScene scene;
  const int stroke = stroke_for(image_size);
  const double radius = std::max(3.0, std::min(image_size.width, image_size.height) / 150.0);
  for (const auto* trace : traces) {
    const Rgb color = pass_color(trace->modality);
    for (const auto& it : trace->iterations) {
      scene.zoom_regions.push_back({it.region, color, stroke});
      scene.dots.push_back({it.prediction_global, radius, color, std::to_string(it.index)});
    }
  }
  if (gt_box) scene.ground_truth = OverlayScene::Rect{*gt_box, kGroundTruth, stroke + 1};
  if (final_point) scene.final_point = OverlayScene::Dot{*final_point, radius * 2.5, kFinal, "*"};
  return scene;
}

Image rasterize_overlay(const Image& base, const OverlayScene& scene) {
  Image out = base;
  const int scale = std::max(1, std::min(base.width(), base.height()) / 300);
  for (const auto& r : scene.zoom_regions) draw::stroke_rect(out, r.region, r.color, r.thickness);
  if (scene.ground_truth) {
    draw::stroke_rect(out, scene.ground_truth->region, scene.ground_truth->color,
                      scene.ground_truth->thickness);
  }
  for (const auto& d : scene.dots) {
    draw::fill_disc(out, d.at, d.radius, d.color);
    draw::text(out, static_cast<int>(std::lround(d.at.x + d.radius + 1)),
               static_cast<int>(std::lround(d.at.y - d.radius - draw::text_height(scale))),
               d.label, d.color, scale);
  }
  if (scene.final_point) {
    const auto& f = *scene.final_point;
    draw::ring(out, f.at, f.radius, std::max(2.0, f.radius / 4.0), f.color);
  }
  return out;
}

Image render_trace_overlay(const Image& image, const GroundingResult& result,
                           const std::optional<Region>& gt_box) {
  return rasterize_overlay(
      image, build_overlay(result.traces(), image.size(), gt_box, result.final_point));
}

Image render_trace_overlay(const Image& image, const std::vector<GroundingTrace>& traces,
                           const std::optional<Region>& gt_box) {
  std::vector<const GroundingTrace*> ptrs;
  for (const auto& t : traces) ptrs.push_back(&t);
  std::optional<Point> final_point;
  if (!traces.empty()) final_point = traces.back().final_point;
  return rasterize_overlay(image, build_overlay(ptrs, image.size(), gt_box, final_point));
}

}  // namespace dimo
