#include <doctest.h>

#include <json.hpp>

#include "dimo/draw.hpp"
#include "dimo/engine.hpp"
#include "dimo/overlay.hpp"
#include "dimo/scripted_backend.hpp"
#include "support.hpp"

using namespace dimo;
using nlohmann::json;

namespace {

GroundingTrace three_step_trace() {
  GroundingTrace t;
  t.modality = ModalityTag::Generic;
  const Region regions[] = {{0, 0, 400, 300}, {100, 80, 200, 150}, {150, 110, 100, 75}};
  const Point points[] = {{200, 150}, {195, 148}, {197, 149}};
  for (int i = 0; i < 3; ++i) {
    IterationRecord rec;
    rec.index = i + 1;
    rec.region = regions[i];
    rec.prediction_global = points[i];
    rec.prediction_local = {points[i].x - regions[i].x, points[i].y - regions[i].y};
    t.iterations.push_back(rec);
  }
  t.final_point = points[2];
  return t;
}

int count_color(const Image& img, Rgb color) {
  int n = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) n += img.at(x, y) == color ? 1 : 0;
  }
  return n;
}

}  // namespace

TEST_CASE("scene has one rect and one dot per iteration") {
  const GroundingTrace t = three_step_trace();
  const OverlayScene scene = build_overlay({&t}, {400, 300});
  REQUIRE(scene.zoom_regions.size() == 3);
  REQUIRE(scene.dots.size() == 3);
  CHECK_FALSE(scene.ground_truth.has_value());
  CHECK_FALSE(scene.final_point.has_value());
  for (int i = 0; i < 3; ++i) {
    CHECK(scene.zoom_regions[i].region == t.iterations[i].region);
    CHECK(scene.dots[i].at == t.iterations[i].prediction_global);
    CHECK(scene.dots[i].label == std::to_string(i + 1));
    CHECK(scene.dots[i].color == pass_color(ModalityTag::Generic));
  }
}

TEST_CASE("ground truth and final point appear only when given") {
  const GroundingTrace t = three_step_trace();
  const OverlayScene scene = build_overlay({&t}, {400, 300}, Region{180, 130, 40, 40}, Point{197, 149});
  REQUIRE(scene.ground_truth.has_value());
  CHECK(scene.ground_truth->region == Region{180, 130, 40, 40});
  REQUIRE(scene.final_point.has_value());
  CHECK(scene.final_point->at == Point{197, 149});
}

TEST_CASE("passes are colored by modality") {
  GroundingTrace text = three_step_trace();
  text.modality = ModalityTag::Text;
  GroundingTrace icon = three_step_trace();
  icon.modality = ModalityTag::Icon;
  const OverlayScene scene = build_overlay({&text, &icon}, {400, 300});
  REQUIRE(scene.zoom_regions.size() == 6);
  CHECK(scene.zoom_regions[0].color == pass_color(ModalityTag::Text));
  CHECK(scene.zoom_regions[5].color == pass_color(ModalityTag::Icon));
  CHECK_FALSE(pass_color(ModalityTag::Text) == pass_color(ModalityTag::Icon));
  CHECK_FALSE(pass_color(ModalityTag::Text) == pass_color(ModalityTag::Generic));
}

TEST_CASE("rasterizing draws the ground-truth box only when present") {
  const GroundingTrace t = three_step_trace();
  const Image base({400, 300});
  const Image without = render_trace_overlay(base, std::vector<GroundingTrace>{t});
  const Image with = render_trace_overlay(base, std::vector<GroundingTrace>{t}, Region{20, 20, 50, 40});
  const Rgb gt_color = build_overlay({&t}, {400, 300}, Region{20, 20, 50, 40}).ground_truth->color;
  CHECK(count_color(without, gt_color) == 0);
  CHECK(count_color(with, gt_color) > 0);
  CHECK(with.at(20, 20) == gt_color);
  CHECK(without.at(20, 20) == Rgb{255, 255, 255});
  CHECK(without.at(0, 0) == pass_color(ModalityTag::Generic));
  CHECK(base == Image({400, 300}));
}

TEST_CASE("overlay matches the committed golden image") {
  const Image screen = load_image(support::fixture("screen_1000x600.png"));
  ScriptedBackend backend(Script::from_json(json::parse(
      support::read_text(support::fixture("scripts/convergent.json")))));
  EngineConfig cfg;
  cfg.mode = EngineMode::DynamicOnly;
  const GroundingResult result = ground(screen, "click the submit button", cfg, backend);
  const Image overlay = render_trace_overlay(screen, result, Region{450, 270, 100, 60});

  const auto bytes = encode_png(overlay);
  const std::string actual(bytes.begin(), bytes.end());
  const std::string committed = support::golden("overlay_convergent.png", actual);
  const Image expected = decode_png(std::span(
      reinterpret_cast<const std::uint8_t*>(committed.data()), committed.size()));
  CHECK(expected == overlay);
  CHECK(committed == actual);

  const auto again = encode_png(render_trace_overlay(screen, result, Region{450, 270, 100, 60}));
  CHECK(again == bytes);
}
