#include <doctest.h>

#include <cmath>

#include "dimo/engine.hpp"
#include "dimo/synthetic.hpp"

using namespace dimo;

namespace {

GenConfig small_screens() {
  GenConfig cfg;
  cfg.screen = {1280, 720};
  cfg.icon_min_side = 48;
  cfg.icon_max_side = 96;
  cfg.text_min_height = 32;
  cfg.text_max_height = 56;
  cfg.distractor_min_distance = 400;
  return cfg;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("splitmix64 matches the reference sequence") {
  // First outputs of the reference generator started from state 0.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(splitmix64(0x9e3779b97f4a7c15ULL) == 0x6E789E6AA1B965F4ULL);
  CHECK(splitmix64(2 * 0x9e3779b97f4a7c15ULL) == 0x06C45D188009454FULL);
}

TEST_CASE("rng draws stay in range and are deterministic") {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) {
    const double u = a.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(u == b.uniform01());
    const int k = a.uniform_int(-3, 5);
    REQUIRE(k >= -3);
    REQUIRE(k <= 5);
    REQUIRE(k == b.uniform_int(-3, 5));
    const std::uint64_t x = a.next();
    differs = differs || c.next() != x;
    b.next();
  }
  CHECK(differs);
  CHECK_THROWS_AS(a.uniform_int(2, 1), std::invalid_argument);
}

TEST_CASE("normal draws have unit variance") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0, sq = 0;
  int within_one = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
    within_one += std::abs(z) < 1.0 ? 1 : 0;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.02);
  CHECK(std::abs(static_cast<double>(within_one) / n - (normal_cdf(1) - normal_cdf(-1))) < 0.005);
}

TEST_CASE("same seed gives the same screen and the same pixels") {
  const GenConfig cfg = small_screens();
  const SynthScreen a = generate_screen(1234, cfg);
  const SynthScreen b = generate_screen(1234, cfg);
  REQUIRE(a.elements.size() == b.elements.size());
  for (std::size_t i = 0; i < a.elements.size(); ++i) {
    CHECK(a.elements[i].box == b.elements[i].box);
    CHECK(a.elements[i].label == b.elements[i].label);
  }
  CHECK(a.instruction == b.instruction);
  const Image ia = render_screen(a);
  CHECK(ia == render_screen(b));
  CHECK(encode_png(ia) == encode_png(render_screen(b)));
  const SynthScreen other = generate_screen(1235, cfg);
  CHECK_FALSE(render_screen(other) == ia);
}

TEST_CASE("invariants hold across 100 seeds") {
  GenConfig cfg = small_screens();
  int with_distractor = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SynthScreen s = generate_screen(screen_seed(5, seed), cfg);
    REQUIRE_NOTHROW(s.check_invariants());
    REQUIRE(s.size == cfg.screen);
    REQUIRE(static_cast<int>(s.elements.size()) <= cfg.max_elements);
    for (std::size_t i = 0; i < s.elements.size(); ++i) {
      REQUIRE(Region::of(s.size).contains(s.elements[i].box));
      for (std::size_t j = i + 1; j < s.elements.size(); ++j) {
        const Region& a = s.elements[i].box;
        const Region& b = s.elements[j].box;
        const bool overlap = a.x < b.right() && b.x < a.right() && a.y < b.bottom() && b.y < a.bottom();
        REQUIRE_FALSE(overlap);
      }
    }
    if (s.distractor_index) {
      ++with_distractor;
      const Element& d = s.elements[*s.distractor_index];
      REQUIRE(d.kind == ElementKind::Text);
      REQUIRE(s.target().kind == ElementKind::Icon);
      REQUIRE(distance(d.box.center(), s.target().box.center()) >= cfg.distractor_min_distance);
    }
    const Sample sample = screen_to_sample(s, screen_id(seed), "x.png", "g");
    REQUIRE(sample.gt_box == s.target().box);
    REQUIRE(sample.distractor_box.has_value() == s.distractor_index.has_value());
    REQUIRE(sample.modality == (s.target().kind == ElementKind::Icon ? ModalityLabel::Icon
                                                                     : ModalityLabel::Text));
  }
  CHECK(with_distractor > 25);
  CHECK(with_distractor < 75);
}

TEST_CASE("distractor shares the target keyword") {
  GenConfig cfg = small_screens();
  cfg.distractor_rate = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SynthScreen s = generate_screen(seed, cfg);
    REQUIRE(s.distractor_index.has_value());
    const Element& d = s.elements[*s.distractor_index];
    CHECK(d.label == s.target().label);
    CHECK(s.instruction.find("icon") != std::string::npos);
  }
}

TEST_CASE("impossible layouts raise GenerationError") {
  GenConfig cfg = small_screens();
  cfg.screen = {200, 200};
  cfg.distractor_rate = 1.0;
  cfg.distractor_min_distance = 5000;
  CHECK_THROWS_AS(generate_screen(1, cfg), GenerationError);
  GenConfig bad = small_screens();
  bad.min_elements = 0;
  CHECK_THROWS_AS(generate_screen(1, bad), std::invalid_argument);
}

TEST_CASE("zero-noise oracle hits the target exactly") {
  GenConfig cfg = small_screens();
  cfg.distractor_rate = 1.0;
  const SynthScreen s = generate_screen(3, cfg);
  const Image image(s.size);
  const Point target = s.target().box.center();
  auto oracle = make_oracle(s, OracleConfig{});
  for (ModalityTag m : {ModalityTag::Text, ModalityTag::Icon, ModalityTag::Generic}) {
    const Region region{10, 10, s.size.width - 20, s.size.height - 20};
    const Prediction p = oracle->predict(image, region, "x", m);
    CHECK(to_global(region, p.point) == target);
  }
  const Point far{0, 0};
  CHECK(oracle->select(image, "x", target, far).candidate == Candidate::Text);
  CHECK(oracle->select(image, "x", far, target).candidate == Candidate::Icon);
}

TEST_CASE("full distractor bias sends text and generic passes to the distractor") {
  GenConfig cfg = small_screens();
  cfg.distractor_rate = 1.0;
  const SynthScreen s = generate_screen(11, cfg);
  const Image image(s.size);
  OracleConfig o;
  o.distractor_bias = 1.0;
  auto oracle = make_oracle(s, o);
  const Point distractor = s.elements[*s.distractor_index].box.center();
  CHECK(oracle->predict(image, image.bounds(), "x", ModalityTag::Generic).point == distractor);
  CHECK(oracle->predict(image, image.bounds(), "x", ModalityTag::Text).point == distractor);
  CHECK(oracle->predict(image, image.bounds(), "x", ModalityTag::Icon).point ==
        s.target().box.center());

  EngineConfig vanilla;
  vanilla.mode = EngineMode::Vanilla;
  const GroundingResult r = ground(image, s.instruction, vanilla, *make_oracle(s, o));
  CHECK_FALSE(point_in_box(r.final_point, s.target().box));
  EngineConfig full;
  const GroundingResult f = ground(image, s.instruction, full, *make_oracle(s, o));
  CHECK(point_in_box(f.final_point, s.target().box));
}

TEST_CASE("noisy oracle is reproducible and clamped") {
  const SynthScreen s = generate_screen(21, small_screens());
  const Image image(s.size);
  OracleConfig o;
  o.noise_alpha = 0.5;
  o.seed = 9;
  auto a = make_oracle(s, o);
  auto b = make_oracle(s, o);
  const Region region{100, 50, 300, 200};
  for (int i = 0; i < 200; ++i) {
    const Prediction pa = a->predict(image, region, "x", ModalityTag::Generic);
    const Prediction pb = b->predict(image, region, "x", ModalityTag::Generic);
    REQUIRE(pa.point == pb.point);
    REQUIRE(point_in_box(pa.point, Region::of(region.size)));
  }
  o.seed = 10;
  o.noise_alpha = 0.01;
  const Point other = make_oracle(s, o)->predict(image, image.bounds(), "x", ModalityTag::Generic).point;
  o.seed = 9;
  CHECK_FALSE(make_oracle(s, o)->predict(image, image.bounds(), "x", ModalityTag::Generic).point ==
              other);
}

TEST_CASE("oracle config validation") {
  CHECK_THROWS_AS(OracleConfig({-0.1, 0, 0, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(OracleConfig({0, 1.5, 0, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(OracleConfig({0, 0, 0, -1}).validate(), std::invalid_argument);
  CHECK_NOTHROW(OracleConfig({0.3, 1.0, 4, 1.0}).validate());
}

TEST_CASE("accuracy degrades monotonically with noise") {
  SuiteOptions opts;
  opts.seed = 2718;
  opts.gen = small_screens();
  opts.gen.distractor_rate = 0.0;
  opts.parallelism = 4;
  EngineConfig vanilla;
  vanilla.mode = EngineMode::Vanilla;
  EngineConfig dynamic;
  dynamic.mode = EngineMode::DynamicOnly;
  dynamic.max_iters = 3;
  std::vector<OracleConfig> oracles;
  for (double alpha : {0.0, 0.02, 0.05, 0.1, 0.2}) oracles.push_back({alpha, 0.0, 1, 0.0});
  const SyntheticReport report = run_synthetic_suite(500, {vanilla, dynamic}, oracles, opts);
  REQUIRE(report.runs.size() == 10);
  for (const EngineConfig& e : {vanilla, dynamic}) {
    double prev = 2.0;
    for (const auto& o : oracles) {
      const SuiteRun* run = report.find(e, o);
      REQUIRE(run != nullptr);
      REQUIRE(run->report.overall.total == 500);
      const double acc = *run->report.overall.accuracy();
      if (o.noise_alpha == 0.0) CHECK(acc == 1.0);
      CHECK(acc <= prev + 0.02);
      prev = acc;
    }
  }
  CHECK(*report.find(vanilla, oracles.back())->report.overall.accuracy() <
        *report.find(vanilla, oracles[1])->report.overall.accuracy());
}
