#include "dimo/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "dimo/draw.hpp"

namespace dimo {

namespace {

constexpr std::array<std::string_view, 32> kVocabulary = {
    "Edit",   "Save",    "Open",   "Close",  "Search", "Share",  "Print",   "Undo",
    "Redo",   "Copy",    "Paste",  "Delete", "Help",   "Zoom",   "Export",  "Import",
    "Filter", "Sort",    "Refresh", "Upload", "Download", "Send", "Reply",  "Archive",
    "Rename", "Move",    "Lock",   "Play",   "Pause",  "Record", "Settings", "Profile"};

constexpr std::array<Rgb, 8> kIconPalette = {{{52, 101, 164},
                                              {204, 0, 0},
                                              {78, 154, 6},
                                              {245, 121, 0},
                                              {117, 80, 123},
                                              {193, 125, 17},
                                              {6, 152, 154},
                                              {85, 87, 83}}};

constexpr Rgb kBackground{236, 238, 241};
constexpr int kSeparation = 8;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

int text_scale_for(int height) { return std::max(1, (height * 3 / 5) / draw::kGlyphHeight); }

Size element_size(Rng& rng, ElementKind kind, std::string_view label, const GenConfig& cfg) {
  if (kind == ElementKind::Icon) {
    const int side = rng.uniform_int(cfg.icon_min_side, cfg.icon_max_side);
    return {side, side};
  }
  const int h = rng.uniform_int(cfg.text_min_height, cfg.text_max_height);
  const int scale = text_scale_for(h);
  return {draw::text_width(label, scale) + 2 * h / 3, h};
}

bool separated(const Region& a, const Region& b) {
  return a.right() + kSeparation <= b.x || b.right() + kSeparation <= a.x ||
         a.bottom() + kSeparation <= b.y || b.bottom() + kSeparation <= a.y;
}

bool fits(const Region& box, const std::vector<Element>& placed, Size screen) {
  if (!Region::of(screen).contains(box)) return false;
  return std::all_of(placed.begin(), placed.end(),
                     [&](const Element& e) { return separated(box, e.box); });
}

std::optional<Region> place_anywhere(Rng& rng, Size size, const std::vector<Element>& placed,
                                     const GenConfig& cfg) {
  if (size.width > cfg.screen.width || size.height > cfg.screen.height) return std::nullopt;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const Region box{rng.uniform_int(0, cfg.screen.width - size.width),
                     rng.uniform_int(0, cfg.screen.height - size.height), size};
    if (fits(box, placed, cfg.screen)) return box;
  }
  return std::nullopt;
}

std::optional<Region> place_away(Rng& rng, Size size, const Region& anchor,
                                 const std::vector<Element>& placed, const GenConfig& cfg) {
  if (size.width > cfg.screen.width || size.height > cfg.screen.height) return std::nullopt;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const Region box{rng.uniform_int(0, cfg.screen.width - size.width),
                     rng.uniform_int(0, cfg.screen.height - size.height), size};
    if (distance(box.center(), anchor.center()) >= cfg.distractor_min_distance &&
        fits(box, placed, cfg.screen)) {
      return box;
    }
  }
  return std::nullopt;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r = next();
  while (r >= limit) r = next();
  return lo + static_cast<int>(r % span);
}

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool Rng::bernoulli(double p) { return uniform01() < p; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

std::uint64_t hash_id(std::string_view id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void SynthScreen::check_invariants() const {
  if (elements.empty() || target_index >= elements.size()) {
    throw std::logic_error("screen has no target");
  }
  const auto targets = std::count_if(elements.begin(), elements.end(),
                                     [](const Element& e) { return e.is_target; });
  if (targets != 1 || !elements[target_index].is_target) {
    throw std::logic_error("screen must have exactly one target");
  }
  for (const auto& e : elements) {
    if (!Region::of(size).contains(e.box)) throw std::logic_error("element outside the screen");
  }
  if (target().box.min_side() < 8) throw std::logic_error("target smaller than 8 px");
  if (distractor_index) {
    const auto& d = elements.at(*distractor_index);
    if (d.kind != ElementKind::Text || d.is_target || target().kind != ElementKind::Icon ||
        lower(d.label) != lower(target().label)) {
      throw std::logic_error("malformed distractor");
    }
  }
}

void GenConfig::validate() const {
  if (screen.width < 1 || screen.height < 1) throw std::invalid_argument("screen size must be positive");
  if (min_elements < 1 || max_elements < min_elements) {
    throw std::invalid_argument("need 1 <= min_elements <= max_elements");
  }
  if (icon_min_side < 8 || icon_max_side < icon_min_side) {
    throw std::invalid_argument("need 8 <= icon_min_side <= icon_max_side");
  }
  if (text_min_height < 8 || text_max_height < text_min_height) {
    throw std::invalid_argument("need 8 <= text_min_height <= text_max_height");
  }
  if (!(distractor_rate >= 0.0 && distractor_rate <= 1.0) ||
      !(icon_target_rate >= 0.0 && icon_target_rate <= 1.0)) {
    throw std::invalid_argument("rates must lie in [0, 1]");
  }
  if (distractor_min_distance < 0 || max_attempts < 1) {
    throw std::invalid_argument("distractor_min_distance >= 0 and max_attempts >= 1 required");
  }
}

SynthScreen generate_screen(std::uint64_t seed, const GenConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  SynthScreen screen;
  screen.seed = seed;
  screen.size = cfg.screen;

  const bool with_distractor = rng.bernoulli(cfg.distractor_rate);
  const ElementKind target_kind = with_distractor || rng.bernoulli(cfg.icon_target_rate)
                                      ? ElementKind::Icon
                                      : ElementKind::Text;
  const auto keyword_index = static_cast<std::size_t>(rng.uniform_int(0, kVocabulary.size() - 1));
  const std::string keyword(kVocabulary[keyword_index]);

  const Size target_size = element_size(rng, target_kind, keyword, cfg);
  const auto target_box = place_anywhere(rng, target_size, screen.elements, cfg);
  if (!target_box) throw GenerationError(fmt::format("cannot place the target (seed {})", seed));
  screen.elements.push_back({*target_box, target_kind, keyword, true});
  screen.target_index = 0;

  if (with_distractor) {
    const Size size = element_size(rng, ElementKind::Text, keyword, cfg);
    const auto box = place_away(rng, size, *target_box, screen.elements, cfg);
    if (!box) throw GenerationError(fmt::format("cannot place the distractor (seed {})", seed));
    screen.elements.push_back({*box, ElementKind::Text, keyword, false});
    screen.distractor_index = 1;
  }

  const int wanted = rng.uniform_int(cfg.min_elements, cfg.max_elements);
  while (static_cast<int>(screen.elements.size()) < wanted) {
    auto index = static_cast<std::size_t>(rng.uniform_int(0, kVocabulary.size() - 2));
    if (index >= keyword_index) ++index;  // never reuse the keyword
    const ElementKind kind = rng.bernoulli(0.5) ? ElementKind::Icon : ElementKind::Text;
    const std::string label(kVocabulary[index]);
    const Size size = element_size(rng, kind, label, cfg);
    const auto box = place_anywhere(rng, size, screen.elements, cfg);
    if (!box) break;  // crowded screen; keep what fits
    screen.elements.push_back({*box, kind, label, false});
  }

  screen.instruction = target_kind == ElementKind::Icon
                           ? fmt::format("click the {} icon", lower(keyword))
                           : fmt::format("click the {} link", lower(keyword));
  screen.check_invariants();
  return screen;
}

Image render_screen(const SynthScreen& screen) {
  Image image(screen.size, kBackground);
  for (const auto& e : screen.elements) {
    if (e.kind == ElementKind::Icon) {
      const Rgb fill = kIconPalette[hash_id(e.label) % kIconPalette.size()];
      draw::fill_rect(image, e.box, fill);
      const std::string glyph(1, e.label.front());
      const int scale = std::max(1, e.box.height() / 2 / draw::kGlyphHeight);
      draw::text(image, e.box.x + (e.box.width() - draw::text_width(glyph, scale)) / 2,
                 e.box.y + (e.box.height() - draw::text_height(scale)) / 2, glyph,
                 {255, 255, 255}, scale);
    } else {
      draw::fill_rect(image, e.box, {252, 252, 252});
      draw::stroke_rect(image, e.box, {190, 190, 196}, 2);
      const int scale = text_scale_for(e.box.height());
      draw::text(image, e.box.x + (e.box.width() - draw::text_width(e.label, scale)) / 2,
                 e.box.y + (e.box.height() - draw::text_height(scale)) / 2, e.label,
                 {40, 40, 48}, scale);
    }
  }
  return image;
}

Sample screen_to_sample(const SynthScreen& screen, std::string id,
                        std::filesystem::path image_path, std::string group) {
  Sample s;
  s.id = std::move(id);
  s.image_path = std::move(image_path);
  s.instruction = screen.instruction;
  s.gt_box = screen.target().box;
  s.modality = screen.target().kind == ElementKind::Icon ? ModalityLabel::Icon : ModalityLabel::Text;
  s.group = std::move(group);
  s.platform = "synthetic";
  if (screen.distractor_index) s.distractor_box = screen.elements[*screen.distractor_index].box;
  return s;
}

std::uint64_t screen_seed(std::uint64_t base_seed, std::size_t index) {
  return mix_seed(base_seed, index);
}

std::string screen_id(std::size_t index) { return fmt::format("screen-{:05d}", index); }

void OracleConfig::validate() const {
  if (!(noise_alpha >= 0.0)) throw std::invalid_argument("noise_alpha must be >= 0");
  if (!(distractor_bias >= 0.0 && distractor_bias <= 1.0)) {
    throw std::invalid_argument("distractor_bias must lie in [0, 1]");
  }
  if (!(select_error_rate >= 0.0 && select_error_rate <= 1.0)) {
    throw std::invalid_argument("select_error_rate must lie in [0, 1]");
  }
}

OracleBackend::OracleBackend(Point target, std::optional<Point> distractor, OracleConfig cfg,
                             std::uint64_t stream_seed)
    : target_(target), distractor_(distractor), cfg_(cfg), rng_(stream_seed) {
  cfg_.validate();
}

Prediction OracleBackend::predict(const Image&, const Region& region, std::string_view,
                                  ModalityTag modality) {
  std::lock_guard lock(mutex_);
  Point aim = target_;
  if (modality != ModalityTag::Icon && distractor_ && rng_.bernoulli(cfg_.distractor_bias)) {
    aim = *distractor_;
  }
  const double sigma = cfg_.noise_alpha * region.diagonal();
  const double dx = rng_.normal();
  const double dy = rng_.normal();
  const Point global = clamp_to({aim.x + sigma * dx, aim.y + sigma * dy}, region);
  Prediction p;
  p.point = {global.x - region.x, global.y - region.y};
  p.raw_text = fmt::format("({:.2f}, {:.2f})", p.point.x, p.point.y);
  return p;
}

Choice OracleBackend::select(const Image&, std::string_view, Point text_candidate,
                             Point icon_candidate) {
  std::lock_guard lock(mutex_);
  Candidate pick = distance(text_candidate, target_) <= distance(icon_candidate, target_)
                       ? Candidate::Text
                       : Candidate::Icon;
  if (cfg_.select_error_rate > 0.0 && rng_.bernoulli(cfg_.select_error_rate)) {
    pick = pick == Candidate::Text ? Candidate::Icon : Candidate::Text;
  }
  return {pick, pick == Candidate::Text ? "A" : "B"};
}

std::shared_ptr<OracleBackend> make_oracle(const SynthScreen& screen, const OracleConfig& cfg) {
  std::optional<Point> distractor;
  if (screen.distractor_index) distractor = screen.elements[*screen.distractor_index].box.center();
  return std::make_shared<OracleBackend>(screen.target().box.center(), distractor, cfg,
                                         mix_seed(cfg.seed, screen.seed));
}

std::shared_ptr<OracleBackend> make_oracle(const Sample& sample, const OracleConfig& cfg) {
  std::optional<Point> distractor;
  if (sample.distractor_box) distractor = sample.distractor_box->center();
  return std::make_shared<OracleBackend>(sample.gt_box.center(), distractor, cfg,
                                         mix_seed(cfg.seed, hash_id(sample.id)));
}

const SuiteRun* SyntheticReport::find(const EngineConfig& engine, const OracleConfig& oracle) const {
  for (const auto& r : runs) {
    if (r.engine == engine && r.oracle.noise_alpha == oracle.noise_alpha &&
        r.oracle.distractor_bias == oracle.distractor_bias && r.oracle.seed == oracle.seed &&
        r.oracle.select_error_rate == oracle.select_error_rate) {
      return &r;
    }
  }
  return nullptr;
}

SyntheticReport run_synthetic_suite(int n_screens, const std::vector<EngineConfig>& engine_cfgs,
                                    const std::vector<OracleConfig>& oracle_cfgs,
                                    const SuiteOptions& options) {
  if (n_screens < 1) throw std::invalid_argument("n_screens must be >= 1");
  for (const auto& o : oracle_cfgs) o.validate();
  const auto start = std::chrono::steady_clock::now();

  std::vector<SynthScreen> screens;
  std::vector<Sample> samples;
  screens.reserve(n_screens);
  for (int i = 0; i < n_screens; ++i) {
    screens.push_back(generate_screen(screen_seed(options.seed, i), options.gen));
    samples.push_back(screen_to_sample(screens.back(), screen_id(i), {}, options.gen.group));
  }

  std::vector<EngineConfig> configs;
  std::vector<OracleConfig> oracles;
  std::vector<std::string> labels;
  for (const auto& o : oracle_cfgs) {
    for (const auto& e : engine_cfgs) {
      configs.push_back(e);
      oracles.push_back(o);
      labels.push_back(fmt::format("{} iters={} alpha={} bias={}", to_string(e.mode),
                                   effective_config(e).max_iters, o.noise_alpha,
                                   o.distractor_bias));
    }
  }

  EvalOptions eval;
  eval.parallelism = options.parallelism;
  eval.images = [&](const Sample& s) {
    const auto index = static_cast<std::size_t>(std::stoul(s.id.substr(s.id.find('-') + 1)));
    return render_screen(screens.at(index));
  };
  const BackendProvider provider = [&](const Sample& s, std::size_t ci) {
    return std::shared_ptr<Backend>(make_oracle(s, oracles.at(ci)));
  };

  auto reports = evaluate_many(samples, configs, provider, eval, labels);
  SyntheticReport out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out.runs.push_back({labels[i], configs[i], oracles[i], std::move(reports[i])});
  }
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace dimo
