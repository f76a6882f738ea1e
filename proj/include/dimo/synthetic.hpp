#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dimo/backend.hpp"
#include "dimo/dataset.hpp"
#include "dimo/evaluate.hpp"

namespace dimo {

/// Seeded random stream with platform-independent draws (the standard
/// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform01();                  ///< [0, 1), 53-bit resolution
  int uniform_int(int lo, int hi);     ///< inclusive, unbiased
  double normal();                     ///< standard normal (Box-Muller)
  bool bernoulli(double p);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_id(std::string_view id);

enum class ElementKind { Text, Icon };

struct Element {
  Region box;
  ElementKind kind = ElementKind::Icon;
  std::string label;
  bool is_target = false;
};

/// Synthetic GUI screenshot layout with one known target.
struct SynthScreen {
  std::uint64_t seed = 0;
  Size size;
  std::vector<Element> elements;
  std::size_t target_index = 0;
  std::optional<std::size_t> distractor_index;
  std::string instruction;

  const Element& target() const { return elements.at(target_index); }
  /// Throws std::logic_error when an invariant does not hold.
  void check_invariants() const;
};

struct GenConfig {
  Size screen{3840, 2160};
  int min_elements = 12;
  int max_elements = 30;
  int icon_min_side = 192;
  int icon_max_side = 448;
  int text_min_height = 128;
  int text_max_height = 224;
  /// Probability that a screen carries a text distractor (its target is
  /// then always an icon).
  double distractor_rate = 0.5;
  /// Probability of an icon target on screens without a distractor.
  double icon_target_rate = 0.5;
  /// Minimum center distance between the distractor and the target.
  int distractor_min_distance = 1100;
  int max_attempts = 400;
  std::string group = "synthetic";

  void validate() const;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic in (seed, cfg). Throws GenerationError when the target or
/// the distractor cannot be placed within cfg.max_attempts.
SynthScreen generate_screen(std::uint64_t seed, const GenConfig& cfg);

/// Flat rectangles with labels; the same screen always renders the same bytes.
Image render_screen(const SynthScreen& screen);

Sample screen_to_sample(const SynthScreen& screen, std::string id,
                        std::filesystem::path image_path, std::string group);

/// Seed of screen `index` in a suite seeded with `base_seed`.
std::uint64_t screen_seed(std::uint64_t base_seed, std::size_t index);
std::string screen_id(std::size_t index);

/// Parametric error model of the oracle backend.
struct OracleConfig {
  double noise_alpha = 0.0;      ///< sigma = noise_alpha * diagonal(current region)
  double distractor_bias = 0.0;  ///< chance a text/generic pass aims at the distractor
  std::uint64_t seed = 0;
  double select_error_rate = 0.0;  ///< chance the selector picks the farther candidate

  void validate() const;
};

/// Model stand-in that knows the target. Icon passes aim at the target; text
/// and generic passes aim at the distractor (when there is one) with
/// probability distractor_bias. Gaussian noise proportional to the region
/// diagonal is added and the point clamped into the region. Selection picks
/// the candidate closer to the target. Deterministic in seed and call order.
class OracleBackend final : public Backend {
 public:
  OracleBackend(Point target, std::optional<Point> distractor, OracleConfig cfg,
                std::uint64_t stream_seed);

  Prediction predict(const Image& image, const Region& region, std::string_view instruction,
                     ModalityTag modality) override;
  Choice select(const Image& image, std::string_view instruction, Point text_candidate,
                Point icon_candidate) override;

 private:
  std::mutex mutex_;
  Point target_;
  std::optional<Point> distractor_;
  OracleConfig cfg_;
  Rng rng_;
};

/// Oracle for a screen; the stream seed mixes cfg.seed with the screen seed.
std::shared_ptr<OracleBackend> make_oracle(const SynthScreen& screen, const OracleConfig& cfg);
/// Oracle for a manifest sample (target = gt_box center, distractor from the
/// optional distractor box); the stream seed mixes cfg.seed with the id.
std::shared_ptr<OracleBackend> make_oracle(const Sample& sample, const OracleConfig& cfg);

struct SuiteRun {
  std::string label;
  EngineConfig engine;
  OracleConfig oracle;
  EvalReport report;
};

struct SyntheticReport {
  std::vector<SuiteRun> runs;
  double wall_ms = 0.0;

  const SuiteRun* find(const EngineConfig& engine, const OracleConfig& oracle) const;
};

struct SuiteOptions {
  std::uint64_t seed = 0;
  GenConfig gen;
  int parallelism = 1;
};

/// Generates n screens and evaluates every (engine config, oracle config)
/// pair on the same screens through evaluate_many. Each episode gets a fresh
/// oracle, so runs are paired across configurations.
SyntheticReport run_synthetic_suite(int n_screens, const std::vector<EngineConfig>& engine_cfgs,
                                    const std::vector<OracleConfig>& oracle_cfgs,
                                    const SuiteOptions& options = {});

}  // namespace dimo
