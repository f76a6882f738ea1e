#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dimo/dataset.hpp"
#include "dimo/engine.hpp"
#include "dimo/image.hpp"

namespace dimo {

struct SampleRecord {
  std::string id;
  std::string group;
  ModalityLabel modality = ModalityLabel::Text;
  std::optional<Point> final_point;  ///< absent when the episode failed
  bool hit = false;
  int iterations = 0;  ///< predict calls summed over all passes
  double wall_ms = 0.0;
  std::string error;  ///< non-empty for failed episodes, which count as misses
};

struct Cell {
  int hits = 0;
  int total = 0;

  /// Nullopt for an empty cell.
  std::optional<double> accuracy() const;
  Cell& operator+=(const Cell& other);

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct GroupCells {
  Cell text;
  Cell icon;

  Cell combined() const;
  friend bool operator==(const GroupCells&, const GroupCells&) = default;
};

/// Accuracy matrix (group x modality) with micro-averaged totals.
struct EvalReport {
  std::string label;
  EngineConfig config;
  std::map<std::string, GroupCells> groups;
  Cell overall_text;
  Cell overall_icon;
  Cell overall;
  std::vector<SampleRecord> samples;  ///< sorted by id
  bool complete = true;  ///< false when the run was interrupted
  double wall_ms = 0.0;
};

/// Builds the matrix from per-sample records, sorting them by id first.
EvalReport aggregate(std::vector<SampleRecord> records, std::string label,
                     const EngineConfig& config);

/// Backend for one episode: a sample under the config at `config_index`.
using BackendProvider =
    std::function<std::shared_ptr<Backend>(const Sample& sample, std::size_t config_index)>;
using ImageSource = std::function<Image(const Sample&)>;
using EpisodeCallback = std::function<void(const Sample& sample, std::size_t config_index,
                                           const GroundingResult* result,
                                           const SampleRecord& record)>;

struct EvalOptions {
  int parallelism = 1;
  /// Defaults to decoding sample.image_path.
  ImageSource images;
  /// Called once per finished episode, serialized across workers. `result`
  /// is null for failed episodes.
  EpisodeCallback on_episode;
  /// Workers stop taking new samples once this becomes true.
  const std::atomic<bool>* cancel = nullptr;
};

/// Grounds every sample and scores point_in_box(C*, gt_box). The provider is
/// asked for a backend once per (sample, config) episode. Backend failures
/// are misses with the error recorded; the run never aborts. The result does
/// not depend on parallelism or sample order.
EvalReport evaluate(const std::vector<Sample>& samples, const EngineConfig& config,
                    const BackendProvider& backend, const EvalOptions& options = {});

/// One report per config, decoding each image once for all of them.
std::vector<EvalReport> evaluate_many(const std::vector<Sample>& samples,
                                      const std::vector<EngineConfig>& configs,
                                      const BackendProvider& backend,
                                      const EvalOptions& options = {},
                                      const std::vector<std::string>& labels = {});

}  // namespace dimo
