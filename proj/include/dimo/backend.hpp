#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dimo/geometry.hpp"
#include "dimo/image.hpp"

namespace dimo {

/// Which element family a grounding pass is told to look for.
enum class ModalityTag { Text, Icon, Generic };

enum class Candidate { Text, Icon };

struct Prediction {
  Point point;  ///< local to the submitted crop, clamped into it
  std::string raw_text;
  double latency_ms = 0.0;
};

struct Choice {
  Candidate candidate = Candidate::Text;
  std::string raw_text;
};

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transport failure that survived every retry, or a backend that cannot
/// answer at all (e.g. an exhausted script).
class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

/// The peer answered, but not in the agreed wire format.
class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// The model answered, but no coordinate pair or label could be extracted.
class ParseFailure : public BackendError {
 public:
  explicit ParseFailure(const std::string& what, std::string raw_text = {})
      : BackendError(what), raw_text_(std::move(raw_text)) {}

  /// Verbatim model output that failed to parse.
  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

enum class BackendKind { Mock, NativeHttp, OpenAiCompat, Oracle };

/// Prompt templates. `{instruction}` is substituted in all of them; the
/// selection template also receives `{text_x}`, `{text_y}`, `{icon_x}` and
/// `{icon_y}`.
struct PromptTemplates {
  std::string text;
  std::string icon;
  std::string generic;
  std::string select;

  static PromptTemplates defaults();
  const std::string& for_modality(ModalityTag modality) const;
};

struct BackendConfig {
  BackendKind kind = BackendKind::Mock;
  std::string endpoint;
  std::string model;
  CoordConvention convention = CoordConvention::Pixels;
  PromptTemplates prompts = PromptTemplates::defaults();
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds retry_backoff{250};
  std::string api_token;
  std::string script_path;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

/// The two model capabilities the grounding engine needs.
///
/// Implementations must accept concurrent calls from several evaluation
/// workers.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Ground `instruction` inside `region` of `image` (the crop the model
  /// sees). The returned point is in the crop's local pixel frame.
  virtual Prediction predict(const Image& image, const Region& region,
                             std::string_view instruction, ModalityTag modality) = 0;

  /// Choose between two full-image candidates for `instruction`.
  virtual Choice select(const Image& image, std::string_view instruction, Point text_candidate,
                        Point icon_candidate) = 0;
};

/// Extracts the first coordinate pair from free-form model output, maps it
/// from `convention` into `frame` pixels and clamps it into the frame.
/// Recognizes "(x, y)", "[x, y]", "x=.., y=..", JSON objects with x/y (or a
/// point/coordinate array, or a bbox), four-number boxes (center taken) and
/// two-corner boxes such as "<|box_start|>(x1,y1),(x2,y2)<|box_end|>".
/// Throws ParseFailure when nothing usable is present.
Point parse_point(std::string_view raw, CoordConvention convention, Size frame);

/// Maps a selection answer to a candidate. Accepts the standalone labels "A"
/// (text candidate) and "B" (icon candidate) anywhere in the answer, or the
/// words "text"/"icon" when no label is present. Throws ParseFailure when the
/// answer names neither or both.
Candidate parse_choice(std::string_view raw);

std::string render_prompt(std::string_view tmpl, std::string_view instruction);
std::string render_select_prompt(std::string_view tmpl, std::string_view instruction,
                                 Point text_candidate, Point icon_candidate);

/// Full image with marker "A" at the text candidate and "B" at the icon
/// candidate.
Image annotate_candidates(const Image& image, Point text_candidate, Point icon_candidate);

/// Builds a Mock (from `script_path`), NativeHttp or OpenAiCompat backend.
/// Oracle backends are per-screen and are built by the synthetic module.
std::shared_ptr<Backend> make_backend(const BackendConfig& cfg);

std::string to_string(ModalityTag modality);
ModalityTag parse_modality(std::string_view text);
std::string to_string(Candidate candidate);
Candidate parse_candidate(std::string_view text);
std::string to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view text);

}  // namespace dimo
