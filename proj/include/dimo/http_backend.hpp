#pragma once

#include <string>
#include <string_view>

#include "dimo/backend.hpp"

namespace dimo {

/// A request ready to be sent. Bodies are deterministic: equal inputs give
/// equal bytes.
struct WireRequest {
  std::string method = "POST";
  std::string path;
  std::string body;
  std::string content_type = "application/json";
};

/// Endpoint URL split into the part cpp-httplib connects to and the path
/// prefix requests are appended to.
struct Endpoint {
  std::string scheme_host_port;
  std::string base_path;
};

Endpoint parse_endpoint(std::string_view url);

/// Native protocol: POST /v1/predict {"image", "instruction", "modality"}.
WireRequest build_predict_request(const Image& crop, std::string_view instruction,
                                  ModalityTag modality, const BackendConfig& cfg);

/// Native protocol: POST /v1/select with both candidates.
WireRequest build_select_request(const Image& annotated, std::string_view instruction,
                                 Point text_candidate, Point icon_candidate,
                                 const BackendConfig& cfg);

/// OpenAI-compatible chat completion: one user message holding the prompt
/// and the image as a PNG data URL, temperature 0.
WireRequest build_chat_request(const Image& image, std::string_view prompt,
                               const BackendConfig& cfg);

struct NativePrediction {
  Point point;
  CoordConvention convention = CoordConvention::Pixels;
  std::string raw;
};

/// Throw ProtocolError on malformed bodies.
NativePrediction parse_predict_response(std::string_view body);
Choice parse_select_response(std::string_view body);
std::string parse_chat_response(std::string_view body);
std::string parse_health_response(std::string_view body);

/// Backend speaking either the native protocol or the OpenAI-compatible
/// chat API. Transport failures, 5xx, 408 and 429 are retried `cfg.retries`
/// times, sleeping `retry_backoff * attempt` between tries, then raise
/// BackendUnavailable. Other 4xx answers raise ProtocolError at once.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig cfg);

  Prediction predict(const Image& image, const Region& region, std::string_view instruction,
                     ModalityTag modality) override;
  Choice select(const Image& image, std::string_view instruction, Point text_candidate,
                Point icon_candidate) override;

  /// GET /v1/health (native only); returns the served model id.
  std::string health();

 private:
  std::string send(const WireRequest& request);

  BackendConfig cfg_;
  Endpoint endpoint_;
};

}  // namespace dimo
