#include "dimo/http_backend.hpp"

#include <chrono>
#include <regex>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "dimo/base64.hpp"

namespace dimo {

namespace {

using nlohmann::json;

std::string png_base64(const Image& image) { return base64_encode(encode_png(image)); }

json parse_body(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ProtocolError(fmt::format("response is not a JSON object: {}", body.substr(0, 200)));
  }
  return doc;
}

const json& require(const json& doc, const char* key, json::value_t type) {
  if (!doc.contains(key)) throw ProtocolError(fmt::format("response lacks \"{}\"", key));
  const json& v = doc.at(key);
  const bool ok = type == json::value_t::number_float ? v.is_number() : v.type() == type;
  if (!ok) throw ProtocolError(fmt::format("response field \"{}\" has the wrong type", key));
  return v;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

}  // namespace

Endpoint parse_endpoint(std::string_view url) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(url.begin(), url.end(), m, url_re)) {
    throw std::invalid_argument(fmt::format("bad endpoint URL: {}", url));
  }
  Endpoint ep{m.str(1), m.str(2)};
  while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  return ep;
}

WireRequest build_predict_request(const Image& crop, std::string_view instruction,
                                  ModalityTag modality, const BackendConfig&) {
  json body;
  body["image"] = png_base64(crop);
  body["instruction"] = instruction;
  body["modality"] = to_string(modality);
  return {"POST", "/v1/predict", body.dump()};
}

WireRequest build_select_request(const Image& annotated, std::string_view instruction,
                                 Point text_candidate, Point icon_candidate,
                                 const BackendConfig&) {
  json body;
  body["image"] = png_base64(annotated);
  body["instruction"] = instruction;
  body["candidates"] = json::array({
      {{"id", "text"}, {"x", text_candidate.x}, {"y", text_candidate.y}},
      {{"id", "icon"}, {"x", icon_candidate.x}, {"y", icon_candidate.y}},
  });
  return {"POST", "/v1/select", body.dump()};
}

WireRequest build_chat_request(const Image& image, std::string_view prompt,
                               const BackendConfig& cfg) {
  json text_part = {{"type", "text"}, {"text", prompt}};
  json image_part = {{"type", "image_url"},
                     {"image_url", {{"url", "data:image/png;base64," + png_base64(image)}}}};
  json body;
  body["model"] = cfg.model;
  body["temperature"] = 0;
  body["messages"] = json::array(
      {{{"role", "user"}, {"content", json::array({text_part, image_part})}}});
  return {"POST", "/chat/completions", body.dump()};
}

NativePrediction parse_predict_response(std::string_view body) {
  const json doc = parse_body(body);
  NativePrediction p;
  p.point = {require(doc, "x", json::value_t::number_float).get<double>(),
             require(doc, "y", json::value_t::number_float).get<double>()};
  try {
    p.convention = parse_convention(require(doc, "convention", json::value_t::string));
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(e.what());
  }
  if (doc.contains("raw") && doc["raw"].is_string()) p.raw = doc["raw"].get<std::string>();
  return p;
}

Choice parse_select_response(std::string_view body) {
  const json doc = parse_body(body);
  Choice c;
  const auto& choice = require(doc, "choice", json::value_t::string).get_ref<const std::string&>();
  try {
    c.candidate = parse_candidate(choice);
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(e.what());
  }
  if (doc.contains("raw") && doc["raw"].is_string()) c.raw_text = doc["raw"].get<std::string>();
  return c;
}

std::string parse_chat_response(std::string_view body) {
  const json doc = parse_body(body);
  const json& choices = require(doc, "choices", json::value_t::array);
  if (choices.empty() || !choices[0].is_object() || !choices[0].contains("message")) {
    throw ProtocolError("chat response has no message");
  }
  const json& content = choices[0]["message"].value("content", json());
  if (content.is_string()) return content.get<std::string>();
  // Some servers return content as a list of parts.
  if (content.is_array()) {
    std::string out;
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text") out += part.value("text", "");
    }
    return out;
  }
  throw ProtocolError("chat response message has no text content");
}

std::string parse_health_response(std::string_view body) {
  const json doc = parse_body(body);
  if (require(doc, "status", json::value_t::string).get<std::string>() != "ok") {
    throw ProtocolError("health status is not ok");
  }
  return require(doc, "model", json::value_t::string).get<std::string>();
}

HttpBackend::HttpBackend(BackendConfig cfg)
    : cfg_(std::move(cfg)), endpoint_(parse_endpoint(cfg_.endpoint)) {
  cfg_.validate();
}

std::string HttpBackend::send(const WireRequest& request) {
  const std::string path = endpoint_.base_path + request.path;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg_.retry_backoff * attempt);
    httplib::Client client(endpoint_.scheme_host_port);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto micros =
        std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    if (!cfg_.api_token.empty()) client.set_bearer_token_auth(cfg_.api_token);

    auto res = request.method == "GET"
                   ? client.Get(path)
                   : client.Post(path, request.body, request.content_type);
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    // The peer rejected the request itself; sending it again cannot help.
    if (res->status >= 400 && res->status < 500 && res->status != 408 && res->status != 429) {
      throw ProtocolError(fmt::format("HTTP {} from {}: {}", res->status, path,
                                      res->body.substr(0, 200)));
    }
    last_error = fmt::format("HTTP {} from {}", res->status, path);
  }
  throw BackendUnavailable(fmt::format("{} after {} attempt(s): {}", cfg_.endpoint,
                                       cfg_.retries + 1, last_error));
}

Prediction HttpBackend::predict(const Image& image, const Region& region,
                                std::string_view instruction, ModalityTag modality) {
  const auto start = std::chrono::steady_clock::now();
  const Image crop = image.crop(region);
  const Region frame = Region::of(region.size);
  Prediction p;
  if (cfg_.kind == BackendKind::NativeHttp) {
    const auto reply = parse_predict_response(
        send(build_predict_request(crop, instruction, modality, cfg_)));
    p.point = clamp_to(denormalize(reply.point, reply.convention, region.size), frame);
    p.raw_text = reply.raw;
  } else {
    const auto prompt = render_prompt(cfg_.prompts.for_modality(modality), instruction);
    p.raw_text = parse_chat_response(send(build_chat_request(crop, prompt, cfg_)));
    p.point = parse_point(p.raw_text, cfg_.convention, region.size);
  }
  p.latency_ms = elapsed_ms(start);
  return p;
}

Choice HttpBackend::select(const Image& image, std::string_view instruction,
                           Point text_candidate, Point icon_candidate) {
  const Image annotated = annotate_candidates(image, text_candidate, icon_candidate);
  if (cfg_.kind == BackendKind::NativeHttp) {
    return parse_select_response(
        send(build_select_request(annotated, instruction, text_candidate, icon_candidate, cfg_)));
  }
  const auto prompt =
      render_select_prompt(cfg_.prompts.select, instruction, text_candidate, icon_candidate);
  Choice c;
  c.raw_text = parse_chat_response(send(build_chat_request(annotated, prompt, cfg_)));
  c.candidate = parse_choice(c.raw_text);
  return c;
}

std::string HttpBackend::health() {
  if (cfg_.kind != BackendKind::NativeHttp) {
    throw std::logic_error("health checks exist only on the native protocol");
  }
  WireRequest req;
  req.method = "GET";
  req.path = "/v1/health";
  return parse_health_response(send(req));
}

}  // namespace dimo
