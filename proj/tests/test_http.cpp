#include <doctest.h>

#include <deque>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dimo/base64.hpp"
#include "dimo/draw.hpp"
#include "dimo/http_backend.hpp"
#include "stub_server.hpp"
#include "support.hpp"

using namespace dimo;
using nlohmann::json;
using support::Canned;
using support::StubServer;

namespace {

BackendConfig config_for(BackendKind kind, const std::string& endpoint) {
  BackendConfig cfg;
  cfg.kind = kind;
  cfg.endpoint = endpoint;
  cfg.model = "test-model";
  cfg.retries = 2;
  cfg.retry_backoff = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(5000);
  return cfg;
}

Image tiny() { return load_image(support::fixture("tiny_8x6.png")); }

json corpus() { return json::parse(support::read_text(support::fixture("protocol/corpus.json"))); }

}  // namespace

TEST_CASE("endpoint URLs split into host and base path") {
  auto ep = parse_endpoint("http://localhost:8000/v1/");
  CHECK(ep.scheme_host_port == "http://localhost:8000");
  CHECK(ep.base_path == "/v1");
  ep = parse_endpoint("https://api.example.com");
  CHECK(ep.scheme_host_port == "https://api.example.com");
  CHECK(ep.base_path.empty());
  CHECK_THROWS_AS(parse_endpoint("localhost:8000"), std::invalid_argument);
  CHECK_THROWS_AS(parse_endpoint("ftp://x"), std::invalid_argument);
}

TEST_CASE("native predict request body is byte-stable") {
  const BackendConfig cfg = config_for(BackendKind::NativeHttp, "http://localhost:1");
  const auto req = build_predict_request(tiny(), "click the red box", ModalityTag::Icon, cfg);
  CHECK(req.method == "POST");
  CHECK(req.path == "/v1/predict");
  CHECK(req.content_type == "application/json");
  CHECK(req.body == build_predict_request(tiny(), "click the red box", ModalityTag::Icon, cfg).body);
  CHECK(req.body + "\n" == support::golden("native_predict_request.json", req.body + "\n"));
  // The committed golden, read independently of the builder.
  const json g = json::parse(support::read_text(support::fixture("golden/native_predict_request.json")));
  CHECK(g.size() == 3);
  CHECK(g["instruction"] == "click the red box");
  CHECK(g["modality"] == "icon");
  const auto png = base64_decode(g["image"].get<std::string>());
  REQUIRE(png.has_value());
  CHECK(decode_png(*png) == tiny());
}

TEST_CASE("native select request body is byte-stable") {
  const BackendConfig cfg = config_for(BackendKind::NativeHttp, "http://localhost:1");
  const auto req = build_select_request(tiny(), "click the red box", {2.5, 3}, {6, 1.25}, cfg);
  CHECK(req.path == "/v1/select");
  const json doc = json::parse(req.body);
  CHECK(doc["candidates"][0] == json{{"id", "text"}, {"x", 2.5}, {"y", 3.0}});
  CHECK(doc["candidates"][1] == json{{"id", "icon"}, {"x", 6.0}, {"y", 1.25}});
  CHECK(req.body + "\n" == support::golden("native_select_request.json", req.body + "\n"));
}

TEST_CASE("chat request body is byte-stable") {
  const BackendConfig cfg = config_for(BackendKind::OpenAiCompat, "http://localhost:1/v1");
  const std::string prompt = render_prompt(cfg.prompts.text, "click the red box");
  const auto req = build_chat_request(tiny(), prompt, cfg);
  CHECK(req.path == "/chat/completions");
  const json doc = json::parse(req.body);
  CHECK(doc["model"] == "test-model");
  CHECK(doc["temperature"] == 0);
  CHECK(doc["messages"][0]["content"][0]["text"] == prompt);
  const std::string url = doc["messages"][0]["content"][1]["image_url"]["url"];
  CHECK(url.rfind("data:image/png;base64,", 0) == 0);
  CHECK(req.body == build_chat_request(tiny(), prompt, cfg).body);
  CHECK(req.body + "\n" == support::golden("openai_chat_request.json", req.body + "\n"));
}

TEST_CASE("response parsers reject malformed bodies") {
  CHECK_THROWS_AS(parse_predict_response("[]"), ProtocolError);
  CHECK_THROWS_AS(parse_predict_response(R"({"x": "1", "y": 2, "convention": "pixels"})"),
                  ProtocolError);
  CHECK(parse_predict_response(R"({"x": 1, "y": 2.5, "convention": "norm1000"})").point ==
        Point{1, 2.5});
  CHECK_THROWS_AS(parse_select_response(R"({"choice": 1})"), ProtocolError);
  CHECK_THROWS_AS(parse_chat_response(R"({"choices": [{"message": {}}]})"), ProtocolError);
  CHECK_THROWS_AS(parse_health_response("not json"), ProtocolError);
}

TEST_CASE("protocol corpus against the stub server") {
  StubServer stub;
  const json doc = corpus();
  const Image image({doc["image"][0].get<int>(), doc["image"][1].get<int>()});
  const Region region{doc["region"][0].get<int>(), doc["region"][1].get<int>(),
                      doc["region"][2].get<int>(), doc["region"][3].get<int>()};
  REQUIRE(doc["cases"].size() >= 20);
  for (const auto& c : doc["cases"]) {
    const std::string name = c["name"];
    CAPTURE(name);
    std::vector<Canned> replies;
    for (const auto& r : c["responses"]) {
      replies.push_back({r["status"].get<int>(),
                         r.contains("text") ? r["text"].get<std::string>() : r["body"].dump()});
    }
    stub.reply(replies);
    BackendConfig cfg = config_for(parse_backend_kind(c["kind"].get<std::string>()), stub.url());
    if (c.contains("convention")) cfg.convention = parse_convention(c["convention"].get<std::string>());
    HttpBackend backend(cfg);
    const json& expect = c["expect"];
    const std::string op = c["op"];
    auto run = [&]() -> json {
      if (op == "predict") {
        const Prediction p = backend.predict(image, region, "click it", ModalityTag::Text);
        return {{"point", {p.point.x, p.point.y}}, {"raw", p.raw_text}};
      }
      if (op == "select") {
        const Choice ch = backend.select(image, "click it", {10, 10}, {150, 80});
        return {{"choice", to_string(ch.candidate)}, {"raw", ch.raw_text}};
      }
      return {{"model", backend.health()}};
    };
    if (expect.contains("error")) {
      const std::string kind = expect["error"];
      if (kind == "protocol") CHECK_THROWS_AS(run(), ProtocolError);
      if (kind == "unavailable") CHECK_THROWS_AS(run(), BackendUnavailable);
      if (kind == "parse") CHECK_THROWS_AS(run(), ParseFailure);
    } else {
      json got;
      REQUIRE_NOTHROW(got = run());
      for (const auto& [key, value] : expect.items()) {
        if (key == "point") {
          CHECK(got["point"][0].get<double>() == doctest::Approx(value[0].get<double>()));
          CHECK(got["point"][1].get<double>() == doctest::Approx(value[1].get<double>()));
        } else {
          CHECK(got[key] == value);
        }
      }
    }
    CHECK(stub.received().size() == c["calls"].get<std::size_t>());
  }
}

TEST_CASE("stub receives exactly the built request") {
  StubServer stub;
  stub.reply({{200, R"J({"x": 1, "y": 2, "convention": "pixels", "raw": "(1,2)"})J"}});
  BackendConfig cfg = config_for(BackendKind::NativeHttp, stub.url("/base/"));
  cfg.api_token = "secret-token";
  HttpBackend backend(cfg);
  const Image image = tiny();
  const Region region{2, 1, 4, 4};
  const Prediction p = backend.predict(image, region, "click the red box", ModalityTag::Icon);
  CHECK(p.point == Point{1, 2});
  const auto got = stub.received();
  REQUIRE(got.size() == 1);
  CHECK(got[0].method == "POST");
  CHECK(got[0].path == "/base/v1/predict");
  CHECK(got[0].authorization == "Bearer secret-token");
  CHECK(got[0].body ==
        build_predict_request(image.crop(region), "click the red box", ModalityTag::Icon, cfg).body);
}

TEST_CASE("select sends the annotated full image") {
  StubServer stub;
  stub.reply({{200, R"({"choices": [{"message": {"content": "A"}}]})"}});
  BackendConfig cfg = config_for(BackendKind::OpenAiCompat, stub.url("/v1"));
  HttpBackend backend(cfg);
  Image image({300, 200});
  draw::fill_rect(image, {10, 10, 20, 20}, {0, 0, 0});
  const Choice choice = backend.select(image, "pick", {50, 50}, {250, 150});
  CHECK(choice.candidate == Candidate::Text);
  const auto got = stub.received();
  REQUIRE(got.size() == 1);
  CHECK(got[0].path == "/v1/chat/completions");
  const std::string prompt = render_select_prompt(cfg.prompts.select, "pick", {50, 50}, {250, 150});
  CHECK(got[0].body ==
        build_chat_request(annotate_candidates(image, {50, 50}, {250, 150}), prompt, cfg).body);
}

TEST_CASE("unreachable endpoint is unavailable after every retry") {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  BackendConfig cfg =
      config_for(BackendKind::NativeHttp, "http://127.0.0.1:" + std::to_string(port));
  cfg.timeout = std::chrono::milliseconds(500);
  HttpBackend backend(cfg);
  const Image image({10, 10});
  try {
    backend.predict(image, image.bounds(), "x", ModalityTag::Text);
    FAIL("expected BackendUnavailable");
  } catch (const BackendUnavailable& e) {
    CHECK(std::string(e.what()).find("3 attempt") != std::string::npos);
  }
  CHECK_THROWS_AS(backend.health(), BackendUnavailable);
}

TEST_CASE("health is native-only") {
  HttpBackend backend(config_for(BackendKind::OpenAiCompat, "http://127.0.0.1:1"));
  CHECK_THROWS_AS(backend.health(), std::logic_error);
}
