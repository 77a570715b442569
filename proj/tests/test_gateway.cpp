#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "surveyor/errors.hpp"
#include "surveyor/llm_gateway.hpp"
#include "surveyor/log.hpp"
#include "surveyor/vector_store.hpp"

using namespace surveyor;
using namespace surveyor::llm;
using nlohmann::json;

namespace {

ProviderConfig mock_config() {
  ProviderConfig cfg;
  cfg.kind = ProviderKind::mock;
  cfg.model_id = "mock-model";
  return cfg;
}

ChatRequest simple_request(const std::string& text) {
  ChatRequest req;
  req.messages = {{"user", text}};
  return req;
}

/// In-process HTTP server whose handler is swappable per test.
class ScriptedServer {
 public:
  ScriptedServer() {
    server_.Post(R"(/v1/.*)", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      handle(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~ScriptedServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
  }

  std::function<void(const httplib::Request&, httplib::Response&)> handler;
  std::atomic<int> hits{0};

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    ++hits;
    if (handler) handler(req, res);
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

ProviderConfig http_config(const ScriptedServer& server, int max_retries = 3) {
  ProviderConfig cfg;
  cfg.kind = ProviderKind::openai;
  cfg.base_url = server.base_url();
  cfg.api_key = "test-key";
  cfg.model_id = "test-model";
  cfg.timeout_s = 5.0;
  cfg.max_retries = max_retries;
  return cfg;
}

GatewayHooks counting_sleep(std::vector<double>* delays) {
  GatewayHooks hooks;
  hooks.sleep = [delays](double s) { delays->push_back(s); };
  return hooks;
}

std::string chat_body(const std::string& text) {
  json j = {{"model", "test-model"},
            {"choices", {{{"message", {{"role", "assistant"},
                                       {"content", text}}}}}}};
  return j.dump();
}

}  // namespace

TEST_CASE("provider config validation") {
  ProviderConfig mock = mock_config();
  CHECK_NOTHROW(mock.validate());

  ProviderConfig hosted;
  hosted.kind = ProviderKind::openai;
  CHECK_THROWS_AS(hosted.validate(), ConfigError);  // no base_url
  hosted.base_url = "https://api.example.com/v1";
  CHECK_THROWS_AS(hosted.validate(), ConfigError);  // no model
  hosted.model_id = "gpt-test";
  CHECK_THROWS_AS(hosted.validate(), ConfigError);  // no api key
  hosted.api_key = "k";
  CHECK_NOTHROW(hosted.validate());

  ProviderConfig local;
  local.kind = ProviderKind::ollama;
  local.base_url = "http://localhost:11434/v1";
  local.model_id = "llama";
  CHECK_NOTHROW(local.validate());  // local providers need no key
}

TEST_CASE("mock keyed script replies byte-identically") {
  Gateway gw(mock_config());
  gw.mock_script().keyed.push_back({"ping", "pong exact bytes"});
  auto a = gw.complete(simple_request("please ping now"));
  auto b = gw.complete(simple_request("please ping now"));
  CHECK(a.text == "pong exact bytes");
  CHECK(a.text == b.text);
}

TEST_CASE("mock fifo script drives reprompt sequences") {
  Gateway gw(mock_config());
  gw.mock_script().fifo = {"first", "second"};
  CHECK(gw.complete(simple_request("x")).text == "first");
  CHECK(gw.complete(simple_request("x")).text == "second");
}

TEST_CASE("mock default synthesizer is a pure function of request") {
  Gateway gw(mock_config());
  auto a = gw.complete(simple_request("anything unusual"));
  auto b = gw.complete(simple_request("anything unusual"));
  CHECK(a.text == b.text);
  auto c = gw.complete(simple_request("different"));
  CHECK(c.text != a.text);
}

TEST_CASE("chat request validation") {
  Gateway gw(mock_config());
  ChatRequest empty;
  CHECK_THROWS_AS(gw.complete(empty), ArgumentError);
  ChatRequest neg = simple_request("x");
  neg.temperature = -0.5;
  CHECK_THROWS_AS(gw.complete(neg), ArgumentError);
}

TEST_CASE("mock embeddings: deterministic, 768-dim, order-preserving") {
  Gateway gw(mock_config());
  CHECK(gw.embed({}).empty());

  auto twice_a = gw.embed({"same text"});
  auto twice_b = gw.embed({"same text"});
  CHECK(twice_a == twice_b);

  auto three = gw.embed({"alpha", "beta", "gamma"});
  REQUIRE(three.size() == 3);
  for (const auto& v : three) CHECK(v.size() == kEmbeddingDim);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      CHECK(store::cosine_similarity(three[i], three[j]) < 1.0 - 1e-6);
    }
  }
  CHECK_THROWS_AS(gw.embed({"ok", ""}), ArgumentError);
}

TEST_CASE("mock embedding pairs clear the default retrieval threshold") {
  // geometry contract behind offline end-to-end runs
  Gateway gw(mock_config());
  auto vs = gw.embed({"topic one", "entirely different abstract", "third text"});
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      double sim = store::cosine_similarity(vs[i], vs[j]);
      CHECK(sim > 0.7);
      CHECK(sim < 0.95);
    }
  }
}

TEST_CASE("transient HTTP failures retry and then succeed") {
  ScriptedServer server;
  std::atomic<int> attempt{0};
  server.handler = [&](const httplib::Request&, httplib::Response& res) {
    int n = ++attempt;
    if (n <= 2) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
    } else {
      res.status = 200;
      res.set_content(chat_body("recovered"), "application/json");
    }
  };
  std::vector<double> delays;
  Gateway gw(http_config(server), 4, counting_sleep(&delays));
  auto resp = gw.complete(simple_request("hello"));
  CHECK(resp.text == "recovered");
  CHECK(server.hits.load() == 3);
  REQUIRE(delays.size() == 2);  // exponential: 1s then 2s
  CHECK(delays[0] == doctest::Approx(1.0));
  CHECK(delays[1] == doctest::Approx(2.0));
}

TEST_CASE("auth failures never retry") {
  ScriptedServer server;
  server.handler = [&](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
    res.set_content("bad key", "text/plain");
  };
  std::vector<double> delays;
  Gateway gw(http_config(server), 4, counting_sleep(&delays));
  CHECK_THROWS_AS(gw.complete(simple_request("x")), CredentialError);
  CHECK(server.hits.load() == 1);
  CHECK(delays.empty());
}

TEST_CASE("retry budget exhaustion raises provider-unavailable") {
  ScriptedServer server;
  server.handler = [&](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
  };
  std::vector<double> delays;
  Gateway gw(http_config(server, 2), 4, counting_sleep(&delays));
  CHECK_THROWS_AS(gw.complete(simple_request("x")), ProviderUnavailableError);
  CHECK(server.hits.load() == 3);  // 1 + max_retries
  CHECK(delays.size() == 2);
}

TEST_CASE("malformed payloads are protocol errors without retries") {
  ScriptedServer server;
  server.handler = [&](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content("{not json", "application/json");
  };
  std::vector<double> delays;
  Gateway gw(http_config(server), 4, counting_sleep(&delays));
  CHECK_THROWS_AS(gw.complete(simple_request("x")), ProtocolError);
  CHECK(server.hits.load() == 1);
  CHECK(delays.empty());
}

TEST_CASE("embedding wire shape: index reordering and dimension checks") {
  ScriptedServer server;
  server.handler = [&](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body);
    REQUIRE(body["input"].size() == 2);
    json v0(std::vector<float>(kEmbeddingDim, 0.5f));
    json v1(std::vector<float>(kEmbeddingDim, 0.25f));
    json j = {{"data", {{{"index", 1}, {"embedding", v1}},
                        {{"index", 0}, {"embedding", v0}}}}};
    res.status = 200;
    res.set_content(j.dump(), "application/json");
  };
  Gateway gw(http_config(server));
  auto out = gw.embed({"first", "second"});
  REQUIRE(out.size() == 2);
  CHECK(out[0][0] == doctest::Approx(0.5f));
  CHECK(out[1][0] == doctest::Approx(0.25f));

  server.handler = [&](const httplib::Request&, httplib::Response& res) {
    json j = {{"data", {{{"index", 0}, {"embedding", {1.0, 2.0}}}}}};
    res.status = 200;
    res.set_content(j.dump(), "application/json");
  };
  CHECK_THROWS_AS(gw.embed({"first"}), ProtocolError);
}

TEST_CASE("chat wire carries model, messages, and temperature") {
  ScriptedServer server;
  json seen;
  server.handler = [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.status = 200;
    res.set_content(chat_body("ok"), "application/json");
  };
  Gateway gw(http_config(server));
  ChatRequest req;
  req.messages = {{"system", "be terse"}, {"user", "question"}};
  req.temperature = 0.0;
  req.max_tokens = 512;
  gw.complete(req);
  CHECK(seen["model"] == "test-model");
  CHECK(seen["temperature"] == 0.0);
  CHECK(seen["max_tokens"] == 512);
  REQUIRE(seen["messages"].size() == 2);
  CHECK(seen["messages"][0]["role"] == "system");
  CHECK(seen["messages"][1]["content"] == "question");
}
