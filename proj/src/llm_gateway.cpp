#include "surveyor/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <regex>
#include <semaphore>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "surveyor/errors.hpp"
#include "surveyor/log.hpp"
#include "surveyor/util.hpp"

namespace surveyor::llm {

using nlohmann::json;

const char* provider_kind_name(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::mock:
      return "mock";
    case ProviderKind::ollama:
      return "ollama";
    case ProviderKind::openai:
      return "openai";
    case ProviderKind::openrouter:
      return "openrouter";
  }
  return "?";
}

ProviderKind provider_kind_from_name(const std::string& name) {
  if (name == "mock") return ProviderKind::mock;
  if (name == "ollama") return ProviderKind::ollama;
  if (name == "openai") return ProviderKind::openai;
  if (name == "openrouter") return ProviderKind::openrouter;
  throw ConfigError("unknown provider kind: " + name +
                    " (expected mock, ollama, openai, or openrouter)");
}

void ProviderConfig::validate() const {
  if (kind == ProviderKind::mock) return;
  if (base_url.empty()) {
    throw ConfigError("provider base_url is required for non-mock providers");
  }
  if (model_id.empty()) {
    throw ConfigError("provider model_id is required for non-mock providers");
  }
  bool hosted = kind == ProviderKind::openai || kind == ProviderKind::openrouter;
  if (hosted && api_key.empty()) {
    throw ConfigError("api key is required for hosted providers "
                      "(set it via environment variable)");
  }
  if (timeout_s <= 0) throw ConfigError("provider timeout must be positive");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

// ---------------------------------------------------------------------------
// deterministic mock
// ---------------------------------------------------------------------------

namespace {

Embedding expand_unit(std::uint64_t seed) {
  std::uint64_t state = seed;
  Embedding v(kEmbeddingDim);
  double norm = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    double x = util::unit_double(state) * 2.0 - 1.0;
    v[i] = static_cast<float>(x);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    v[0] = 1.0f;
    norm = 1.0;
  }
  for (auto& c : v) c = static_cast<float>(c / norm);
  return v;
}

const char* kFillerWords[] = {
    "retrieval",  "synthesis",   "survey",     "evidence",   "methods",
    "analysis",   "coverage",    "sections",   "citations",  "topics",
    "models",     "systems",     "evaluation", "pipelines",  "planning",
    "language",   "research",    "semantic",   "corpus",     "findings",
    "directions", "challenges",  "frameworks", "grounding",  "automated",
    "generation", "literature",  "approaches", "benchmarks", "alignment"};

/// Exactly `words` whitespace-delimited tokens of deterministic filler prose.
std::string filler_prose(std::uint64_t seed, std::size_t words) {
  std::uint64_t state = seed;
  std::string out;
  std::size_t emitted = 0;
  while (emitted < words) {
    std::size_t sentence = 6 + util::splitmix64(state) % 9;
    sentence = std::min(sentence, words - emitted);
    for (std::size_t i = 0; i < sentence; ++i) {
      std::string w =
          kFillerWords[util::splitmix64(state) % std::size(kFillerWords)];
      if (i == 0) w[0] = static_cast<char>(std::toupper(w[0]));
      if (!out.empty()) out += ' ';
      out += w;
      ++emitted;
    }
    out += '.';
  }
  return out;
}

std::string joined_prompt(const ChatRequest& request) {
  std::string all;
  for (const auto& m : request.messages) {
    all += m.content;
    all += '\n';
  }
  return all;
}

std::vector<std::string> bracketed_keys(const std::string& prompt) {
  std::vector<std::string> keys;
  static const std::regex re(R"(^\[([^\]\s]+)\])");
  std::istringstream in(prompt);
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_search(line, m, re)) keys.push_back(m[1]);
  }
  return keys;
}

std::string capture_after(const std::string& prompt, const std::regex& re) {
  std::smatch m;
  if (std::regex_search(prompt, m, re)) return util::trim(m[1].str());
  return {};
}

const char* kOutlinePool[] = {
    "Introduction",
    "Background and Foundations",
    "Core Methods",
    "Applications",
    "Evaluation and Benchmarks",
    "Open Challenges",
    "Emerging Directions",
    "Discussion"};

std::string synth_outline(const std::string& prompt) {
  static const std::regex re(R"(exactly (\d+) section)");
  std::string m_text = capture_after(prompt, re);
  std::size_t m = m_text.empty() ? 8 : static_cast<std::size_t>(std::stoul(m_text));
  std::ostringstream out;
  for (std::size_t i = 0; i < m; ++i) {
    out << (i + 1) << ". ";
    if (i < std::size(kOutlinePool)) {
      out << kOutlinePool[i];
    } else {
      out << "Further Topics " << (i + 1 - std::size(kOutlinePool));
    }
    out << "\n";
  }
  return out.str();
}

std::string synth_section(std::uint64_t seed, const std::string& prompt,
                          bool plant_bad_citation) {
  static const std::regex section_re(R"(Section title:[ \t]*([^\n]+))");
  std::string section = capture_after(prompt, section_re);
  auto keys = bracketed_keys(prompt);

  std::uint64_t state = seed ^ util::fnv1a64(section);
  std::ostringstream out;
  out << "This section reviews " << (section.empty() ? "the area" : section)
      << " in the context of the survey topic. ";
  out << filler_prose(state, 40);
  std::size_t cite_count = std::min<std::size_t>(keys.size(), 3);
  for (std::size_t i = 0; i < cite_count; ++i) {
    out << " Prior work established key results \\cite{" << keys[i] << "}. ";
    out << filler_prose(state + i + 1, 25);
  }
  if (keys.size() >= 5) {
    out << " Related efforts \\cite{" << keys[3] << "," << keys[4]
        << "} broaden the picture. ";
  }
  if (plant_bad_citation && section == kOutlinePool[0]) {
    out << " An unverified claim \\cite{" << kMockHallucinatedKey
        << "} rounds out the discussion. ";
  }
  out << filler_prose(state + 99, 30);
  return out.str();
}

std::string synth_judge(std::uint64_t seed, const std::string& prompt) {
  std::uint64_t h = seed ^ util::fnv1a64(prompt);
  int c = 3 + static_cast<int>(h % 3);
  int s = 3 + static_cast<int>((h >> 8) % 3);
  int r = 3 + static_cast<int>((h >> 16) % 3);
  std::ostringstream out;
  out << "Coverage: " << c << "\nStructure: " << s << "\nRelevance: " << r << "\n";
  return out.str();
}

}  // namespace

Embedding mock_embedding(std::uint64_t seed, const std::string& text) {
  // 0.9 * base + sqrt(1 - 0.81) * noise(text), renormalized: all pairs land
  // near cos = 0.81 while per-text noise keeps the ranking distinct.
  Embedding base = expand_unit(seed ^ 0xB453u);
  Embedding noise = expand_unit(seed ^ util::fnv1a64(text));
  Embedding v(kEmbeddingDim);
  double norm = 0.0;
  const double a = 0.9;
  const double b = std::sqrt(1.0 - a * a);
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    double x = a * base[i] + b * noise[i];
    v[i] = static_cast<float>(x);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& c : v) c = static_cast<float>(c / norm);
  return v;
}

std::string mock_chat_reply(std::uint64_t seed, const ChatRequest& request,
                            bool plant_bad_citation) {
  std::string prompt = joined_prompt(request);
  if (prompt.find("Coverage: <integer>") != std::string::npos) {
    return synth_judge(seed, prompt);
  }
  if (prompt.find("numbered list of exactly") != std::string::npos) {
    return synth_outline(prompt);
  }
  if (prompt.find("formal academic tone") != std::string::npos) {
    return synth_section(seed, prompt, plant_bad_citation);
  }
  if (prompt.find("250 to 300 words") != std::string::npos) {
    return filler_prose(seed ^ util::fnv1a64("abstract"), 275);
  }
  if (prompt.find("400 to 500 words") != std::string::npos) {
    return filler_prose(seed ^ util::fnv1a64("conclusion"), 450);
  }
  if (prompt.find("key contributions") != std::string::npos) {
    std::uint64_t state = seed ^ util::fnv1a64(prompt);
    return "Key contributions, shared methodology, contrasting perspectives "
           "and open limitations across the sources: " +
           filler_prose(state, 60);
  }
  std::ostringstream out;
  out << "mock-reply-" << std::hex << (seed ^ util::fnv1a64(prompt));
  return out.str();
}

// ---------------------------------------------------------------------------
// gateway
// ---------------------------------------------------------------------------

struct Gateway::Impl {
  MockScript script;
  std::mutex script_mutex;
  std::counting_semaphore<> in_flight;
  GatewayHooks hooks;

  explicit Impl(unsigned max_in_flight, GatewayHooks h)
      : in_flight(static_cast<std::ptrdiff_t>(std::max(1u, max_in_flight))),
        hooks(std::move(h)) {
    if (!hooks.sleep) {
      hooks.sleep = [](double seconds) {
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
      };
    }
  }
};

namespace {

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<>& sem) : sem_(sem) {
    sem_.acquire();
  }
  ~SemaphoreGuard() { sem_.release(); }

 private:
  std::counting_semaphore<>& sem_;
};

struct HttpOutcome {
  bool ok = false;
  bool retryable = false;
  std::string body;
  std::string error;  // description when !ok
  int status = 0;
};

HttpOutcome post_json(const ProviderConfig& cfg, const std::string& path,
                      const json& body) {
  util::UrlParts url = util::parse_url(cfg.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(std::chrono::duration<double>(cfg.timeout_s));
  client.set_read_timeout(std::chrono::duration<double>(cfg.timeout_s));
  client.set_write_timeout(std::chrono::duration<double>(cfg.timeout_s));
  httplib::Headers headers;
  if (!cfg.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + cfg.api_key);
  }

  auto res = client.Post(url.path + path, headers, body.dump(),
                         "application/json");
  HttpOutcome out;
  if (!res) {
    out.retryable = true;
    out.error = "connection failure (" + httplib::to_string(res.error()) + ")";
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  if (res->status == 200) {
    out.ok = true;
  } else if (res->status == 401 || res->status == 403) {
    throw CredentialError("provider rejected credentials (HTTP " +
                          std::to_string(res->status) + ")");
  } else if (res->status == 429 || res->status >= 500) {
    out.retryable = true;
    out.error = "HTTP " + std::to_string(res->status);
  } else {
    throw ProtocolError("unexpected provider status HTTP " +
                        std::to_string(res->status) + ": " +
                        res->body.substr(0, 200));
  }
  return out;
}

json request_with_retries(const ProviderConfig& cfg, const GatewayHooks& hooks,
                          const std::string& path, const json& body) {
  for (int attempt = 0;; ++attempt) {
    HttpOutcome outcome = post_json(cfg, path, body);
    if (outcome.ok) {
      json parsed = json::parse(outcome.body, nullptr, false);
      if (parsed.is_discarded()) {
        throw ProtocolError("provider returned unparseable payload");
      }
      return parsed;
    }
    if (attempt >= cfg.max_retries) {
      throw ProviderUnavailableError("provider unavailable after " +
                                     std::to_string(attempt + 1) +
                                     " attempts: " + outcome.error);
    }
    double delay = std::min(std::ldexp(1.0, attempt), 30.0);
    log::warn("provider transient failure (" + outcome.error + "); retry " +
              std::to_string(attempt + 1) + "/" +
              std::to_string(cfg.max_retries) + " in " +
              std::to_string(delay) + "s");
    hooks.sleep(delay);
  }
}

}  // namespace

Gateway::Gateway(ProviderConfig config, unsigned max_in_flight,
                 GatewayHooks hooks)
    : config_(std::move(config)),
      impl_(std::make_unique<Impl>(max_in_flight, std::move(hooks))) {
  config_.validate();
}

Gateway::~Gateway() = default;

MockScript& Gateway::mock_script() {
  if (config_.kind != ProviderKind::mock) {
    throw ArgumentError("mock_script() is only available on the mock provider");
  }
  return impl_->script;
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw ArgumentError("chat request needs at least one message");
  }
  if (request.temperature < 0) {
    throw ArgumentError("temperature must be >= 0");
  }

  SemaphoreGuard guard(impl_->in_flight);
  if (config_.kind == ProviderKind::mock) {
    ChatResponse resp;
    resp.model_id = config_.model_id.empty() ? "mock" : config_.model_id;
    {
      std::lock_guard<std::mutex> lock(impl_->script_mutex);
      MockScript& s = impl_->script;
      if (!s.fifo.empty()) {
        resp.text = s.fifo.front();
        s.fifo.pop_front();
        return resp;
      }
      if (s.echo_user) {
        for (auto it = request.messages.rbegin(); it != request.messages.rend();
             ++it) {
          if (it->role == "user") {
            resp.text = it->content;
            return resp;
          }
        }
      }
      std::string prompt = [&] {
        std::string all;
        for (const auto& m : request.messages) all += m.content + "\n";
        return all;
      }();
      for (const auto& [needle, reply] : s.keyed) {
        if (prompt.find(needle) != std::string::npos) {
          resp.text = reply;
          return resp;
        }
      }
      resp.text = mock_chat_reply(config_.mock_seed, request,
                                  s.plant_bad_citation);
    }
    return resp;
  }

  json body = {
      {"model", config_.model_id},
      {"temperature", request.temperature},
  };
  body["messages"] = json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;

  json parsed = request_with_retries(config_, impl_->hooks,
                                     "/chat/completions", body);
  try {
    ChatResponse resp;
    resp.text = parsed.at("choices").at(0).at("message").at("content")
                    .get<std::string>();
    resp.model_id = parsed.value("model", config_.model_id);
    if (parsed.contains("usage")) {
      const auto& u = parsed["usage"];
      if (u.contains("prompt_tokens")) resp.prompt_tokens = u["prompt_tokens"];
      if (u.contains("completion_tokens")) {
        resp.completion_tokens = u["completion_tokens"];
      }
    }
    return resp;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("chat payload missing expected fields: ") +
                        e.what());
  }
}

std::vector<Embedding> Gateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  for (const auto& t : texts) {
    if (t.empty()) throw ArgumentError("cannot embed empty text");
  }

  SemaphoreGuard guard(impl_->in_flight);
  if (config_.kind == ProviderKind::mock) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      out.push_back(mock_embedding(config_.mock_seed, t));
    }
    return out;
  }

  json body = {{"model", config_.model_id}, {"input", texts}};
  json parsed = request_with_retries(config_, impl_->hooks, "/embeddings", body);
  try {
    const auto& data = parsed.at("data");
    std::vector<Embedding> out(texts.size());
    std::vector<bool> seen(texts.size(), false);
    std::size_t fallback_index = 0;
    for (const auto& item : data) {
      std::size_t idx = item.contains("index")
                            ? item["index"].get<std::size_t>()
                            : fallback_index;
      ++fallback_index;
      if (idx >= out.size()) {
        throw ProtocolError("embedding index out of range");
      }
      out[idx] = item.at("embedding").get<Embedding>();
      seen[idx] = true;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!seen[i]) throw ProtocolError("provider omitted an embedding");
      if (out[i].size() != kEmbeddingDim) {
        throw ProtocolError("provider returned a " +
                            std::to_string(out[i].size()) +
                            "-dim embedding, expected " +
                            std::to_string(kEmbeddingDim));
      }
    }
    return out;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("embedding payload missing fields: ") +
                        e.what());
  }
}

}  // namespace surveyor::llm
