#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "surveyor/types.hpp"

namespace surveyor::llm {

enum class ProviderKind { mock, ollama, openai, openrouter };

const char* provider_kind_name(ProviderKind kind);
ProviderKind provider_kind_from_name(const std::string& name);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::mock;
  std::string base_url;   // e.g. http://localhost:11434/v1 or https://api.openai.com/v1
  std::string api_key;    // never logged, never serialized
  std::string model_id;
  double timeout_s = 60.0;
  int max_retries = 3;
  std::uint64_t mock_seed = 0x5eed;

  /// base_url required for all non-mock kinds; api_key required for hosted
  /// kinds (openai, openrouter); model_id required for non-mock kinds.
  void validate() const;
};

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::optional<int> max_tokens;
};

struct ChatResponse {
  std::string text;
  std::string model_id;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
};

/// Scripting hooks for the mock provider. With an empty script the mock is
/// a pure function of (seed, request): identical requests always produce
/// identical replies.
struct MockScript {
  /// Replies consumed first, in order (for reprompt sequences).
  std::deque<std::string> fifo;
  /// (needle, reply): a request whose rendered prompt contains the needle
  /// always gets the reply. Checked after the fifo, before the synthesizer.
  std::vector<std::pair<std::string, std::string>> keyed;
  /// Reply with the last user message verbatim (context-echo tests).
  bool echo_user = false;
  /// Make the synthesizer plant one hallucinated \cite key in the first
  /// outline section's draft, exercising citation validation downstream.
  bool plant_bad_citation = true;
};

/// The citation key the mock synthesizer plants when asked to.
inline constexpr const char* kMockHallucinatedKey = "mock.hallucinated.ref";

struct GatewayHooks {
  /// Backoff sleep; tests inject a no-op. Defaults to a real sleep.
  std::function<void(double seconds)> sleep;
};

/// Uniform chat-completion + embedding client. All non-mock kinds speak the
/// same JSON wire shapes (model/messages/temperature -> choices[0].message
/// .content; input -> data[i].embedding). Transient failures (timeouts,
/// HTTP 429/5xx) are retried with exponential backoff (base 1 s, cap 30 s);
/// auth failures and malformed payloads are never retried.
///
/// Stateless per call and safe for concurrent use; at most `max_in_flight`
/// provider calls run at once.
class Gateway {
 public:
  explicit Gateway(ProviderConfig config, unsigned max_in_flight = 4,
                   GatewayHooks hooks = {});
  ~Gateway();

  ChatResponse complete(const ChatRequest& request);

  /// One 768-dim vector per text, order-preserving. Empty input returns an
  /// empty list without any provider call.
  std::vector<Embedding> embed(const std::vector<std::string>& texts);

  const ProviderConfig& config() const { return config_; }

  /// Script access; only valid for the mock kind.
  MockScript& mock_script();

 private:
  struct Impl;
  ProviderConfig config_;
  std::unique_ptr<Impl> impl_;
};

/// Deterministic 768-dim encoder used by the mock provider: a seeded hash
/// of the text expanded to a unit vector. All outputs share a common base
/// direction so pairwise similarities sit near 0.81 (above the default 0.7
/// retrieval threshold) while ranking still varies per text.
Embedding mock_embedding(std::uint64_t seed, const std::string& text);

/// Deterministic reply synthesizer behind the mock provider.
std::string mock_chat_reply(std::uint64_t seed, const ChatRequest& request,
                            bool plant_bad_citation);

}  // namespace surveyor::llm
