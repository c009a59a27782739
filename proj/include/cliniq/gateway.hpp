#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cliniq/error.hpp"

namespace cliniq::gw {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  int64_t max_output_tokens = 512;
  double temperature = 0.0;
};

struct ChatResponse {
  std::string content;
  int64_t input_token_estimate = 0;
  int64_t output_token_estimate = 0;
  double latency_ms = 0.0;
  std::string endpoint_id;
};

enum class EndpointKind { http_chat, scripted_stub };

// What a stub does with a prompt no script rule matches.
enum class StubFallback { error, fixed, echo };

struct EndpointConfig {
  std::string id;
  EndpointKind kind = EndpointKind::scripted_stub;
  std::string base_url;        // http_chat: full URL of the completions route
  std::string credential_env;  // env var holding the bearer token; may be empty
  int64_t timeout_ms = 30000;
  int64_t max_retries = 2;
  std::optional<int64_t> budget_tokens;  // total cap across all calls
  std::string script_path;               // scripted_stub: rule file
  StubFallback fallback = StubFallback::error;
  std::string fallback_text;  // used when fallback == fixed
};

// One replay rule. "exact" and "hash" match against the last user message;
// "ordinal" matches the 1-based call number on this endpoint.
struct StubRule {
  std::string match;  // "exact" | "hash" | "ordinal"
  std::string key;    // exact text, 16-hex-digit fnv1a64, or decimal ordinal
  std::string reply;
};

struct ScriptedStub {
  std::vector<StubRule> rules;
  StubFallback fallback = StubFallback::error;
  std::string fallback_text;
  int64_t calls_seen = 0;  // drives ordinal matching
};

// Deterministic token count used for budgeting: framework tokenizer length,
// documented as an approximation of any provider's own count.
int64_t estimate_tokens(const std::string& text);

// Parses a line-delimited JSON rule file: {"match","key","reply"} per line.
// Malformed lines are reported with their 1-based line number.
ScriptedStub load_stub_script(const std::string& path);

// Append-only line-JSON trace of every exchange. Credential values never
// appear: only the env var *name* is ever recorded.
class Journal {
 public:
  explicit Journal(std::string path) : path_(std::move(path)) {}
  void append(const std::string& json_line);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::mutex mu_;
};

// Uniform client over remote chat endpoints and scripted stubs, with retry,
// token budgeting, and journaling. Thread-safe; budget reservation is atomic
// under a per-endpoint lock, so a configured cap is never exceeded even when
// calls race.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Journal> journal = nullptr)
      : journal_(std::move(journal)) {}

  ChatResponse complete(const EndpointConfig& endpoint, const ChatRequest& request);

  // Tokens recorded against the endpoint's budget so far.
  int64_t budget_spent(const std::string& endpoint_id);

 private:
  struct EndpointState {
    int64_t spent = 0;
    std::optional<ScriptedStub> stub;
  };

  ChatResponse complete_stub(const EndpointConfig& endpoint, const ChatRequest& request,
                             EndpointState& state);
  ChatResponse complete_http(const EndpointConfig& endpoint, const ChatRequest& request,
                             int64_t& attempts_out);

  EndpointState& state_for(const EndpointConfig& endpoint);
  void journal_exchange(const EndpointConfig& endpoint, const ChatRequest& request,
                        const ChatResponse* response, const std::string& error,
                        int64_t attempts);

  std::shared_ptr<Journal> journal_;
  std::mutex mu_;
  std::map<std::string, EndpointState> states_;
};

}  // namespace cliniq::gw
