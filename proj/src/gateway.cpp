#include "cliniq/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "cliniq/text.hpp"
#include "json.hpp"

#include "httplib.h"

namespace cliniq::gw {

using nlohmann::json;

int64_t estimate_tokens(const std::string& text) {
  return static_cast<int64_t>(tokenize(text).size());
}

namespace {

bool valid_role(const std::string& r) {
  return r == "system" || r == "user" || r == "assistant";
}

void check_request(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw Error(errc::gw_protocol, "chat request has no messages");
  }
  for (const ChatMessage& m : request.messages) {
    if (!valid_role(m.role)) {
      throw Error(errc::gw_protocol, "invalid message role \"" + m.role + "\"");
    }
    if (m.content.empty()) {
      throw Error(errc::gw_protocol, "empty message content (role " + m.role + ")");
    }
  }
  if (request.max_output_tokens <= 0) {
    throw Error(errc::gw_protocol, "max_output_tokens must be positive");
  }
  if (request.temperature < 0) {
    throw Error(errc::gw_protocol, "temperature must be >= 0");
  }
}

int64_t input_estimate(const ChatRequest& request) {
  int64_t total = 0;
  for (const ChatMessage& m : request.messages) total += estimate_tokens(m.content);
  return total;
}

const std::string& last_user_content(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return request.messages.back().content;
}

bool is_hex16(const std::string& s) {
  if (s.size() != 16) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

int64_t now_epoch_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

ScriptedStub load_stub_script(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::gw_script, "cannot open stub script " + path);
  ScriptedStub stub;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto bad = [&](const std::string& why) {
      throw Error(errc::gw_script,
                  "stub script " + path + " line " + std::to_string(line_no) + ": " + why);
    };
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) bad("not a JSON object");
    if (!rec.contains("match") || !rec["match"].is_string()) bad("missing string \"match\"");
    if (!rec.contains("reply") || !rec["reply"].is_string()) bad("missing string \"reply\"");
    StubRule rule;
    rule.match = rec["match"].get<std::string>();
    rule.reply = rec["reply"].get<std::string>();
    if (rule.match != "exact" && rule.match != "hash" && rule.match != "ordinal") {
      bad("match must be exact, hash, or ordinal (got \"" + rule.match + "\")");
    }
    if (!rec.contains("key")) bad("missing \"key\"");
    if (rec["key"].is_string()) {
      rule.key = rec["key"].get<std::string>();
    } else if (rec["key"].is_number_integer()) {
      rule.key = std::to_string(rec["key"].get<int64_t>());
    } else {
      bad("key must be a string or integer");
    }
    if (rule.match == "hash" && !is_hex16(rule.key)) {
      bad("hash key must be 16 lowercase hex digits");
    }
    if (rule.match == "ordinal") {
      for (char c : rule.key) {
        if (c < '0' || c > '9') bad("ordinal key must be a positive integer");
      }
      if (rule.key.empty() || rule.key == "0") bad("ordinal key must be a positive integer");
    }
    stub.rules.push_back(std::move(rule));
  }
  return stub;
}

void Journal::append(const std::string& json_line) {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(errc::io_error, "cannot append to journal " + path_);
  out << json_line << '\n';
}

Gateway::EndpointState& Gateway::state_for(const EndpointConfig& endpoint) {
  return states_[endpoint.id];  // caller holds mu_
}

void Gateway::journal_exchange(const EndpointConfig& endpoint, const ChatRequest& request,
                               const ChatResponse* response, const std::string& error,
                               int64_t attempts) {
  if (!journal_) return;
  json messages = json::array();
  for (const ChatMessage& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  json rec = {
      {"ts_ms", now_epoch_ms()},
      {"endpoint_id", endpoint.id},
      {"kind", endpoint.kind == EndpointKind::http_chat ? "http_chat" : "scripted_stub"},
      {"model", request.model_id},
      {"attempts", attempts},
      {"request",
       {{"messages", messages},
        {"max_output_tokens", request.max_output_tokens},
        {"temperature", request.temperature}}},
  };
  if (response) {
    rec["response"] = {{"content", response->content},
                       {"input_tokens", response->input_token_estimate},
                       {"output_tokens", response->output_token_estimate},
                       {"latency_ms", response->latency_ms}};
  } else {
    rec["error"] = error;
  }
  journal_->append(rec.dump());
}

ChatResponse Gateway::complete(const EndpointConfig& endpoint, const ChatRequest& request) {
  check_request(request);
  const int64_t in_tokens = input_estimate(request);

  // Reserve the worst case up front so concurrent calls cannot overshoot a
  // configured cap; the unused part of the reservation is released below.
  {
    std::lock_guard<std::mutex> lock(mu_);
    EndpointState& state = state_for(endpoint);
    if (endpoint.budget_tokens &&
        state.spent + in_tokens + request.max_output_tokens > *endpoint.budget_tokens) {
      std::string msg = "token budget exhausted on endpoint " + endpoint.id + ": spent " +
                        std::to_string(state.spent) + ", request needs up to " +
                        std::to_string(in_tokens + request.max_output_tokens) + " of cap " +
                        std::to_string(*endpoint.budget_tokens);
      journal_exchange(endpoint, request, nullptr, msg, 0);
      throw Error(errc::gw_budget_exhausted, msg);
    }
    state.spent += in_tokens + request.max_output_tokens;
  }

  ChatResponse response;
  int64_t attempts = 1;
  try {
    if (endpoint.kind == EndpointKind::scripted_stub) {
      std::lock_guard<std::mutex> lock(mu_);
      response = complete_stub(endpoint, request, state_for(endpoint));
    } else {
      response = complete_http(endpoint, request, attempts);
    }
  } catch (const Error& e) {
    std::lock_guard<std::mutex> lock(mu_);
    state_for(endpoint).spent -= in_tokens + request.max_output_tokens;
    journal_exchange(endpoint, request, nullptr, e.what(), attempts);
    throw;
  }

  response.input_token_estimate = in_tokens;
  // Charged output is clamped to the reservation so a configured cap holds
  // even when a scripted reply runs long.
  int64_t out_tokens = std::min(estimate_tokens(response.content), request.max_output_tokens);
  response.output_token_estimate = out_tokens;
  response.endpoint_id = endpoint.id;
  {
    std::lock_guard<std::mutex> lock(mu_);
    state_for(endpoint).spent -= request.max_output_tokens - out_tokens;
  }
  journal_exchange(endpoint, request, &response, "", attempts);
  return response;
}

int64_t Gateway::budget_spent(const std::string& endpoint_id) {
  std::lock_guard<std::mutex> lock(mu_);
  return states_[endpoint_id].spent;
}

ChatResponse Gateway::complete_stub(const EndpointConfig& endpoint,
                                    const ChatRequest& request, EndpointState& state) {
  if (!state.stub) {
    state.stub = endpoint.script_path.empty() ? ScriptedStub{}
                                              : load_stub_script(endpoint.script_path);
  }
  ScriptedStub& stub = *state.stub;
  ++stub.calls_seen;
  const std::string& prompt = last_user_content(request);
  const std::string prompt_hash = fnv1a64_hex(prompt);
  const std::string ordinal = std::to_string(stub.calls_seen);

  const StubRule* hit = nullptr;
  for (const StubRule& rule : stub.rules) {
    bool match = (rule.match == "exact" && rule.key == prompt) ||
                 (rule.match == "hash" && rule.key == prompt_hash) ||
                 (rule.match == "ordinal" && rule.key == ordinal);
    if (match) {
      hit = &rule;
      break;
    }
  }

  ChatResponse response;
  if (hit) {
    response.content = hit->reply;
  } else {
    switch (endpoint.fallback) {
      case StubFallback::error:
        throw Error(errc::gw_no_script_match,
                    "no stub rule matched on endpoint " + endpoint.id + " (call " +
                        ordinal + ", prompt hash " + prompt_hash + ")");
      case StubFallback::fixed: response.content = endpoint.fallback_text; break;
      case StubFallback::echo: response.content = prompt; break;
    }
  }
  response.latency_ms = 0.0;
  return response;
}

ChatResponse Gateway::complete_http(const EndpointConfig& endpoint,
                                    const ChatRequest& request, int64_t& attempts_out) {
  // Split "scheme://host[:port]/path" for the HTTP client.
  size_t scheme_end = endpoint.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(errc::gw_transport, "endpoint " + endpoint.id + ": base_url \"" +
                                        endpoint.base_url + "\" has no scheme");
  }
  size_t path_pos = endpoint.base_url.find('/', scheme_end + 3);
  std::string host = endpoint.base_url.substr(0, path_pos);
  std::string path = path_pos == std::string::npos ? "/" : endpoint.base_url.substr(path_pos);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (host.rfind("https://", 0) == 0) {
    throw Error(errc::gw_transport,
                "endpoint " + endpoint.id + ": built without TLS support, cannot use " + host);
  }
#endif

  json body_json = {{"model", request.model_id},
                    {"max_tokens", request.max_output_tokens},
                    {"temperature", request.temperature}};
  body_json["messages"] = json::array();
  for (const ChatMessage& m : request.messages) {
    body_json["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  const std::string body = body_json.dump();

  httplib::Client client(host);
  client.set_connection_timeout(std::chrono::milliseconds(endpoint.timeout_ms));
  client.set_read_timeout(std::chrono::milliseconds(endpoint.timeout_ms));
  client.set_write_timeout(std::chrono::milliseconds(endpoint.timeout_ms));

  httplib::Headers headers;
  if (!endpoint.credential_env.empty()) {
    const char* key = std::getenv(endpoint.credential_env.c_str());
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const int64_t total_attempts = endpoint.max_retries + 1;
  std::string last_failure;
  bool last_was_timeout = false;
  for (int64_t attempt = 1; attempt <= total_attempts; ++attempt) {
    attempts_out = attempt;
    auto started = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(path, headers, body, "application/json");
    double latency = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    if (!res) {
      last_was_timeout = res.error() == httplib::Error::ConnectionTimeout ||
                         res.error() == httplib::Error::Read ||
                         res.error() == httplib::Error::Write;
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("choices") ||
          !parsed["choices"].is_array() || parsed["choices"].empty() ||
          !parsed["choices"][0].contains("message") ||
          !parsed["choices"][0]["message"].contains("content") ||
          !parsed["choices"][0]["message"]["content"].is_string()) {
        throw Error(errc::gw_protocol,
                    "endpoint " + endpoint.id + ": malformed completion body: " +
                        res->body.substr(0, 200));
      }
      ChatResponse response;
      response.content = parsed["choices"][0]["message"]["content"].get<std::string>();
      response.latency_ms = latency;
      return response;
    }
    if (res->status == 429 || res->status >= 500) {
      last_was_timeout = false;
      last_failure = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      continue;
    }
    throw Error(errc::gw_protocol, "endpoint " + endpoint.id + ": HTTP " +
                                       std::to_string(res->status) + ": " +
                                       res->body.substr(0, 200));
  }
  throw Error(last_was_timeout ? errc::gw_timeout : errc::gw_transport,
              "endpoint " + endpoint.id + ": " + last_failure + " after " +
                  std::to_string(total_attempts) + " attempts");
}

}  // namespace cliniq::gw
