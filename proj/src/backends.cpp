// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/backends.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace asymdial {

using json = nlohmann::json;

void ChatRequest::validate() const {
  if (system_prompt.empty()) throw ContractViolation("chat request: empty system prompt");
  if (messages.empty()) throw ContractViolation("chat request: no messages");
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const ChatRole expected = (i % 2 == 0) ? ChatRole::user : ChatRole::assistant;
    if (messages[i].role != expected) {
      throw ContractViolation("chat request: roles must alternate starting with user (message " +
                              std::to_string(i) + ")");
    }
  }
  if (!(temperature >= 0.0)) throw ContractViolation("chat request: negative temperature");
}

// ---------------------------------------------------------------------------
// Scripted

void ScriptedScript::validate() const {
  if (entries.empty()) throw ConfigError("scripted script has no entries");
}

ScriptedScript ScriptedScript::from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scripted script: ") + e.what(), e.byte);
  }
  ScriptedScript script;
  const json* responses = &doc;
  if (doc.is_object()) {
    const std::string policy = doc.value("policy", "repeat_last");
    if (policy == "repeat_last") {
      script.policy = ExhaustionPolicy::repeat_last;
    } else if (policy == "error") {
      script.policy = ExhaustionPolicy::error;
    } else {
      throw ConfigError("scripted script: unknown policy '" + policy + "'");
    }
    if (!doc.contains("responses")) throw ConfigError("scripted script: missing 'responses'");
    responses = &doc["responses"];
  }
  if (!responses->is_array()) throw ConfigError("scripted script: 'responses' must be an array");
  for (const auto& item : *responses) {
    ScriptEntry entry;
    if (item.is_string()) {
      entry.text = item.get<std::string>();
    } else if (item.is_object() && item.contains("text") && item["text"].is_string()) {
      entry.text = item["text"].get<std::string>();
      if (item.contains("match")) entry.match = item["match"].get<std::string>();
    } else {
      throw ConfigError("scripted script: each response must be a string or {match, text}");
    }
    script.entries.push_back(std::move(entry));
  }
  script.validate();
  return script;
}

ScriptedScript ScriptedScript::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open script: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

ScriptedBackend::ScriptedBackend(ScriptedScript script, std::string id)
    : script_(std::move(script)), id_(std::move(id)) {
  script_.validate();
  for (std::size_t i = 0; i < script_.entries.size(); ++i) {
    if (!script_.entries[i].match) sequential_.push_back(i);
  }
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  request.validate();
  std::lock_guard lock(mu_);
  ++calls_;
  std::string last_user;
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == ChatRole::user) {
      last_user = it->text;
      break;
    }
  }
  for (const auto& entry : script_.entries) {
    if (entry.match && last_user.find(*entry.match) != std::string::npos) {
      return ChatResponse{entry.text, 0, id_, 1};
    }
  }
  if (sequential_.empty()) {
    throw BackendError(BackendError::Kind::exhausted,
                       id_ + ": no scripted entry matches the request");
  }
  if (cursor_ >= sequential_.size()) {
    if (script_.policy == ExhaustionPolicy::error) {
      throw BackendError(BackendError::Kind::exhausted, id_ + ": script exhausted");
    }
    return ChatResponse{script_.entries[sequential_.back()].text, 0, id_, 1};
  }
  const auto& entry = script_.entries[sequential_[cursor_++]];
  return ChatResponse{entry.text, 0, id_, 1};
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---------------------------------------------------------------------------
// Retry and rate limiting

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  const double raw = static_cast<double>(base_delay.count()) *
                     std::pow(factor, static_cast<double>(std::max(0, attempt - 1)));
  const double capped = std::min(raw, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

namespace {

SteadyClock default_clock() {
  return [] { return std::chrono::steady_clock::now(); };
}

Sleeper default_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

}  // namespace

RateLimiter::RateLimiter(int per_minute, SteadyClock clock, Sleeper sleep)
    : per_minute_(per_minute),
      clock_(clock ? std::move(clock) : default_clock()),
      sleep_(sleep ? std::move(sleep) : default_sleeper()) {
  if (per_minute_ < 1) throw ConfigError("rate limiter: requests per minute must be >= 1");
}

void RateLimiter::acquire() {
  constexpr auto kWindow = std::chrono::seconds(60);
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = clock_();
    while (!issued_.empty() && issued_.front() + kWindow <= now) issued_.pop_front();
    if (static_cast<int>(issued_.size()) < per_minute_) {
      issued_.push_back(now);
      return;
    }
    auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(issued_.front() + kWindow - now);
    if (wait.count() <= 0) wait = std::chrono::milliseconds(1);
    lock.unlock();
    sleep_(wait);
    lock.lock();
  }
}

// ---------------------------------------------------------------------------
// Remote

RemoteConfig remote_config_from_env(BackendRole role, const std::string& model_id,
                                    const KeyValueConfig& config) {
  RemoteConfig rc;
  rc.model_id = model_id;
  const char* base_var = role == BackendRole::judge ? "STORM_JUDGE_API_BASE" : "STORM_API_BASE";
  const char* key_var = role == BackendRole::judge ? "STORM_JUDGE_API_KEY" : "STORM_API_KEY";
  if (const char* v = std::getenv(base_var); v && *v) rc.base_url = v;
  if (const char* v = std::getenv(key_var); v && *v) rc.api_key = v;
  // The judge falls back to the generation credentials when it has none.
  if (role == BackendRole::judge) {
    if (!std::getenv("STORM_JUDGE_API_BASE")) {
      if (const char* v = std::getenv("STORM_API_BASE"); v && *v) rc.base_url = v;
    }
    if (rc.api_key.empty()) {
      if (const char* v = std::getenv("STORM_API_KEY"); v && *v) rc.api_key = v;
    }
  }
  rc.timeout_s = config.get_int("timeout_s", rc.timeout_s);
  rc.retry.max_attempts = config.get_int("max_attempts", rc.retry.max_attempts);
  rc.requests_per_minute = config.get_int("rpm", rc.requests_per_minute);
  if (rc.retry.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (rc.timeout_s < 1) throw ConfigError("timeout_s must be >= 1");
  return rc;
}

RemoteBackend::RemoteBackend(RemoteConfig config, SteadyClock clock, Sleeper sleep)
    : config_(std::move(config)),
      clock_(clock ? std::move(clock) : default_clock()),
      sleep_(sleep ? std::move(sleep) : default_sleeper()),
      limiter_(config_.requests_per_minute, clock_, sleep_) {
  if (config_.model_id.empty()) throw ConfigError("remote backend: empty model id");
}

std::string RemoteBackend::request_body(const ChatRequest& request, const std::string& model_id) {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  for (const auto& m : request.messages) {
    messages.push_back(
        {{"role", m.role == ChatRole::user ? "user" : "assistant"}, {"content", m.text}});
  }
  json body = {{"model", model_id}, {"messages", messages}, {"temperature", request.temperature}};
  // A token is at least one character, so the character cap bounds tokens.
  if (request.max_output_chars) body["max_tokens"] = *request.max_output_chars;
  return body.dump();
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("remote backend: bad base url " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

bool is_transient(int status) {
  return status == 408 || status == 429 || status == 500 || status == 502 || status == 503 ||
         status == 504;
}

}  // namespace

ChatResponse RemoteBackend::complete(const ChatRequest& request) {
  request.validate();
  const SplitUrl url = split_url(config_.base_url);
  const std::string body = request_body(request, config_.model_id);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto started = clock_();
  std::string last_error;
  int last_status = 0;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    limiter_.acquire();
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    client.set_write_timeout(config_.timeout_s, 0);
    auto res = client.Post(url.path + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      json reply;
      try {
        reply = json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw BackendError(BackendError::Kind::transport,
                           std::string("remote backend: unparsable reply: ") + e.what(),
                           res->status, attempt);
      }
      const auto& choices = reply.value("choices", json::array());
      if (choices.empty() || !choices[0].contains("message") ||
          !choices[0]["message"].value("content", json()).is_string()) {
        throw BackendError(BackendError::Kind::transport, "remote backend: reply has no content",
                           res->status, attempt);
      }
      std::string text = choices[0]["message"]["content"].get<std::string>();
      if (text.empty()) {
        throw BackendError(BackendError::Kind::transport, "remote backend: empty reply",
                           res->status, attempt);
      }
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(clock_() - started);
      return ChatResponse{std::move(text), elapsed.count(), id(), attempt};
    } else if (is_transient(res->status)) {
      last_status = res->status;
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      throw BackendError(BackendError::Kind::api,
                         "remote backend: HTTP " + std::to_string(res->status) + ": " + res->body,
                         res->status, attempt);
    }
    if (attempt < config_.retry.max_attempts) sleep_(config_.retry.delay_after(attempt));
  }
  throw BackendError(BackendError::Kind::timeout,
                     "remote backend: retries exhausted (" + last_error + ")", last_status,
                     config_.retry.max_attempts);
}

std::unique_ptr<TextBackend> make_backend(const std::string& spec, BackendRole role,
                                          const KeyValueConfig& config) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("backend spec must be scripted:<file> or api:<model_id>: " + spec);
  }
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (arg.empty()) throw ConfigError("backend spec has an empty argument: " + spec);
  if (kind == "scripted") {
    return std::make_unique<ScriptedBackend>(ScriptedScript::load(arg), spec);
  }
  if (kind == "api") {
    return std::make_unique<RemoteBackend>(remote_config_from_env(role, arg, config));
  }
  throw ConfigError("unknown backend kind '" + kind + "' in " + spec);
}

}  // namespace asymdial
