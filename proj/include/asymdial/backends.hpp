// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "asymdial/config.hpp"
#include "asymdial/error.hpp"

namespace asymdial {

enum class ChatRole { user, assistant };

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string text;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string system_prompt;
  std::vector<ChatMessage> messages;
  std::optional<int> max_output_chars;
  double temperature = 0.7;
  std::string model_id;
  // Template id of the system prompt ("user_system", "agent_default", ...).
  // Request logs use it to audit that the two sides never mix.
  std::string provenance;

  // Throws ContractViolation: empty system prompt, empty message list,
  // roles not alternating from user, negative temperature.
  void validate() const;
};

struct ChatResponse {
  std::string text;
  std::int64_t latency_ms = 0;
  std::string backend_id;
  int attempt_count = 1;
};

class BackendError : public Error {
 public:
  enum class Kind {
    api,         // non-transient HTTP error
    timeout,     // transient failures until the attempt cap
    exhausted,   // scripted backend ran out under policy=error
    transport,   // malformed reply or unusable configuration
  };

  BackendError(Kind kind, const std::string& what, int status = 0, int attempts = 1)
      : Error(what), kind_(kind), status_(status), attempts_(attempts) {}

  Kind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }
  int attempt_count() const noexcept { return attempts_; }

 private:
  Kind kind_;
  int status_;
  int attempts_;
};

// Uniform text-completion interface. Implementations must be safe to call
// from several threads.
class TextBackend {
 public:
  virtual ~TextBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend

struct ScriptEntry {
  // When set, the entry answers any request whose last user message contains
  // this substring; keyed entries do not advance the cursor.
  std::optional<std::string> match;
  std::string text;
};

enum class ExhaustionPolicy { repeat_last, error };

struct ScriptedScript {
  std::vector<ScriptEntry> entries;
  ExhaustionPolicy policy = ExhaustionPolicy::repeat_last;

  void validate() const;

  // {"policy": "repeat_last"|"error", "responses": ["text" | {"match": ..., "text": ...}]}
  // A bare JSON array is accepted as a repeat_last script.
  static ScriptedScript from_json_text(std::string_view text);
  static ScriptedScript load(const std::filesystem::path& path);
};

class ScriptedBackend final : public TextBackend {
 public:
  explicit ScriptedBackend(ScriptedScript script, std::string id = "scripted");

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return id_; }

  std::size_t calls() const;

 private:
  ScriptedScript script_;
  std::string id_;
  std::vector<std::size_t> sequential_;  // indices of unkeyed entries
  mutable std::mutex mu_;
  std::size_t cursor_ = 0;
  std::size_t calls_ = 0;
};

// ---------------------------------------------------------------------------
// Remote (OpenAI-compatible chat completions)

using SteadyClock = std::function<std::chrono::steady_clock::time_point()>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  std::chrono::milliseconds max_delay{30000};

  // Delay before attempt number `attempt` + 1 (attempt counts from 1).
  std::chrono::milliseconds delay_after(int attempt) const;
};

// Caps issued calls to `per_minute` over any rolling 60 s window.
class RateLimiter {
 public:
  RateLimiter(int per_minute, SteadyClock clock = {}, Sleeper sleep = {});

  // Blocks (through the sleeper) until a slot is free, then records the call.
  void acquire();

  int per_minute() const noexcept { return per_minute_; }

 private:
  int per_minute_;
  SteadyClock clock_;
  Sleeper sleep_;
  std::mutex mu_;
  std::deque<std::chrono::steady_clock::time_point> issued_;
};

struct RemoteConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::string model_id;
  int timeout_s = 60;
  int requests_per_minute = 60;
  RetryPolicy retry;
};

enum class BackendRole { generation, judge };

// Reads STORM_API_BASE/STORM_API_KEY (generation) or
// STORM_JUDGE_API_BASE/STORM_JUDGE_API_KEY (judge), then applies config keys
// timeout_s, max_attempts and rpm.
RemoteConfig remote_config_from_env(BackendRole role, const std::string& model_id,
                                    const KeyValueConfig& config = {});

class RemoteBackend final : public TextBackend {
 public:
  explicit RemoteBackend(RemoteConfig config, SteadyClock clock = {}, Sleeper sleep = {});

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return "api:" + config_.model_id; }

  static std::string request_body(const ChatRequest& request, const std::string& model_id);

 private:
  RemoteConfig config_;
  SteadyClock clock_;
  Sleeper sleep_;
  RateLimiter limiter_;
};

// "scripted:<file>" or "api:<model_id>".
std::unique_ptr<TextBackend> make_backend(const std::string& spec, BackendRole role,
                                          const KeyValueConfig& config = {});

}  // namespace asymdial
