// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "asymdial/backends.hpp"
#include "asymdial/profiles.hpp"
#include "asymdial/prompts.hpp"
#include "asymdial/transcript.hpp"

namespace asymdial {

struct RunConfig {
  int max_turns = 10;
  LengthBounds user_length = kUserLength;
  LengthBounds assistant_length = kAssistantLength;
  int length_violation_retries = 2;
  bool terminate_on_leaving = true;
  double user_temperature = 0.7;
  double agent_temperature = 0.7;

  // Throws ValidationError: max_turns < 1, retries < 0, or bounds not
  // satisfying min < target < max.
  void validate() const;
  nlohmann::json to_json() const;
  std::string digest() const;
};

enum class LengthVerdict { accept, retry_with_instruction, accept_with_warning };

struct LengthDecision {
  LengthVerdict verdict = LengthVerdict::accept;
  std::size_t length = 0;   // counted characters
  std::string reminder;     // set for retry_with_instruction
};

// Code points of the text the other side sees: for the user role the tag
// blocks are stripped before counting.
std::size_t visible_length(std::string_view text, ChatRole role);

// `retries_used` counts retries already spent on this message.
LengthDecision enforce_length(std::string_view text, ChatRole role, const RunConfig& config,
                              int retries_used = 0);

using WallClock = std::function<std::chrono::system_clock::time_point()>;

// Starts at `start` and advances by `step` on every call. Copies keep
// independent positions.
WallClock stepping_clock(std::chrono::system_clock::time_point start,
                         std::chrono::milliseconds step);

// 2026-01-01T00:00:00.000Z
std::string format_timestamp(std::chrono::system_clock::time_point t);

enum class Side { user, agent };

struct RequestLogEntry {
  Side side = Side::user;
  int turn_index = 0;
  ChatRequest request;
  std::string response_text;

  // System prompt plus every message, newline-joined.
  std::string request_text() const;
};

nlohmann::json request_log_to_json(const std::vector<RequestLogEntry>& log);

struct RunOptions {
  std::string dialogue_id;        // "dialogue-<seed>" when empty
  WallClock clock;                // system clock when empty
  PromptOptions prompts;
  std::string user_model;
  std::string agent_model;
};

struct RunResult {
  Transcript transcript;
  std::vector<RequestLogEntry> log;
};

// Opening instruction sent to the user model before the first turn.
inline constexpr std::string_view kOpeningMessage =
    "Start the conversation: write your first message to the assistant about your task.";

// User-first alternation for up to config.max_turns turns. The user side sees
// its system prompt, its own tagged outputs and the agent replies; the agent
// side sees its system prompt, visible user text and its own replies. A
// backend failure stops the run, drops the partial turn and sets truncated.
RunResult run_dialogue(const UserProfile& profile, TextBackend& user_backend,
                       TextBackend& agent_backend, const RunConfig& config, bool share_profile,
                       RunOptions options = {});

struct BackendPair {
  std::unique_ptr<TextBackend> user;
  std::unique_ptr<TextBackend> agent;
};

using BackendFactory = std::function<BackendPair(const UserProfile&, std::size_t index)>;

// Runs every profile on up to `workers` threads. Results come back in input
// order. options.dialogue_id is used as a prefix: "<prefix><index>",
// the index zero-padded to 4 digits.
std::vector<RunResult> run_batch(const std::vector<UserProfile>& profiles,
                                 const BackendFactory& factory, const RunConfig& config,
                                 bool share_profile, int workers, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Asymmetry audit

struct AuditFinding {
  std::size_t entry = 0;  // index into the request log
  std::string kind;       // private_value | inner_thoughts | satisfaction_explanation | provenance
  std::string value;

  bool operator==(const AuditFinding&) const = default;
};

// Scans agent-side requests (case-sensitive) for private attribute values
// when the profile is not shared, and always for inner thoughts and
// satisfaction explanations. Strings shorter than min_length are skipped.
// Also checks that every request carries the system prompt of its own side.
std::vector<AuditFinding> audit_asymmetry(const UserProfile& profile, const Transcript& transcript,
                                          const std::vector<RequestLogEntry>& log,
                                          bool share_profile, std::size_t min_length = 4);

}  // namespace asymdial
