// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/dialogue.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <exception>
#include <mutex>
#include <thread>

#include "asymdial/annotate.hpp"
#include "asymdial/error.hpp"
#include "asymdial/rng.hpp"

namespace asymdial {

using nlohmann::json;

std::vector<double> Transcript::satisfaction_scores() const {
  std::vector<double> out;
  out.reserve(turns.size());
  for (const auto& t : turns) out.push_back(t.hidden.satisfaction_score);
  return out;
}

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const {
  if (max_turns < 1) throw ValidationError("max_turns must be at least 1");
  if (length_violation_retries < 0) throw ValidationError("length_violation_retries must be >= 0");
  for (const auto* b : {&user_length, &assistant_length}) {
    if (!(b->min < b->target && b->target < b->max)) {
      throw ValidationError("length bounds must satisfy min < target < max");
    }
  }
  if (user_temperature < 0 || agent_temperature < 0) {
    throw ValidationError("temperatures must be >= 0");
  }
}

json RunConfig::to_json() const {
  auto bounds = [](const LengthBounds& b) {
    return json{{"min", b.min}, {"target", b.target}, {"max", b.max}};
  };
  return {
      {"max_turns", max_turns},
      {"user_length", bounds(user_length)},
      {"assistant_length", bounds(assistant_length)},
      {"length_violation_retries", length_violation_retries},
      {"terminate_on_leaving", terminate_on_leaving},
      {"user_temperature", user_temperature},
      {"agent_temperature", agent_temperature},
  };
}

std::string RunConfig::digest() const { return hex_digest(to_json().dump()); }

// ---------------------------------------------------------------------------
// Length enforcement

namespace {

std::size_t code_points(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

}  // namespace

std::size_t visible_length(std::string_view text, ChatRole role) {
  if (role == ChatRole::user) return code_points(parse_user_message(text).visible_text);
  return code_points(text);
}

LengthDecision enforce_length(std::string_view text, ChatRole role, const RunConfig& config,
                              int retries_used) {
  const LengthBounds& bounds =
      role == ChatRole::user ? config.user_length : config.assistant_length;
  LengthDecision decision;
  decision.length = visible_length(text, role);
  const auto n = static_cast<long long>(decision.length);
  if (n >= bounds.min && n <= bounds.max) return decision;
  if (retries_used < config.length_violation_retries) {
    decision.verdict = LengthVerdict::retry_with_instruction;
    decision.reminder = "Reminder: your " +
                        std::string(role == ChatRole::user ? "visible message" : "reply") +
                        " must be between " + std::to_string(bounds.min) + " and " +
                        std::to_string(bounds.max) + " characters (aim for about " +
                        std::to_string(bounds.target) + "). The last one had " +
                        std::to_string(decision.length) + ". Please rewrite it.";
    return decision;
  }
  decision.verdict = LengthVerdict::accept_with_warning;
  return decision;
}

// ---------------------------------------------------------------------------
// Clock

WallClock stepping_clock(std::chrono::system_clock::time_point start,
                         std::chrono::milliseconds step) {
  return [next = start, step]() mutable {
    const auto now = next;
    next += step;
    return now;
  };
}

std::string format_timestamp(std::chrono::system_clock::time_point t) {
  using namespace std::chrono;
  const auto ms = time_point_cast<milliseconds>(t);
  auto secs = time_point_cast<seconds>(ms);
  auto millis = (ms - secs).count();
  if (millis < 0) {
    millis += 1000;
    secs -= seconds(1);
  }
  const std::time_t tt = system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
  return out;
}

// ---------------------------------------------------------------------------
// Request log

std::string RequestLogEntry::request_text() const {
  std::string out = request.system_prompt;
  for (const auto& m : request.messages) {
    out += '\n';
    out += m.text;
  }
  return out;
}

json request_log_to_json(const std::vector<RequestLogEntry>& log) {
  json out = json::array();
  for (const auto& e : log) {
    json messages = json::array();
    for (const auto& m : e.request.messages) {
      messages.push_back({{"role", m.role == ChatRole::user ? "user" : "assistant"},
                          {"text", m.text}});
    }
    out.push_back({
        {"side", e.side == Side::user ? "user" : "agent"},
        {"turn_index", e.turn_index},
        {"provenance", e.request.provenance},
        {"model_id", e.request.model_id},
        {"temperature", e.request.temperature},
        {"system_prompt", e.request.system_prompt},
        {"messages", messages},
        {"response", e.response_text},
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dialogue loop

namespace {

struct Exchange {
  std::string text;
  std::vector<std::string> warnings;
};

// Sends `request`, re-asking with a length reminder while enforce_length
// says so. Every call is logged.
Exchange exchange(TextBackend& backend, ChatRequest request, ChatRole role, Side side,
                  int turn_index, const RunConfig& config, std::vector<RequestLogEntry>& log) {
  const std::string base_text = request.messages.back().text;
  for (int retries = 0;; ++retries) {
    ChatResponse response = backend.complete(request);
    log.push_back({side, turn_index, request, response.text});
    const LengthDecision decision = enforce_length(response.text, role, config, retries);
    if (decision.verdict == LengthVerdict::accept) return {std::move(response.text), {}};
    if (decision.verdict == LengthVerdict::accept_with_warning) {
      return {std::move(response.text),
              {std::string(role == ChatRole::user ? "user" : "assistant") +
               " message length " + std::to_string(decision.length) +
               " outside bounds after " + std::to_string(retries) + " retries"}};
    }
    request.messages.back().text = base_text + "\n\n" + decision.reminder;
  }
}

}  // namespace

RunResult run_dialogue(const UserProfile& profile, TextBackend& user_backend,
                       TextBackend& agent_backend, const RunConfig& config, bool share_profile,
                       RunOptions options) {
  config.validate();
  if (!options.clock) options.clock = [] { return std::chrono::system_clock::now(); };
  PromptOptions prompt_options = options.prompts;
  prompt_options.user_length = config.user_length;
  prompt_options.assistant_length = config.assistant_length;

  const RenderedPrompt user_prompt = render_user_system_prompt(profile, prompt_options);
  const RenderedPrompt agent_prompt =
      render_agent_system_prompt(profile.task, &profile, share_profile, prompt_options);

  RunResult result;
  Transcript& transcript = result.transcript;
  transcript.id = options.dialogue_id.empty() ? "dialogue-" + std::to_string(profile.seed)
                                              : options.dialogue_id;
  transcript.profile_ref = {profile.base.name, profile.seed,
                            hex_digest(profile_to_json(profile).dump())};
  transcript.run_config_digest = config.digest();
  transcript.share_profile = share_profile;
  transcript.created_at = format_timestamp(options.clock());
  transcript.agent_model =
      options.agent_model.empty() ? agent_backend.id() : options.agent_model;

  const auto& emotion = default_lexicon(LexiconKind::emotion);
  const auto& intent = default_lexicon(LexiconKind::intent);
  const auto& inner_emotion = default_lexicon(LexiconKind::inner_emotion);
  const auto& inner_intent = default_lexicon(LexiconKind::inner_intent);

  for (int t = 0; t < config.max_turns; ++t) {
    Turn turn;
    turn.index = t;
    try {
      ChatRequest user_request;
      user_request.system_prompt = user_prompt.text;
      user_request.provenance = user_prompt.template_id;
      user_request.temperature = config.user_temperature;
      user_request.model_id = options.user_model;
      user_request.max_output_chars = config.user_length.max;
      user_request.messages.push_back({ChatRole::user, std::string(kOpeningMessage)});
      for (const auto& prior : transcript.turns) {
        user_request.messages.push_back({ChatRole::assistant, prior.raw_user_output});
        user_request.messages.push_back({ChatRole::user, prior.assistant_message});
      }
      Exchange user_out = exchange(user_backend, std::move(user_request), ChatRole::user,
                                   Side::user, t, config, result.log);

      const ParsedUserMessage parsed = parse_user_message(user_out.text);
      turn.raw_user_output = user_out.text;
      turn.user_message = parsed.visible_text;
      turn.hidden.inner_thoughts = parsed.inner_thoughts;
      turn.hidden.satisfaction_score = parsed.satisfaction_score;
      turn.hidden.satisfaction_explanation = parsed.satisfaction_explanation;
      if (parsed.satisfaction_defaulted) turn.hidden.defaults_applied.push_back("satisfaction");
      if (parsed.inner_thoughts_defaulted) {
        turn.hidden.defaults_applied.push_back("inner_thoughts");
      }
      turn.hidden.emotion = classify(emotion, parsed.visible_text).label;
      turn.hidden.intent = classify(intent, parsed.visible_text).label;
      turn.hidden.inner_emotion = classify(inner_emotion, parsed.inner_thoughts).label;
      turn.hidden.inner_intent = classify(inner_intent, parsed.inner_thoughts).label;
      turn.warnings = parsed.warnings;
      for (auto& w : user_out.warnings) turn.warnings.push_back(std::move(w));

      ChatRequest agent_request;
      agent_request.system_prompt = agent_prompt.text;
      agent_request.provenance = agent_prompt.template_id;
      agent_request.temperature = config.agent_temperature;
      agent_request.model_id = options.agent_model;
      agent_request.max_output_chars = config.assistant_length.max;
      for (const auto& prior : transcript.turns) {
        agent_request.messages.push_back({ChatRole::user, prior.user_message});
        agent_request.messages.push_back({ChatRole::assistant, prior.assistant_message});
      }
      agent_request.messages.push_back({ChatRole::user, turn.user_message});
      Exchange agent_out = exchange(agent_backend, std::move(agent_request), ChatRole::assistant,
                                    Side::agent, t, config, result.log);
      turn.assistant_message = std::move(agent_out.text);
      for (auto& w : agent_out.warnings) turn.warnings.push_back(std::move(w));
    } catch (const Error& e) {
      transcript.truncated = true;
      transcript.failure = "turn " + std::to_string(t) + ": " + e.what();
      break;
    }
    turn.timestamp = format_timestamp(options.clock());
    const bool leaving = turn.hidden.intent == "leaving";
    transcript.turns.push_back(std::move(turn));
    if (leaving && config.terminate_on_leaving) break;
  }
  return result;
}

std::vector<RunResult> run_batch(const std::vector<UserProfile>& profiles,
                                 const BackendFactory& factory, const RunConfig& config,
                                 bool share_profile, int workers, const RunOptions& options) {
  config.validate();
  std::vector<RunResult> results(profiles.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= profiles.size()) return;
      try {
        BackendPair backends = factory(profiles[i], i);
        RunOptions local = options;
        if (!options.dialogue_id.empty()) {
          char index[16];
          std::snprintf(index, sizeof index, "%04zu", i);
          local.dialogue_id = options.dialogue_id + index;
        }
        results[i] = run_dialogue(profiles[i], *backends.user, *backends.agent, config,
                                  share_profile, std::move(local));
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  const int n = std::max(1, std::min<int>(workers, static_cast<int>(profiles.size())));
  std::vector<std::thread> threads;
  for (int w = 1; w < n; ++w) threads.emplace_back(work);
  work();
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

// ---------------------------------------------------------------------------
// Audit

std::vector<AuditFinding> audit_asymmetry(const UserProfile& profile, const Transcript& transcript,
                                          const std::vector<RequestLogEntry>& log,
                                          bool share_profile, std::size_t min_length) {
  std::vector<std::pair<std::string, std::string>> needles;
  auto add = [&](const char* kind, const std::string& value) {
    if (value.size() >= min_length) needles.emplace_back(kind, value);
  };
  if (!share_profile) {
    for (const auto& v : private_attribute_values(profile)) add("private_value", v);
  }
  for (const auto& turn : transcript.turns) {
    add("inner_thoughts", turn.hidden.inner_thoughts);
    add("satisfaction_explanation", turn.hidden.satisfaction_explanation);
  }

  std::vector<AuditFinding> findings;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& entry = log[i];
    const auto& prov = entry.request.provenance;
    if (entry.side == Side::user) {
      if (prov != template_ids::user_system) findings.push_back({i, "provenance", prov});
      continue;
    }
    if (prov != template_ids::agent_default && prov != template_ids::agent_profile) {
      findings.push_back({i, "provenance", prov});
    }
    const std::string text = entry.request_text();
    for (const auto& [kind, value] : needles) {
      if (text.find(value) != std::string::npos) findings.push_back({i, kind, value});
    }
  }
  return findings;
}

}  // namespace asymdial
