// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "asymdial/annotate.hpp"
#include "asymdial/error.hpp"
#include "asymdial/json_reply.hpp"
#include "asymdial/rng.hpp"

namespace asymdial {

using nlohmann::json;

namespace {

constexpr const char* kJudgeSystem =
    "You are an expert conversation analyst. Reply with the requested JSON only.";
constexpr const char* kRefineSystem =
    "You improve system prompts for dialogue assistants. Reply with the prompt text only.";

std::string digest_of(const UserProfile& profile) {
  return hex_digest(profile_to_json(profile).dump());
}

ChatRequest judge_request(const char* system, const RenderedPrompt& prompt,
                          const JudgeOptions& options) {
  ChatRequest request;
  request.system_prompt = system;
  request.messages = {{ChatRole::user, prompt.text}};
  request.temperature = options.temperature;
  request.model_id = options.model_id;
  request.provenance = prompt.template_id;
  return request;
}

std::string retry_note(const std::string& reason) {
  return "\n\nYour previous reply was not accepted (" + reason +
         "). Return ONLY the JSON response in the exact format requested.";
}

bool is_number(const json& doc, const char* key) {
  return doc.contains(key) && doc[key].is_number();
}

bool is_string(const json& doc, const char* key) {
  return doc.contains(key) && doc[key].is_string();
}

// Lists of free text: strings pass through, anything else is dumped.
std::vector<std::string> text_list(const json& value) {
  std::vector<std::string> out;
  for (const auto& v : value) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  return out;
}

const json& need(const json& doc, const char* key, const std::string& where) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw ValidationError(where + "." + key + " is missing");
  }
  return doc[key];
}

std::string need_string(const json& doc, const char* key, const std::string& where) {
  const auto& v = need(doc, key, where);
  if (!v.is_string()) throw ValidationError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

double need_number(const json& doc, const char* key, const std::string& where) {
  const auto& v = need(doc, key, where);
  if (!v.is_number()) throw ValidationError(where + "." + key + " must be a number");
  return v.get<double>();
}

int need_int(const json& doc, const char* key, const std::string& where) {
  const auto& v = need(doc, key, where);
  if (!v.is_number_integer()) throw ValidationError(where + "." + key + " must be an integer");
  return v.get<int>();
}

bool need_bool(const json& doc, const char* key, const std::string& where) {
  const auto& v = need(doc, key, where);
  if (!v.is_boolean()) throw ValidationError(where + "." + key + " must be a boolean");
  return v.get<bool>();
}

std::vector<std::string> need_strings(const json& doc, const char* key, const std::string& where) {
  const auto& v = need(doc, key, where);
  if (!v.is_array()) throw ValidationError(where + "." + key + " must be an array");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw ValidationError(where + "." + key + " must hold strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json statistics_json(const SummaryStatistics& s) {
  return {{"average_score", s.average_score},
          {"min_score", s.min_score},
          {"max_score", s.max_score},
          {"score_variance", s.score_variance}};
}

SummaryStatistics statistics_from(const json& doc, const std::string& where) {
  return {need_number(doc, "average_score", where), need_number(doc, "min_score", where),
          need_number(doc, "max_score", where), need_number(doc, "score_variance", where)};
}

}  // namespace

// ---------------------------------------------------------------------------
// A1

EnhancedDialogue a1_enhance(const Transcript& transcript, const UserProfile& profile) {
  if (transcript.turns.empty()) throw ContractViolation("a1_enhance needs at least one turn");
  EnhancedDialogue out;
  out.transcript = transcript;
  out.profile = profile;
  out.profile_digest = digest_of(profile);
  out.difficulty_level = profile.difficulty.level;
  out.uncertainty_percent = profile.uncertainty.percent();
  out.masked_fields = profile.masked_fields;

  const auto& emotion = default_lexicon(LexiconKind::emotion);
  const auto& intent = default_lexicon(LexiconKind::intent);
  const auto& inner_emotion = default_lexicon(LexiconKind::inner_emotion);
  const auto& inner_intent = default_lexicon(LexiconKind::inner_intent);
  for (std::size_t i = 0; i < transcript.turns.size(); ++i) {
    const auto& turn = transcript.turns[i];
    TurnAnnotation a;
    a.index = turn.index;
    a.emotion = classify(emotion, turn.user_message).label;
    a.intent = classify(intent, turn.user_message).label;
    a.inner_emotion = classify(inner_emotion, turn.hidden.inner_thoughts).label;
    a.inner_intent = classify(inner_intent, turn.hidden.inner_thoughts).label;
    a.satisfaction_score = turn.hidden.satisfaction_score;
    if (i > 0) {
      a.satisfaction_delta =
          turn.hidden.satisfaction_score - transcript.turns[i - 1].hidden.satisfaction_score;
    }
    a.satisfaction_defaulted =
        std::find(turn.hidden.defaults_applied.begin(), turn.hidden.defaults_applied.end(),
                  "satisfaction") != turn.hidden.defaults_applied.end();
    out.annotations.push_back(std::move(a));
  }
  out.satisfaction = satisfaction_stats(transcript.satisfaction_scores());
  return out;
}

json enhanced_to_json(const EnhancedDialogue& e) {
  json turns = json::array();
  for (const auto& a : e.annotations) {
    turns.push_back({{"turn_index", a.index},
                     {"emotion", a.emotion},
                     {"intent", a.intent},
                     {"inner_emotion", a.inner_emotion},
                     {"inner_intent", a.inner_intent},
                     {"satisfaction_score", a.satisfaction_score},
                     {"satisfaction_delta", optional_number(a.satisfaction_delta)},
                     {"satisfaction_defaulted", a.satisfaction_defaulted}});
  }
  const auto& s = e.satisfaction;
  return {{"id", e.transcript.id},
          {"profile_digest", e.profile_digest},
          {"difficulty_level", e.difficulty_level},
          {"uncertainty_percent", e.uncertainty_percent},
          {"masked_fields", e.masked_fields},
          {"task", {{"category", e.profile.task.category}, {"task_name", e.profile.task.task_name}}},
          {"satisfaction",
           {{"final", s.final},
            {"average", s.average},
            {"trend", s.trend},
            {"min", s.min},
            {"max", s.max},
            {"variance", s.variance}}},
          {"turns", turns}};
}

EnhancedDialogue enhanced_from_json(const json& doc, const Transcript& transcript,
                                    const UserProfile& profile) {
  const std::string where = "enhanced";
  EnhancedDialogue e;
  e.transcript = transcript;
  e.profile = profile;
  e.profile_digest = need_string(doc, "profile_digest", where);
  e.difficulty_level = need_int(doc, "difficulty_level", where);
  e.uncertainty_percent = need_int(doc, "uncertainty_percent", where);
  e.masked_fields = need_strings(doc, "masked_fields", where);
  const auto& s = need(doc, "satisfaction", where);
  e.satisfaction = {need_number(s, "final", where), need_number(s, "average", where),
                    need_number(s, "trend", where),   need_number(s, "min", where),
                    need_number(s, "max", where),     need_number(s, "variance", where)};
  const auto& turns = need(doc, "turns", where);
  if (!turns.is_array()) throw ValidationError("enhanced.turns must be an array");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto w = "enhanced.turns[" + std::to_string(i) + "]";
    const auto& t = turns[i];
    TurnAnnotation a;
    a.index = need_int(t, "turn_index", w);
    a.emotion = need_string(t, "emotion", w);
    a.intent = need_string(t, "intent", w);
    a.inner_emotion = need_string(t, "inner_emotion", w);
    a.inner_intent = need_string(t, "inner_intent", w);
    a.satisfaction_score = need_number(t, "satisfaction_score", w);
    const auto& d = need(t, "satisfaction_delta", w);
    if (!d.is_null()) {
      if (!d.is_number()) throw ValidationError(w + ".satisfaction_delta must be a number");
      a.satisfaction_delta = d.get<double>();
    }
    a.satisfaction_defaulted = need_bool(t, "satisfaction_defaulted", w);
    e.annotations.push_back(std::move(a));
  }
  return e;
}

// ---------------------------------------------------------------------------
// A2

std::optional<std::string> check_judgment_reply(const json& reply, int index,
                                                double expected_score) {
  if (!reply.is_object()) return "reply is not a JSON object";
  if (!is_string(reply, "turn_pair")) return "turn_pair missing";
  if (reply["turn_pair"].get<std::string>() != turn_pair_label(index)) {
    return "turn_pair is not \"" + turn_pair_label(index) + "\"";
  }
  for (const char* block : {"user_satisfaction", "user_clarity"}) {
    if (!reply.contains(block) || !reply[block].is_object()) {
      return std::string(block) + " missing";
    }
    const auto& b = reply[block];
    if (!is_string(b, "change") || !change_from_string(b["change"].get<std::string>())) {
      return std::string(block) + ".change must be Improve, Not Change or Decrease";
    }
    if (!is_string(b, "explanation")) return std::string(block) + ".explanation missing";
  }
  const auto& sat = reply["user_satisfaction"];
  if (!is_number(sat, "score")) return "user_satisfaction.score missing";
  if (std::abs(sat["score"].get<double>() - expected_score) > 1e-6) {
    return "user_satisfaction.score does not echo " + format_number(expected_score);
  }
  return std::nullopt;
}

TurnPairJudgment judgment_from_reply(const json& reply, int index) {
  TurnPairJudgment j;
  j.index = index;
  j.turn_pair = reply["turn_pair"].get<std::string>();
  const auto& sat = reply["user_satisfaction"];
  const auto& cla = reply["user_clarity"];
  j.satisfaction_change = *change_from_string(sat["change"].get<std::string>());
  j.score = sat["score"].get<double>();
  j.satisfaction_explanation = sat["explanation"].get<std::string>();
  j.clarity_change = *change_from_string(cla["change"].get<std::string>());
  j.clarity_explanation = cla["explanation"].get<std::string>();
  return j;
}

std::vector<TurnPairJudgment> a2_turn_analysis(const EnhancedDialogue& enhanced,
                                               TextBackend& judge, const JudgeOptions& options) {
  const auto& turns = enhanced.transcript.turns;
  if (turns.size() < 2) throw ContractViolation("a2_turn_analysis needs at least two turns");
  std::vector<TurnPairJudgment> out;
  for (std::size_t i = 0; i + 1 < turns.size(); ++i) {
    const int index = static_cast<int>(i);
    TurnPairJudgment failed;
    failed.index = index;
    failed.turn_pair = turn_pair_label(index);
    failed.failed = true;
    if (!turns[i + 1].hidden.parsed) {
      failed.failure = "next turn has no hidden state";
      out.push_back(failed);
      continue;
    }
    const auto prompt = render_turn_pair_prompt(turns[i], turns[i + 1], index, options.prompts);
    auto request = judge_request(kJudgeSystem, prompt, options);
    const double expected = turns[i + 1].hidden.satisfaction_score;
    std::optional<TurnPairJudgment> accepted;
    std::string reason;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
      if (attempt > 0) request.messages.back().text = prompt.text + retry_note(reason);
      std::string text;
      try {
        text = judge.complete(request).text;
      } catch (const BackendError& e) {
        reason = std::string("judge backend: ") + e.what();
        break;
      }
      const auto parsed = parse_json_reply(text);
      if (!parsed) {
        reason = "reply is not a single JSON value";
        continue;
      }
      if (auto bad = check_judgment_reply(*parsed, index, expected)) {
        reason = *bad;
        continue;
      }
      accepted = judgment_from_reply(*parsed, index);
      break;
    }
    if (accepted) {
      out.push_back(*accepted);
    } else {
      failed.failure = reason;
      out.push_back(failed);
    }
  }
  return out;
}

json judgment_to_json(const TurnPairJudgment& j) {
  json out = {{"turn_pair", j.turn_pair}, {"turn_index", j.index}};
  if (j.failed) {
    out["failed"] = true;
    out["failure"] = j.failure;
    return out;
  }
  out["user_satisfaction"] = {{"change", std::string(to_string(j.satisfaction_change))},
                              {"score", j.score},
                              {"explanation", j.satisfaction_explanation}};
  out["user_clarity"] = {{"change", std::string(to_string(j.clarity_change))},
                         {"explanation", j.clarity_explanation}};
  return out;
}

TurnPairJudgment judgment_from_json(const json& doc) {
  const std::string where = "judgment";
  const int index = need_int(doc, "turn_index", where);
  if (doc.contains("failed") && doc["failed"].is_boolean() && doc["failed"].get<bool>()) {
    TurnPairJudgment j;
    j.index = index;
    j.turn_pair = need_string(doc, "turn_pair", where);
    j.failed = true;
    j.failure = need_string(doc, "failure", where);
    return j;
  }
  if (!doc.contains("user_satisfaction") || !is_number(doc["user_satisfaction"], "score")) {
    throw ValidationError("judgment.user_satisfaction.score is missing");
  }
  const double score = doc["user_satisfaction"]["score"].get<double>();
  if (auto bad = check_judgment_reply(doc, index, score)) {
    throw ValidationError("judgment: " + *bad);
  }
  return judgment_from_reply(doc, index);
}

// ---------------------------------------------------------------------------
// A3

SummaryStatistics local_summary_statistics(const Transcript& transcript) {
  const auto st = satisfaction_stats(transcript.satisfaction_scores());
  return {st.average, st.min, st.max, st.variance};
}

std::vector<ImportantTurn> local_important_turns(const Transcript& transcript, double threshold) {
  std::vector<ImportantTurn> out;
  const auto& turns = transcript.turns;
  for (std::size_t t = 1; t < turns.size(); ++t) {
    const double before = turns[t - 1].hidden.satisfaction_score;
    const double after = turns[t].hidden.satisfaction_score;
    // A small epsilon keeps 0.7 - 0.5 on the threshold.
    if (std::abs(after - before) + 1e-12 >= threshold) {
      out.push_back({turns[t].index, turns[t].user_message, before, after, after - before, ""});
    }
  }
  return out;
}

std::optional<std::string> summary_from_reply(const json& reply, const Transcript& transcript,
                                              const SummaryOptions& options,
                                              DialogueSummary& out) {
  if (!reply.is_object()) return "reply is not a JSON object";
  for (const char* key : {"summary_overall", "topics_covered", "statistics",
                          "satisfaction_evolution", "important_turns", "detailed_findings",
                          "contextual_notes", "general_insights"}) {
    if (!reply.contains(key)) return std::string(key) + " missing";
  }
  if (!reply["summary_overall"].is_string()) return "summary_overall must be a string";
  for (const char* key : {"topics_covered", "satisfaction_evolution", "important_turns",
                          "detailed_findings", "contextual_notes", "general_insights"}) {
    if (!reply[key].is_array()) return std::string(key) + " must be an array";
  }
  const auto& stats = reply["statistics"];
  if (!stats.is_object()) return "statistics must be an object";
  for (const char* key : {"average_score", "min_score", "max_score", "score_variance"}) {
    if (!is_number(stats, key)) return std::string("statistics.") + key + " must be a number";
  }
  std::map<int, std::pair<double, std::optional<double>>> evolution;
  bool duplicate_turn = false;
  for (const auto& e : reply["satisfaction_evolution"]) {
    if (!e.is_object() || !e.contains("turn_index") || !e["turn_index"].is_number_integer() ||
        !is_number(e, "score") || !e.contains("delta") ||
        !(e["delta"].is_null() || e["delta"].is_number())) {
      return "satisfaction_evolution entries need turn_index, score and delta";
    }
    std::optional<double> delta;
    if (!e["delta"].is_null()) delta = e["delta"].get<double>();
    duplicate_turn = duplicate_turn || evolution.count(e["turn_index"].get<int>()) > 0;
    evolution[e["turn_index"].get<int>()] = {e["score"].get<double>(), delta};
  }
  std::map<int, std::string> reasons;
  for (const auto& t : reply["important_turns"]) {
    if (!t.is_object() || !t.contains("turn_index") || !t["turn_index"].is_number_integer()) {
      return "important_turns entries need turn_index";
    }
    if (is_string(t, "reason")) reasons[t["turn_index"].get<int>()] = t["reason"].get<std::string>();
  }

  const double tol = options.statistics_tolerance;
  out.summary_overall = reply["summary_overall"].get<std::string>();
  out.topics_covered = text_list(reply["topics_covered"]);
  out.statistics = statistics_from(stats, "statistics");
  out.detailed_findings = reply["detailed_findings"];
  out.contextual_notes = text_list(reply["contextual_notes"]);
  out.general_insights = text_list(reply["general_insights"]);
  out.inconsistencies.clear();

  auto note = [&](std::string what) { out.inconsistencies.push_back(std::move(what)); };
  const auto& local = out.local_statistics;
  const std::pair<const char*, std::pair<double, double>> checks[] = {
      {"average_score", {out.statistics.average_score, local.average_score}},
      {"min_score", {out.statistics.min_score, local.min_score}},
      {"max_score", {out.statistics.max_score, local.max_score}},
      {"score_variance", {out.statistics.score_variance, local.score_variance}},
  };
  for (const auto& [name, values] : checks) {
    if (std::abs(values.first - values.second) > tol) {
      note(std::string("statistics.") + name + " is " + format_number(values.first) +
           ", recomputed " + format_number(values.second));
    }
  }
  if (duplicate_turn || evolution.size() != transcript.turns.size()) {
    note("satisfaction_evolution does not cover every turn exactly once");
  }
  for (const auto& p : out.satisfaction_evolution) {
    auto it = evolution.find(p.turn_index);
    if (it == evolution.end()) continue;
    const bool delta_ok = p.delta ? it->second.second.has_value() &&
                                        std::abs(*it->second.second - *p.delta) <= tol
                                  : !it->second.second.has_value();
    if (std::abs(it->second.first - p.score) > tol || !delta_ok) {
      note("satisfaction_evolution turn " + std::to_string(p.turn_index) + " disagrees");
    }
  }
  for (auto& t : out.important_turns) {
    if (auto it = reasons.find(t.turn_index); it != reasons.end()) t.reason = it->second;
  }

  out.goal_progress.reset();
  if (reply.contains("goal_progress")) {
    const auto& g = reply["goal_progress"];
    std::vector<double> values;
    bool ok = g.is_array() && g.size() == transcript.turns.size();
    for (const auto& v : g) {
      ok = ok && v.is_number() && v.get<double>() >= 0 && v.get<double>() <= 1;
      if (ok) values.push_back(v.get<double>());
    }
    if (ok) {
      out.goal_progress = std::move(values);
    } else {
      note("goal_progress ignored: needs one value in [0,1] per turn");
    }
  }
  out.inconsistent = !out.inconsistencies.empty();
  return std::nullopt;
}

DialogueSummary a3_summarize(const EnhancedDialogue& enhanced,
                             const std::vector<TurnPairJudgment>& /*judgments*/,
                             TextBackend& judge, const SummaryOptions& options) {
  const auto& transcript = enhanced.transcript;
  if (transcript.turns.empty()) throw ContractViolation("a3_summarize needs at least one turn");
  DialogueSummary out;
  out.dialogue_id = transcript.id;
  out.local_statistics = local_summary_statistics(transcript);
  for (std::size_t i = 0; i < transcript.turns.size(); ++i) {
    EvolutionPoint p;
    p.turn_index = transcript.turns[i].index;
    p.score = transcript.turns[i].hidden.satisfaction_score;
    if (i > 0) p.delta = p.score - transcript.turns[i - 1].hidden.satisfaction_score;
    out.satisfaction_evolution.push_back(p);
  }
  out.important_turns =
      local_important_turns(transcript, options.judge.prompts.important_turn_threshold);

  const auto prompt =
      render_summary_prompt(transcript, transcript.id + ".json", options.judge.prompts);
  auto request = judge_request(kJudgeSystem, prompt, options.judge);
  std::string reason;
  for (int attempt = 0; attempt <= options.judge.max_retries; ++attempt) {
    if (attempt > 0) request.messages.back().text = prompt.text + retry_note(reason);
    std::string text;
    try {
      text = judge.complete(request).text;
    } catch (const BackendError& e) {
      reason = std::string("judge backend: ") + e.what();
      break;
    }
    const auto parsed = parse_json_reply(text);
    if (!parsed) {
      reason = "reply is not a single JSON value";
      continue;
    }
    DialogueSummary candidate = out;
    if (auto bad = summary_from_reply(*parsed, transcript, options, candidate)) {
      reason = *bad;
      continue;
    }
    return candidate;
  }
  out.failed = true;
  out.failure = reason;
  return out;
}

json summary_to_json(const DialogueSummary& s) {
  json evolution = json::array();
  for (const auto& p : s.satisfaction_evolution) {
    evolution.push_back(
        {{"turn_index", p.turn_index}, {"score", p.score}, {"delta", optional_number(p.delta)}});
  }
  json important = json::array();
  for (const auto& t : s.important_turns) {
    important.push_back({{"turn_index", t.turn_index},
                         {"user_message", t.user_message},
                         {"score_before", t.score_before},
                         {"score_after", t.score_after},
                         {"change", t.change},
                         {"reason", t.reason}});
  }
  json out = {{"dialogue_id", s.dialogue_id},
              {"summary_overall", s.summary_overall},
              {"topics_covered", s.topics_covered},
              {"statistics", statistics_json(s.statistics)},
              {"satisfaction_evolution", evolution},
              {"important_turns", important},
              {"detailed_findings", s.detailed_findings},
              {"contextual_notes", s.contextual_notes},
              {"general_insights", s.general_insights},
              {"local_statistics", statistics_json(s.local_statistics)},
              {"inconsistent", s.inconsistent},
              {"inconsistencies", s.inconsistencies},
              {"failed", s.failed}};
  if (s.goal_progress) out["goal_progress"] = *s.goal_progress;
  if (s.failed) out["failure"] = s.failure;
  return out;
}

DialogueSummary summary_from_json(const json& doc) {
  const std::string where = "summary";
  DialogueSummary s;
  s.dialogue_id = need_string(doc, "dialogue_id", where);
  s.summary_overall = need_string(doc, "summary_overall", where);
  s.topics_covered = need_strings(doc, "topics_covered", where);
  s.statistics = statistics_from(need(doc, "statistics", where), where + ".statistics");
  s.local_statistics =
      statistics_from(need(doc, "local_statistics", where), where + ".local_statistics");
  const auto& evolution = need(doc, "satisfaction_evolution", where);
  if (!evolution.is_array()) throw ValidationError("summary.satisfaction_evolution must be an array");
  for (const auto& e : evolution) {
    EvolutionPoint p;
    p.turn_index = need_int(e, "turn_index", where + ".satisfaction_evolution");
    p.score = need_number(e, "score", where + ".satisfaction_evolution");
    const auto& d = need(e, "delta", where + ".satisfaction_evolution");
    if (!d.is_null()) p.delta = d.get<double>();
    s.satisfaction_evolution.push_back(p);
  }
  const auto& important = need(doc, "important_turns", where);
  if (!important.is_array()) throw ValidationError("summary.important_turns must be an array");
  for (const auto& t : important) {
    const std::string w = where + ".important_turns";
    s.important_turns.push_back({need_int(t, "turn_index", w), need_string(t, "user_message", w),
                                 need_number(t, "score_before", w),
                                 need_number(t, "score_after", w), need_number(t, "change", w),
                                 need_string(t, "reason", w)});
  }
  s.detailed_findings = need(doc, "detailed_findings", where);
  s.contextual_notes = need_strings(doc, "contextual_notes", where);
  s.general_insights = need_strings(doc, "general_insights", where);
  if (doc.contains("goal_progress")) s.goal_progress = doc["goal_progress"].get<std::vector<double>>();
  s.inconsistent = need_bool(doc, "inconsistent", where);
  s.inconsistencies = need_strings(doc, "inconsistencies", where);
  s.failed = need_bool(doc, "failed", where);
  if (s.failed) s.failure = need_string(doc, "failure", where);
  return s;
}

// ---------------------------------------------------------------------------
// Knowledge base

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0;
  double na = 0;
  double nb = 0;
  for (const auto& [_, w] : a) na += w * w;
  for (const auto& [_, w] : b) nb += w * w;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first == b[j].first) {
      dot += a[i++].second * b[j++].second;
    } else if (a[i].first < b[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  if (na == 0 || nb == 0) return 0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

std::string knowledge_text(const EnhancedDialogue& enhanced, const DialogueSummary& summary) {
  std::string out = summary.summary_overall;
  auto add = [&out](const std::vector<std::string>& values) {
    for (const auto& v : values) out += "\n" + v;
  };
  add(summary.topics_covered);
  add(summary.general_insights);
  add(summary.contextual_notes);
  out += "\n" + enhanced.profile.task.category + "\n" + enhanced.profile.task.task_name;
  add(private_attribute_values(enhanced.profile));
  return out;
}

KnowledgeBase KnowledgeBase::build(std::vector<Document> documents) {
  if (documents.empty()) throw ContractViolation("knowledge base needs at least one record");
  std::sort(documents.begin(), documents.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < documents.size(); ++i) {
    if (documents[i].id == documents[i - 1].id) {
      throw ContractViolation("duplicate knowledge base id '" + documents[i].id + "'");
    }
  }
  std::vector<std::map<std::string, int>> counts;
  std::map<std::string, int> df;
  for (const auto& d : documents) {
    std::map<std::string, int> tf;
    for (auto& tok : tokenize(d.text)) ++tf[tok];
    for (const auto& [term, _] : tf) ++df[term];
    counts.push_back(std::move(tf));
  }
  KnowledgeBase kb;
  const auto n = static_cast<double>(documents.size());
  for (const auto& [term, f] : df) {
    kb.vocabulary_.push_back(term);
    kb.idf_.push_back(std::log(1.0 + n / f));
  }
  for (std::size_t i = 0; i < documents.size(); ++i) {
    SparseVector v;
    double norm = 0;
    for (const auto& [term, tf] : counts[i]) {
      const auto id = static_cast<std::uint32_t>(
          std::lower_bound(kb.vocabulary_.begin(), kb.vocabulary_.end(), term) -
          kb.vocabulary_.begin());
      const double w = tf * kb.idf_[id];
      v.emplace_back(id, w);
      norm += w * w;
    }
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (auto& [_, w] : v) w /= norm;
    }
    kb.entries_.push_back({documents[i].id, documents[i].profile_digest, documents[i].text,
                           std::move(v)});
  }
  return kb;
}

KnowledgeBase KnowledgeBase::build(
    const std::vector<std::pair<EnhancedDialogue, DialogueSummary>>& records) {
  std::vector<Document> docs;
  for (const auto& [enhanced, summary] : records) {
    docs.push_back({enhanced.transcript.id, enhanced.profile_digest,
                    knowledge_text(enhanced, summary)});
  }
  return build(std::move(docs));
}

SparseVector KnowledgeBase::vectorize(std::string_view text) const {
  std::map<std::uint32_t, int> tf;
  for (const auto& tok : tokenize(text)) {
    auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), tok);
    if (it != vocabulary_.end() && *it == tok) {
      ++tf[static_cast<std::uint32_t>(it - vocabulary_.begin())];
    }
  }
  SparseVector v;
  double norm = 0;
  for (const auto& [id, count] : tf) {
    const double w = count * idf_[id];
    v.emplace_back(id, w);
    norm += w * w;
  }
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (auto& [_, w] : v) w /= norm;
  }
  return v;
}

std::vector<KbHit> KnowledgeBase::retrieve(std::string_view query, std::size_t k) const {
  if (k < 1) throw ContractViolation("retrieve needs k >= 1");
  if (entries_.empty()) throw ContractViolation("knowledge base is empty");
  const auto q = vectorize(query);
  std::vector<KbHit> hits;
  hits.reserve(entries_.size());
  for (const auto& e : entries_) hits.push_back({e.id, cosine(q, e.vector)});
  std::stable_sort(hits.begin(), hits.end(), [](const KbHit& a, const KbHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  hits.resize(std::min(k, hits.size()));
  return hits;
}

json KnowledgeBase::to_json() const {
  json vocab = json::array();
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    vocab.push_back({{"term", vocabulary_[i]}, {"idf", idf_[i]}});
  }
  json entries = json::array();
  for (const auto& e : entries_) {
    json vec = json::array();
    for (const auto& [id, w] : e.vector) vec.push_back(json::array({id, w}));
    entries.push_back(
        {{"id", e.id}, {"profile_digest", e.profile_digest}, {"text", e.text}, {"vector", vec}});
  }
  return {{"vectorizer", "tfidf-ln1p"}, {"vocabulary", vocab}, {"entries", entries}};
}

KnowledgeBase KnowledgeBase::from_json(const json& doc) {
  const std::string where = "knowledge_base";
  KnowledgeBase kb;
  const auto& vocab = need(doc, "vocabulary", where);
  if (!vocab.is_array()) throw ValidationError("knowledge_base.vocabulary must be an array");
  for (const auto& v : vocab) {
    kb.vocabulary_.push_back(need_string(v, "term", where + ".vocabulary"));
    kb.idf_.push_back(need_number(v, "idf", where + ".vocabulary"));
  }
  if (!std::is_sorted(kb.vocabulary_.begin(), kb.vocabulary_.end())) {
    throw ValidationError("knowledge_base.vocabulary must be sorted");
  }
  const auto& entries = need(doc, "entries", where);
  if (!entries.is_array()) throw ValidationError("knowledge_base.entries must be an array");
  for (const auto& e : entries) {
    KbEntry entry;
    entry.id = need_string(e, "id", where + ".entries");
    entry.profile_digest = need_string(e, "profile_digest", where + ".entries");
    entry.text = need_string(e, "text", where + ".entries");
    for (const auto& pair : need(e, "vector", where + ".entries")) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
          !pair[1].is_number() || pair[0].get<std::size_t>() >= kb.vocabulary_.size()) {
        throw ValidationError("knowledge_base.entries.vector holds [term id, weight] pairs");
      }
      entry.vector.emplace_back(pair[0].get<std::uint32_t>(), pair[1].get<double>());
    }
    kb.entries_.push_back(std::move(entry));
  }
  return kb;
}

// ---------------------------------------------------------------------------
// Refinement

int next_refined_version(const std::filesystem::path& root) {
  const auto dir = root / "prompts" / "refined";
  int highest = 0;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return 1;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() < 6 || name.front() != 'v' || entry.path().extension() != ".txt") continue;
    const auto digits = name.substr(1, name.size() - 5);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(),
                                       [](char c) { return c >= '0' && c <= '9'; })) {
      continue;
    }
    highest = std::max(highest, std::stoi(digits));
  }
  return highest + 1;
}

std::vector<std::string> leaked_values(std::string_view text,
                                       const std::vector<const UserProfile*>& profiles,
                                       std::size_t min_length) {
  std::set<std::string> found;
  for (const auto* p : profiles) {
    for (const auto& v : private_attribute_values(*p)) {
      if (v.size() >= min_length && text.find(v) != std::string_view::npos) found.insert(v);
    }
  }
  return {found.begin(), found.end()};
}

RefineResult refine_prompt(const std::vector<std::pair<EnhancedDialogue, DialogueSummary>>& records,
                           TextBackend& judge, const std::filesystem::path& root,
                           const RefineOptions& options) {
  std::vector<const std::pair<EnhancedDialogue, DialogueSummary>*> usable;
  for (const auto& r : records) {
    if (!r.second.failed) usable.push_back(&r);
  }
  if (usable.empty()) throw ContractViolation("refine_prompt needs at least one summarized record");

  std::vector<std::string> insights;
  std::set<std::string> seen;
  std::vector<std::string> excerpts;
  std::vector<const UserProfile*> profiles;
  json sources = json::array();
  for (const auto* r : usable) {
    profiles.push_back(&r->first.profile);
    sources.push_back(r->first.transcript.id);
    for (const auto& i : r->second.general_insights) {
      if (seen.insert(i).second) insights.push_back(i);
    }
    for (const auto& t : r->second.important_turns) {
      if (excerpts.size() >= options.max_excerpts) break;
      std::string line = "turn " + std::to_string(t.turn_index) + ": score " +
                         format_number(t.score_before) + " -> " + format_number(t.score_after) +
                         " after \"" + t.user_message + "\"";
      if (!t.reason.empty()) line += " (" + t.reason + ")";
      excerpts.push_back(std::move(line));
    }
  }

  const std::string current =
      !options.current_prompt.empty()
          ? options.current_prompt
          : render_agent_system_prompt(usable.front()->first.profile.task, nullptr, false,
                                       options.judge.prompts)
                .text;
  const auto prompt = render_refine_prompt(current, insights, excerpts, options.judge.prompts);
  const auto request = judge_request(kRefineSystem, prompt, options.judge);

  RefineResult result;
  std::string text;
  try {
    text = trim(judge.complete(request).text);
  } catch (const BackendError& e) {
    result.backend_failed = true;
    result.warnings.push_back(std::string("refinement skipped: judge backend failed: ") + e.what());
    return result;
  }
  if (text.empty()) {
    result.warnings.push_back("refinement skipped: empty reply");
    return result;
  }
  const auto leaks = leaked_values(text, profiles);
  if (!leaks.empty()) {
    result.warnings.push_back("refinement rejected: reply repeats " +
                              std::to_string(leaks.size()) + " private attribute value(s)");
    return result;
  }

  result.version = next_refined_version(root);
  const auto dir = root / "prompts" / "refined";
  std::filesystem::create_directories(dir);
  const auto stem = "v" + std::to_string(result.version);
  result.path = dir / (stem + ".txt");
  result.prompt = text;
  {
    std::ofstream out(result.path, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write " + result.path.string());
  }
  const json provenance = {{"version", result.version},
                           {"judge_backend", judge.id()},
                           {"template", prompt.provenance()},
                           {"source_dialogues", sources},
                           {"insight_count", insights.size()},
                           {"excerpt_count", excerpts.size()},
                           {"prompt_digest", hex_digest(text)}};
  std::ofstream meta(dir / (stem + ".json"), std::ios::binary);
  meta << provenance.dump(2) << '\n';
  result.stored = true;
  return result;
}

}  // namespace asymdial
