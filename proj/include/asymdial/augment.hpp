// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "asymdial/backends.hpp"
#include "asymdial/judgment.hpp"
#include "asymdial/metrics.hpp"
#include "asymdial/profiles.hpp"
#include "asymdial/prompts.hpp"
#include "asymdial/transcript.hpp"

namespace asymdial {

// ---------------------------------------------------------------------------
// A1: enrichment

struct TurnAnnotation {
  int index = 0;
  std::string emotion;
  std::string intent;
  std::string inner_emotion;
  std::string inner_intent;
  double satisfaction_score = 0.5;
  std::optional<double> satisfaction_delta;  // null on the first turn
  bool satisfaction_defaulted = false;

  bool operator==(const TurnAnnotation&) const = default;
};

struct EnhancedDialogue {
  Transcript transcript;
  UserProfile profile;
  std::string profile_digest;
  int difficulty_level = 1;
  int uncertainty_percent = 0;
  std::vector<std::string> masked_fields;
  std::vector<TurnAnnotation> annotations;  // one per turn
  SatisfactionStats satisfaction;

  bool operator==(const EnhancedDialogue&) const = default;
};

// Throws ContractViolation on an empty transcript.
EnhancedDialogue a1_enhance(const Transcript& transcript, const UserProfile& profile);

nlohmann::json enhanced_to_json(const EnhancedDialogue& enhanced);
// Reads the record back; `transcript` and `profile` travel separately in the
// corpus and are passed in.
EnhancedDialogue enhanced_from_json(const nlohmann::json& doc, const Transcript& transcript,
                                    const UserProfile& profile);

// ---------------------------------------------------------------------------
// A2: turn-pair analysis

struct JudgeOptions {
  int max_retries = 2;
  double temperature = 0.0;
  std::string model_id;
  PromptOptions prompts;
};

// Throws ContractViolation below two turns. Backend errors and replies still
// invalid after the retries become failed judgments.
std::vector<TurnPairJudgment> a2_turn_analysis(const EnhancedDialogue& enhanced,
                                               TextBackend& judge,
                                               const JudgeOptions& options = {});

// Validates one judge reply for pair `index` with expected next-turn score.
// Returns the reason when invalid.
std::optional<std::string> check_judgment_reply(const nlohmann::json& reply, int index,
                                                double expected_score);
TurnPairJudgment judgment_from_reply(const nlohmann::json& reply, int index);

nlohmann::json judgment_to_json(const TurnPairJudgment& judgment);
// Throws ValidationError.
TurnPairJudgment judgment_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// A3: summary

struct SummaryStatistics {
  double average_score = 0;
  double min_score = 0;
  double max_score = 0;
  double score_variance = 0;

  bool operator==(const SummaryStatistics&) const = default;
};

struct EvolutionPoint {
  int turn_index = 0;
  double score = 0;
  std::optional<double> delta;

  bool operator==(const EvolutionPoint&) const = default;
};

struct ImportantTurn {
  int turn_index = 0;
  std::string user_message;
  double score_before = 0;
  double score_after = 0;
  double change = 0;
  std::string reason;

  bool operator==(const ImportantTurn&) const = default;
};

struct DialogueSummary {
  std::string dialogue_id;
  std::string summary_overall;
  std::vector<std::string> topics_covered;
  SummaryStatistics statistics;            // as reported by the judge
  std::vector<EvolutionPoint> satisfaction_evolution;
  std::vector<ImportantTurn> important_turns;
  nlohmann::json detailed_findings = nlohmann::json::array();
  std::vector<std::string> contextual_notes;
  std::vector<std::string> general_insights;
  // Optional per-turn goal progress in [0,1], one value per turn.
  std::optional<std::vector<double>> goal_progress;

  SummaryStatistics local_statistics;
  bool inconsistent = false;
  std::vector<std::string> inconsistencies;
  bool failed = false;
  std::string failure;

  bool operator==(const DialogueSummary&) const = default;
};

struct SummaryOptions {
  JudgeOptions judge;
  double statistics_tolerance = 0.01;
};

// Local statistics use the population variance.
SummaryStatistics local_summary_statistics(const Transcript& transcript);

// Turns t >= 1 with |s_t - s_{t-1}| >= threshold.
std::vector<ImportantTurn> local_important_turns(const Transcript& transcript, double threshold);

// Throws ContractViolation on an empty transcript. An unusable reply after
// the retries gives a failed summary.
DialogueSummary a3_summarize(const EnhancedDialogue& enhanced,
                             const std::vector<TurnPairJudgment>& judgments, TextBackend& judge,
                             const SummaryOptions& options = {});

// Applies the 8-field reply to the local view of the dialogue. Returns the
// reason when the reply lacks a field or has the wrong types.
std::optional<std::string> summary_from_reply(const nlohmann::json& reply,
                                              const Transcript& transcript,
                                              const SummaryOptions& options, DialogueSummary& out);

nlohmann::json summary_to_json(const DialogueSummary& summary);
DialogueSummary summary_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// Knowledge base

// Lowercase ASCII alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;  // sorted by term id

double cosine(const SparseVector& a, const SparseVector& b);

struct KbEntry {
  std::string id;
  std::string profile_digest;
  std::string text;
  SparseVector vector;

  bool operator==(const KbEntry&) const = default;
};

struct KbHit {
  std::string id;
  double similarity = 0;

  bool operator==(const KbHit&) const = default;
};

// Text indexed for one record: summary fields plus profile attribute values.
std::string knowledge_text(const EnhancedDialogue& enhanced, const DialogueSummary& summary);

class KnowledgeBase {
 public:
  struct Document {
    std::string id;
    std::string profile_digest;
    std::string text;
  };

  // tf-idf with idf = ln(1 + N/df), L2-normalized. Entries are kept in id
  // order. Throws ContractViolation on an empty list.
  static KnowledgeBase build(std::vector<Document> documents);
  static KnowledgeBase build(
      const std::vector<std::pair<EnhancedDialogue, DialogueSummary>>& records);

  // Terms outside the vocabulary are ignored.
  SparseVector vectorize(std::string_view text) const;

  // Descending cosine similarity, ties in id order; min(k, size) hits.
  // Throws ContractViolation when k < 1 or the base is empty.
  std::vector<KbHit> retrieve(std::string_view query, std::size_t k) const;

  const std::vector<KbEntry>& entries() const noexcept { return entries_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  const std::vector<double>& idf() const noexcept { return idf_; }

  nlohmann::json to_json() const;
  static KnowledgeBase from_json(const nlohmann::json& doc);

 private:
  std::vector<std::string> vocabulary_;  // sorted
  std::vector<double> idf_;
  std::vector<KbEntry> entries_;
};

// ---------------------------------------------------------------------------
// Prompt refinement

struct RefineOptions {
  JudgeOptions judge;
  // Agent prompt to improve; the agent_default template body when empty.
  std::string current_prompt;
  std::size_t max_excerpts = 20;
};

struct RefineResult {
  bool stored = false;
  int version = 0;
  std::filesystem::path path;
  std::string prompt;
  bool backend_failed = false;
  std::vector<std::string> warnings;
};

// Next free version under <root>/prompts/refined (1 when none).
int next_refined_version(const std::filesystem::path& root);

// Private attribute values (length >= min_length) of any profile found in
// `text`, case-sensitive.
std::vector<std::string> leaked_values(std::string_view text,
                                       const std::vector<const UserProfile*>& profiles,
                                       std::size_t min_length = 4);

// Requests an improved agent system prompt and stores it as
// <root>/prompts/refined/v<N>.txt with a v<N>.json provenance record.
// Throws ContractViolation when no record has a usable summary. Backend
// failure, an empty reply or a leak skip the write with a warning.
RefineResult refine_prompt(const std::vector<std::pair<EnhancedDialogue, DialogueSummary>>& records,
                           TextBackend& judge, const std::filesystem::path& root,
                           const RefineOptions& options = {});

}  // namespace asymdial
