// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asymdial/judgment.hpp"
#include "asymdial/profiles.hpp"
#include "asymdial/transcript.hpp"

namespace asymdial {

struct SatisfactionStats {
  double final = 0;
  double average = 0;
  double trend = 0;     // least-squares slope per turn
  double min = 0;
  double max = 0;
  double variance = 0;  // population

  bool operator==(const SatisfactionStats&) const = default;
};

// Throws ContractViolation on an empty series or a score outside [0,1].
SatisfactionStats satisfaction_stats(std::span<const double> scores);

struct DialogueRates {
  double high_satisfaction_rate = 0;      // percent of dialogues
  double improved_satisfaction_rate = 0;  // percent of dialogues
  std::size_t dialogue_count = 0;
};

// High: per-dialogue average >= high_threshold. Improved: final > first.
// Throws ContractViolation on an empty list.
DialogueRates dialogue_rates(const std::vector<std::vector<double>>& series,
                             double high_threshold = 0.8);
DialogueRates dialogue_rates(const std::vector<Transcript>& transcripts,
                             double high_threshold = 0.8);

// Δ_t(h) = h_t - h_{t-1}.
double intent_evolution(double previous_clarity, double current_clarity);

// Moves a clarity value one step up (Improve) or down (Decrease), clamped to
// [0,1].
double apply_clarity_change(double clarity, Change change, double step = 0.1);

// Clarity per turn: turn 0 starts at `initial`, each judged pair moves the
// next turn. Failed pairs count as Not Change. Size = judgments.size() + 1.
std::vector<double> clarity_trajectory(const std::vector<TurnPairJudgment>& judgments,
                                       double initial = 0.5, double step = 0.1);

struct ClarityWeights {
  double w1 = 0.5;  // intent evolution
  double w2 = 0.3;  // satisfaction change
  double w3 = 0.2;  // goal progress

  // Throws ValidationError unless all >= 0 and summing to 1 (within 1e-9).
  void validate() const;
};

// C = w1·Δh + w2·Δs + w3·g.
double clarity_score(double delta_clarity, double delta_satisfaction, double goal_progress,
                     const ClarityWeights& weights = {});

// Maps the mean of clarity scores from [-(w1+w2), 1] onto [0,1]. An empty
// list counts as a mean of 0 (no change, no progress).
double normalized_mean_clarity(std::span<const double> clarity_scores,
                               const ClarityWeights& weights = {});

struct PerformanceWeights {
  double u1 = 0.4;  // mean clarity
  double u2 = 0.3;  // turn efficiency
  double u3 = 0.3;  // final satisfaction
  double reference_turns = 6;

  void validate() const;
};

// E = u1·mean + u2·min(1, T_ref/T) + u3·final. Throws ContractViolation when
// turn_count < 1.
double performance_score(double normalized_mean, int turn_count, double final_satisfaction,
                         const PerformanceWeights& weights = {});
double performance_score(std::span<const double> clarity_scores, int turn_count,
                         double final_satisfaction, const ClarityWeights& clarity_weights,
                         const PerformanceWeights& weights = {});

enum class SsaMode { appendix, maintext };

struct SsaWeights {
  double alpha = 0.7;
  double beta = 0.3;
  double lambda = 7.75;

  void validate() const;
};

// appendix:  alpha·(s_avg·lambda) + beta·c_clarify
// maintext:  lambda·(alpha·s_avg + beta·c_clarify)
double ssa(double s_avg, double c_clarify, const SsaWeights& weights = {},
           SsaMode mode = SsaMode::appendix);

std::string_view to_string(SsaMode mode);
SsaMode ssa_mode_from_string(std::string_view text);

// 10·(n_improve + 0.5·n_not_change) / n_pairs over the clarity verdicts of
// non-failed pairs. Throws ContractViolation when no usable judgment exists
// or the judgment count is not turn count - 1.
double clarify_score(const Transcript& transcript, const std::vector<TurnPairJudgment>& judgments);
double clarify_score(const std::vector<TurnPairJudgment>& judgments);

// Cumulative share of must_meet criteria found (case-insensitive) in the
// assistant messages up to each turn.
std::vector<double> goal_progress_fallback(const Transcript& transcript,
                                           const UserProfile& profile);

struct MetricsConfig {
  double high_threshold = 0.8;
  ClarityWeights clarity;
  PerformanceWeights performance;
  SsaWeights ssa;
  SsaMode ssa_mode = SsaMode::appendix;
  double initial_clarity = 0.5;
  double clarity_step = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
};

struct DialogueMetrics {
  std::string id;
  std::size_t turn_count = 0;
  SatisfactionStats stats;
  std::optional<double> clarify;
  std::vector<double> clarity;          // per turn, when judged
  std::vector<double> clarity_scores;   // C_t per pair, when judged
  std::optional<double> performance;
};

// `judgments` may be empty (not judged); `goal_progress`, when given, holds
// one value per turn and replaces the must_meet fallback.
DialogueMetrics compute_dialogue_metrics(const Transcript& transcript, const UserProfile* profile,
                                         const std::vector<TurnPairJudgment>& judgments,
                                         const MetricsConfig& config,
                                         const std::vector<double>* goal_progress = nullptr);

// ---------------------------------------------------------------------------
// Corpus report

struct CellKey {
  std::string model;
  int uncertainty = 0;
  bool share_profile = false;

  auto operator<=>(const CellKey&) const = default;
  bool operator==(const CellKey&) const = default;
};

struct ReportCell {
  CellKey key;
  std::size_t dialogue_count = 0;
  std::optional<double> average_satisfaction;
  std::optional<double> high_satisfaction_rate;
  std::optional<double> improved_satisfaction_rate;
  std::optional<double> clarify;
  std::optional<double> ssa;
  std::optional<double> performance;
  std::optional<double> published_ssa;  // recorded inputs only
};

struct CorpusReport {
  std::vector<ReportCell> cells;  // sorted by key
  MetricsConfig config;
  std::string source;             // "corpus" or "recorded"

  const ReportCell* find(const CellKey& key) const;
  nlohmann::json to_json() const;
  // Rows are (model, uncertainty); each condition contributes its own columns.
  std::string to_table() const;
};

struct CorpusEntry {
  CellKey key;
  Transcript transcript;
  std::optional<UserProfile> profile;
  std::vector<TurnPairJudgment> judgments;
  std::optional<std::vector<double>> goal_progress;
};

CorpusReport build_report(const std::vector<CorpusEntry>& corpus, const MetricsConfig& config = {});

// Report from recorded per-cell aggregates:
// {"cells": [{model, uncertainty_percent, share_profile, average_satisfaction,
//   high_satisfaction_rate?, improved_satisfaction_rate?, clarify?,
//   dialogue_count?, published_ssa?}]}. SSA is computed wherever both
// average_satisfaction and clarify are present.
CorpusReport report_from_recorded(const nlohmann::json& doc, const MetricsConfig& config = {});

}  // namespace asymdial
