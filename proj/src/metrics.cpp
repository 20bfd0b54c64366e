// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "asymdial/error.hpp"

namespace asymdial {

using nlohmann::json;

std::string_view to_string(Change change) {
  switch (change) {
    case Change::improve: return "Improve";
    case Change::not_change: return "Not Change";
    case Change::decrease: return "Decrease";
  }
  return "Not Change";
}

std::optional<Change> change_from_string(std::string_view text) {
  if (text == "Improve") return Change::improve;
  if (text == "Not Change") return Change::not_change;
  if (text == "Decrease") return Change::decrease;
  return std::nullopt;
}

std::string turn_pair_label(int index) {
  return "Turn " + std::to_string(index) + " -> Turn " + std::to_string(index + 1);
}

// ---------------------------------------------------------------------------
// Satisfaction

SatisfactionStats satisfaction_stats(std::span<const double> scores) {
  if (scores.empty()) throw ContractViolation("satisfaction series is empty");
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ContractViolation("satisfaction score outside [0,1]");
  }
  const auto n = static_cast<double>(scores.size());
  // Shifted sums keep constant series exact.
  const double k = scores.front();
  double sum_d = 0;
  double sum_d2 = 0;
  for (double s : scores) {
    sum_d += s - k;
    sum_d2 += (s - k) * (s - k);
  }
  SatisfactionStats st;
  st.final = scores.back();
  st.average = k + sum_d / n;
  st.variance = std::max(0.0, (sum_d2 - sum_d * sum_d / n) / n);
  st.min = *std::min_element(scores.begin(), scores.end());
  st.max = *std::max_element(scores.begin(), scores.end());
  if (scores.size() > 1) {
    const double x_mean = (n - 1) / 2;
    const double d_mean = sum_d / n;
    double sxy = 0;
    double sxx = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double dx = static_cast<double>(i) - x_mean;
      sxy += dx * ((scores[i] - k) - d_mean);
      sxx += dx * dx;
    }
    st.trend = sxy / sxx;
  }
  return st;
}

DialogueRates dialogue_rates(const std::vector<std::vector<double>>& series,
                             double high_threshold) {
  if (series.empty()) throw ContractViolation("dialogue_rates needs at least one dialogue");
  std::size_t high = 0;
  std::size_t improved = 0;
  for (const auto& s : series) {
    const auto st = satisfaction_stats(s);
    if (st.average >= high_threshold) ++high;
    if (s.back() > s.front()) ++improved;
  }
  const auto n = static_cast<double>(series.size());
  return {100.0 * static_cast<double>(high) / n, 100.0 * static_cast<double>(improved) / n,
          series.size()};
}

DialogueRates dialogue_rates(const std::vector<Transcript>& transcripts, double high_threshold) {
  std::vector<std::vector<double>> series;
  series.reserve(transcripts.size());
  for (const auto& t : transcripts) series.push_back(t.satisfaction_scores());
  return dialogue_rates(series, high_threshold);
}

// ---------------------------------------------------------------------------
// Clarity

double intent_evolution(double previous_clarity, double current_clarity) {
  return current_clarity - previous_clarity;
}

double apply_clarity_change(double clarity, Change change, double step) {
  double next = clarity;
  if (change == Change::improve) next += step;
  if (change == Change::decrease) next -= step;
  return std::clamp(next, 0.0, 1.0);
}

std::vector<double> clarity_trajectory(const std::vector<TurnPairJudgment>& judgments,
                                       double initial, double step) {
  std::vector<double> out{std::clamp(initial, 0.0, 1.0)};
  for (const auto& j : judgments) {
    out.push_back(j.failed ? out.back() : apply_clarity_change(out.back(), j.clarity_change, step));
  }
  return out;
}

void ClarityWeights::validate() const {
  if (w1 < 0 || w2 < 0 || w3 < 0) throw ValidationError("clarity weights must be >= 0");
  if (std::abs(w1 + w2 + w3 - 1.0) > 1e-9) throw ValidationError("clarity weights must sum to 1");
}

double clarity_score(double delta_clarity, double delta_satisfaction, double goal_progress,
                     const ClarityWeights& weights) {
  return weights.w1 * delta_clarity + weights.w2 * delta_satisfaction + weights.w3 * goal_progress;
}

double normalized_mean_clarity(std::span<const double> clarity_scores,
                               const ClarityWeights& weights) {
  double mean = 0;
  for (double c : clarity_scores) mean += c;
  if (!clarity_scores.empty()) mean /= static_cast<double>(clarity_scores.size());
  const double low = -(weights.w1 + weights.w2);
  return std::clamp((mean - low) / (1.0 - low), 0.0, 1.0);
}

void PerformanceWeights::validate() const {
  if (u1 < 0 || u2 < 0 || u3 < 0) throw ValidationError("performance weights must be >= 0");
  if (std::abs(u1 + u2 + u3 - 1.0) > 1e-9) {
    throw ValidationError("performance weights must sum to 1");
  }
  if (!(reference_turns > 0)) throw ValidationError("reference turns must be > 0");
}

double performance_score(double normalized_mean, int turn_count, double final_satisfaction,
                         const PerformanceWeights& weights) {
  if (turn_count < 1) throw ContractViolation("performance_score needs turn_count >= 1");
  const double efficiency = std::min(1.0, weights.reference_turns / turn_count);
  return weights.u1 * normalized_mean + weights.u2 * efficiency +
         weights.u3 * final_satisfaction;
}

double performance_score(std::span<const double> clarity_scores, int turn_count,
                         double final_satisfaction, const ClarityWeights& clarity_weights,
                         const PerformanceWeights& weights) {
  return performance_score(normalized_mean_clarity(clarity_scores, clarity_weights), turn_count,
                           final_satisfaction, weights);
}

// ---------------------------------------------------------------------------
// SSA and Clarify

void SsaWeights::validate() const {
  if (alpha < 0 || beta < 0) throw ValidationError("SSA weights must be >= 0");
  if (std::abs(alpha + beta - 1.0) > 1e-9) throw ValidationError("SSA weights must sum to 1");
  if (!(lambda > 0)) throw ValidationError("SSA lambda must be > 0");
}

double ssa(double s_avg, double c_clarify, const SsaWeights& w, SsaMode mode) {
  if (mode == SsaMode::maintext) return w.lambda * (w.alpha * s_avg + w.beta * c_clarify);
  return w.alpha * (s_avg * w.lambda) + w.beta * c_clarify;
}

std::string_view to_string(SsaMode mode) {
  return mode == SsaMode::appendix ? "appendix" : "maintext";
}

SsaMode ssa_mode_from_string(std::string_view text) {
  if (text == "appendix") return SsaMode::appendix;
  if (text == "maintext") return SsaMode::maintext;
  throw ValidationError("ssa mode must be appendix or maintext");
}

double clarify_score(const std::vector<TurnPairJudgment>& judgments) {
  std::size_t pairs = 0;
  double credit = 0;
  for (const auto& j : judgments) {
    if (j.failed) continue;
    ++pairs;
    if (j.clarity_change == Change::improve) credit += 1.0;
    if (j.clarity_change == Change::not_change) credit += 0.5;
  }
  if (pairs == 0) throw ContractViolation("clarify_score needs at least one usable judgment");
  return 10.0 * credit / static_cast<double>(pairs);
}

double clarify_score(const Transcript& transcript, const std::vector<TurnPairJudgment>& judgments) {
  if (transcript.turns.empty() || judgments.size() != transcript.turns.size() - 1) {
    throw ContractViolation("judgments must cover every consecutive turn pair");
  }
  return clarify_score(judgments);
}

std::vector<double> goal_progress_fallback(const Transcript& transcript,
                                           const UserProfile& profile) {
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  std::vector<std::string> criteria;
  for (const auto& c : profile.specifics.must_meet) {
    if (c != kUnknown && c != kUnknownNotSure && !c.empty()) criteria.push_back(lower(c));
  }
  std::vector<bool> met(criteria.size(), false);
  std::vector<double> out;
  for (const auto& turn : transcript.turns) {
    const std::string text = lower(turn.assistant_message);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      if (!met[i] && text.find(criteria[i]) != std::string::npos) met[i] = true;
      if (met[i]) ++hits;
    }
    out.push_back(criteria.empty() ? 0.0
                                   : static_cast<double>(hits) /
                                         static_cast<double>(criteria.size()));
  }
  return out;
}

void MetricsConfig::validate() const {
  clarity.validate();
  performance.validate();
  ssa.validate();
  if (!(high_threshold >= 0 && high_threshold <= 1)) {
    throw ValidationError("high threshold must be in [0,1]");
  }
  if (!(clarity_step > 0)) throw ValidationError("clarity step must be > 0");
}

json MetricsConfig::to_json() const {
  return {
      {"high_threshold", high_threshold},
      {"rates_unit", "per-dialogue percent"},
      {"clarity_weights", {{"w1", clarity.w1}, {"w2", clarity.w2}, {"w3", clarity.w3}}},
      {"performance_weights",
       {{"u1", performance.u1},
        {"u2", performance.u2},
        {"u3", performance.u3},
        {"reference_turns", performance.reference_turns}}},
      {"ssa_weights", {{"alpha", ssa.alpha}, {"beta", ssa.beta}, {"lambda", ssa.lambda}}},
      {"ssa_mode", std::string(to_string(ssa_mode))},
      {"initial_clarity", initial_clarity},
      {"clarity_step", clarity_step},
  };
}

DialogueMetrics compute_dialogue_metrics(const Transcript& transcript, const UserProfile* profile,
                                         const std::vector<TurnPairJudgment>& judgments,
                                         const MetricsConfig& config,
                                         const std::vector<double>* goal_progress) {
  DialogueMetrics m;
  m.id = transcript.id;
  m.turn_count = transcript.turns.size();
  const auto scores = transcript.satisfaction_scores();
  m.stats = satisfaction_stats(scores);
  const bool judged = !judgments.empty() && judgments.size() + 1 == transcript.turns.size();
  if (judged) {
    try {
      m.clarify = clarify_score(transcript, judgments);
    } catch (const ContractViolation&) {
    }
  }
  if (!judged && transcript.turns.size() != 1) return m;

  m.clarity = clarity_trajectory(judged ? judgments : std::vector<TurnPairJudgment>{},
                                 config.initial_clarity, config.clarity_step);
  std::vector<double> goals;
  if (goal_progress && goal_progress->size() == transcript.turns.size()) {
    goals = *goal_progress;
  } else if (profile) {
    goals = goal_progress_fallback(transcript, *profile);
  } else {
    goals.assign(transcript.turns.size(), 0.0);
  }
  for (std::size_t t = 1; t < transcript.turns.size(); ++t) {
    m.clarity_scores.push_back(clarity_score(intent_evolution(m.clarity[t - 1], m.clarity[t]),
                                             scores[t] - scores[t - 1], goals[t],
                                             config.clarity));
  }
  m.performance = performance_score(m.clarity_scores, static_cast<int>(m.turn_count),
                                    m.stats.final, config.clarity, config.performance);
  return m;
}

// ---------------------------------------------------------------------------
// Reports

const ReportCell* CorpusReport::find(const CellKey& key) const {
  for (const auto& c : cells) {
    if (c.key == key) return &c;
  }
  return nullptr;
}

CorpusReport build_report(const std::vector<CorpusEntry>& corpus, const MetricsConfig& config) {
  config.validate();
  std::map<CellKey, std::vector<const CorpusEntry*>> groups;
  for (const auto& e : corpus) groups[e.key].push_back(&e);

  CorpusReport report;
  report.config = config;
  report.source = "corpus";
  for (const auto& [key, entries] : groups) {
    ReportCell cell;
    cell.key = key;
    cell.dialogue_count = entries.size();
    if (entries.empty()) {
      report.cells.push_back(cell);
      continue;
    }
    std::vector<std::vector<double>> series;
    double avg_sum = 0;
    double clarify_sum = 0;
    std::size_t clarify_n = 0;
    double perf_sum = 0;
    std::size_t perf_n = 0;
    for (const auto* e : entries) {
      const auto* goals = e->goal_progress ? &*e->goal_progress : nullptr;
      const auto m = compute_dialogue_metrics(e->transcript, e->profile ? &*e->profile : nullptr,
                                              e->judgments, config, goals);
      series.push_back(e->transcript.satisfaction_scores());
      avg_sum += m.stats.average;
      if (m.clarify) {
        clarify_sum += *m.clarify;
        ++clarify_n;
      }
      if (m.performance) {
        perf_sum += *m.performance;
        ++perf_n;
      }
    }
    const auto rates = dialogue_rates(series, config.high_threshold);
    cell.average_satisfaction = avg_sum / static_cast<double>(entries.size());
    cell.high_satisfaction_rate = rates.high_satisfaction_rate;
    cell.improved_satisfaction_rate = rates.improved_satisfaction_rate;
    if (clarify_n) cell.clarify = clarify_sum / static_cast<double>(clarify_n);
    if (perf_n) cell.performance = perf_sum / static_cast<double>(perf_n);
    if (cell.clarify) {
      cell.ssa = ssa(*cell.average_satisfaction, *cell.clarify, config.ssa, config.ssa_mode);
    }
    report.cells.push_back(cell);
  }
  return report;
}

namespace {

std::optional<double> optional_number(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
  if (!doc[key].is_number()) throw ValidationError(where + "." + key + " must be a number");
  return doc[key].get<double>();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell_text(const std::optional<double>& v, int decimals, bool percent) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, percent ? "%.*f%%" : "%.*f", decimals, *v);
  return buf;
}

}  // namespace

CorpusReport report_from_recorded(const json& doc, const MetricsConfig& config) {
  config.validate();
  if (!doc.is_object() || !doc.contains("cells") || !doc["cells"].is_array()) {
    throw ValidationError("recorded inputs need a \"cells\" array");
  }
  CorpusReport report;
  report.config = config;
  report.source = "recorded";
  for (std::size_t i = 0; i < doc["cells"].size(); ++i) {
    const auto& c = doc["cells"][i];
    const std::string where = "cells[" + std::to_string(i) + "]";
    if (!c.is_object() || !c.contains("model") || !c["model"].is_string() ||
        !c.contains("uncertainty_percent") || !c["uncertainty_percent"].is_number_integer() ||
        !c.contains("share_profile") || !c["share_profile"].is_boolean()) {
      throw ValidationError(where + " needs model, uncertainty_percent and share_profile");
    }
    ReportCell cell;
    cell.key = {c["model"].get<std::string>(),
                UncertaintyLevel::from_percent(c["uncertainty_percent"].get<int>()).percent(),
                c["share_profile"].get<bool>()};
    if (c.contains("dialogue_count")) cell.dialogue_count = c["dialogue_count"].get<std::size_t>();
    cell.average_satisfaction = optional_number(c, "average_satisfaction", where);
    cell.high_satisfaction_rate = optional_number(c, "high_satisfaction_rate", where);
    cell.improved_satisfaction_rate = optional_number(c, "improved_satisfaction_rate", where);
    cell.clarify = optional_number(c, "clarify", where);
    cell.performance = optional_number(c, "performance", where);
    cell.published_ssa = optional_number(c, "published_ssa", where);
    if (cell.average_satisfaction && cell.clarify) {
      cell.ssa = ssa(*cell.average_satisfaction, *cell.clarify, config.ssa, config.ssa_mode);
    }
    if (report.find(cell.key)) throw ValidationError(where + " repeats a condition");
    report.cells.push_back(cell);
  }
  std::sort(report.cells.begin(), report.cells.end(),
            [](const ReportCell& a, const ReportCell& b) { return a.key < b.key; });
  return report;
}

json CorpusReport::to_json() const {
  json out;
  out["source"] = source;
  out["config"] = config.to_json();
  out["cells"] = json::array();
  for (const auto& c : cells) {
    json cell = {
        {"model", c.key.model},
        {"uncertainty_percent", c.key.uncertainty},
        {"share_profile", c.key.share_profile},
        {"dialogue_count", c.dialogue_count},
        {"average_satisfaction", optional_json(c.average_satisfaction)},
        {"high_satisfaction_rate", optional_json(c.high_satisfaction_rate)},
        {"improved_satisfaction_rate", optional_json(c.improved_satisfaction_rate)},
        {"clarify_score", optional_json(c.clarify)},
        {"ssa_score", optional_json(c.ssa)},
        {"performance_score", optional_json(c.performance)},
    };
    if (c.published_ssa) cell["published_ssa"] = *c.published_ssa;
    out["cells"].push_back(cell);
  }
  return out;
}

std::string CorpusReport::to_table() const {
  std::map<std::pair<std::string, int>, std::pair<const ReportCell*, const ReportCell*>> rows;
  bool any_published = false;
  for (const auto& c : cells) {
    auto& slot = rows[{c.key.model, c.key.uncertainty}];
    (c.key.share_profile ? slot.first : slot.second) = &c;
    any_published = any_published || c.published_ssa.has_value();
  }
  std::size_t model_width = 5;
  for (const auto& [key, _] : rows) model_width = std::max(model_width, key.first.size());

  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  auto left = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  const std::vector<std::string> metric_heads = {"Avg", "High", "Impr", "Clarify", "SSA"};
  std::string out = left("", model_width) + "      " + left(" | w/ Profile", 43) +
                    " | w/o Profile\n";
  out += left("Model", model_width) + "  Unc ";
  for (int side = 0; side < 2; ++side) {
    out += " |";
    for (const auto& h : metric_heads) out += pad(h, 8);
  }
  if (any_published) out += " | Pub SSA";
  out += '\n';
  out += std::string(out.size() - out.rfind('\n', out.size() - 2) - 2, '-') + '\n';
  for (const auto& [key, pair] : rows) {
    out += left(key.first, model_width) + pad(std::to_string(key.second) + "%", 5) + " ";
    for (const ReportCell* c : {pair.first, pair.second}) {
      out += " |";
      if (!c) {
        for (std::size_t i = 0; i < metric_heads.size(); ++i) out += pad("-", 8);
        continue;
      }
      out += pad(cell_text(c->average_satisfaction, 2, false), 8);
      out += pad(cell_text(c->high_satisfaction_rate, 1, true), 8);
      out += pad(cell_text(c->improved_satisfaction_rate, 1, true), 8);
      out += pad(cell_text(c->clarify, 2, false), 8);
      out += pad(cell_text(c->ssa, 2, false), 8);
    }
    if (any_published) {
      const ReportCell* c = pair.second ? pair.second : pair.first;
      out += " |" + pad(cell_text(c ? c->published_ssa : std::nullopt, 2, false), 8);
    }
    out += '\n';
  }
  return out;
}

}  // namespace asymdial
