// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include <gtest/gtest.h>

#include "asymdial/error.hpp"
#include "asymdial/metrics.hpp"
#include "asymdial/rng.hpp"

using namespace asymdial;

namespace {

TurnPairJudgment judged(int i, Change clarity, bool failed = false) {
  TurnPairJudgment j;
  j.index = i;
  j.turn_pair = turn_pair_label(i);
  j.clarity_change = clarity;
  j.failed = failed;
  return j;
}

Transcript series(std::vector<double> scores, const std::string& id = "d") {
  Transcript t;
  t.id = id;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    Turn turn;
    turn.index = static_cast<int>(i);
    turn.hidden.satisfaction_score = scores[i];
    turn.assistant_message = "reply";
    t.turns.push_back(turn);
  }
  return t;
}

}  // namespace

TEST(Metrics, SatisfactionStats) {
  const std::vector<double> s = {0.5, 0.7, 0.9};
  const auto st = satisfaction_stats(s);
  EXPECT_DOUBLE_EQ(st.final, 0.9);
  EXPECT_NEAR(st.average, 0.7, 1e-12);
  EXPECT_NEAR(st.trend, 0.2, 1e-12);
  EXPECT_NEAR(st.variance, 0.0266666667, 1e-9);

  const std::vector<double> one = {0.6};
  EXPECT_EQ(satisfaction_stats(one).trend, 0.0);
  EXPECT_EQ(satisfaction_stats(one).variance, 0.0);
  const std::vector<double> flat = {0.8, 0.8, 0.8};
  EXPECT_EQ(satisfaction_stats(flat).trend, 0.0);
  EXPECT_EQ(satisfaction_stats(flat).variance, 0.0);
  EXPECT_THROW(satisfaction_stats(std::vector<double>{}), ContractViolation);
  EXPECT_THROW(satisfaction_stats(std::vector<double>{1.2}), ContractViolation);
}

TEST(Metrics, IncreasingSeriesHasPositiveTrend) {
  SeededRng rng(3);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> s;
    double v = rng.unit() * 0.3;
    for (int i = 0; i < 2 + k % 8; ++i) s.push_back(v += 0.01 + rng.unit() * 0.05);
    EXPECT_GT(satisfaction_stats(s).trend, 0);
  }
}

TEST(Metrics, Rates) {
  const auto r = dialogue_rates(std::vector<std::vector<double>>{{0.85}, {0.75}}, 0.8);
  EXPECT_DOUBLE_EQ(r.high_satisfaction_rate, 50.0);
  const auto flat = dialogue_rates(std::vector<std::vector<double>>{{0.5, 0.9, 0.5}}, 0.8);
  EXPECT_DOUBLE_EQ(flat.improved_satisfaction_rate, 0.0);
  const auto single = dialogue_rates(std::vector<std::vector<double>>{{0.9, 0.95}}, 0.8);
  EXPECT_DOUBLE_EQ(single.high_satisfaction_rate, 100.0);
  EXPECT_DOUBLE_EQ(single.improved_satisfaction_rate, 100.0);
  EXPECT_THROW(dialogue_rates(std::vector<std::vector<double>>{}, 0.8), ContractViolation);
}

TEST(Metrics, RatesMatchRecount) {
  SeededRng rng(150);
  std::vector<std::vector<double>> all;
  int high = 0, improved = 0;
  for (int d = 0; d < 150; ++d) {
    std::vector<double> s;
    for (int i = 0; i < 1 + d % 9; ++i) s.push_back(rng.between(0, 100) / 100.0);
    double sum = 0;
    for (double v : s) sum += v;
    high += sum / s.size() >= 0.8;
    improved += s.back() > s.front();
    all.push_back(s);
  }
  const auto r = dialogue_rates(all, 0.8);
  EXPECT_NEAR(r.high_satisfaction_rate, 100.0 * high / 150, 1e-9);
  EXPECT_NEAR(r.improved_satisfaction_rate, 100.0 * improved / 150, 1e-9);
}

TEST(Metrics, IntentEvolution) {
  EXPECT_NEAR(intent_evolution(0.6, 0.8), 0.2, 1e-12);
  EXPECT_EQ(intent_evolution(0.4, 0.4), 0.0);
  EXPECT_NEAR(apply_clarity_change(0.5, Change::improve), 0.6, 1e-12);
  EXPECT_EQ(apply_clarity_change(1.0, Change::improve), 1.0);
  EXPECT_EQ(apply_clarity_change(0.0, Change::decrease), 0.0);
}

TEST(Metrics, ClarityTrajectoryStaysInRange) {
  SeededRng rng(7);
  for (int k = 0; k < 200; ++k) {
    std::vector<TurnPairJudgment> js;
    for (int i = 0; i < 30; ++i) js.push_back(judged(i, static_cast<Change>(rng.index(3)), rng.bernoulli(0.1)));
    const auto traj = clarity_trajectory(js);
    ASSERT_EQ(traj.size(), 31u);
    for (double v : traj) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Metrics, ClarityScore) {
  EXPECT_EQ(clarity_score(0, 0, 0), 0.0);
  EXPECT_NEAR(clarity_score(0.3, 0.9, 0.9, {1, 0, 0}), 0.3, 1e-12);
  EXPECT_NEAR(clarity_score(0.2, 0.1, 0.5, {0.5, 0.3, 0.2}), 0.23, 1e-12);
  EXPECT_NEAR(clarity_score(0.4, 0.2, 1.0), 2 * clarity_score(0.2, 0.1, 0.5), 1e-12);
  EXPECT_THROW((ClarityWeights{0.5, 0.5, 0.5}.validate()), ValidationError);
}

TEST(Metrics, PerformanceScore) {
  EXPECT_NEAR(performance_score(1.0, 6, 1.0), 1.0, 1e-12);
  EXPECT_EQ(performance_score(0.0, 1000000, 0.0) < 1e-5, true);
  EXPECT_NEAR(performance_score(0.5, 12, 0.8), 0.59, 1e-12);
  EXPECT_THROW(performance_score(0.5, 0, 0.8), ContractViolation);
  SeededRng rng(9);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> cs;
    for (int i = 0; i < 5; ++i) cs.push_back(rng.unit() * 1.8 - 0.8);
    const double e = performance_score(cs, 1 + static_cast<int>(rng.index(20)), rng.unit(), ClarityWeights{});
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
  }
}

TEST(Metrics, Ssa) {
  EXPECT_NEAR(ssa(0.83, 5.23), 6.07, 0.01);
  EXPECT_NEAR(ssa(0.76, 7.75), 6.45, 0.01);
  EXPECT_EQ(ssa(0, 0), 0.0);
  EXPECT_NEAR(ssa(0.5, 5, {}, SsaMode::maintext), 7.75 * (0.35 + 1.5), 1e-12);
  EXPECT_GT(ssa(0.51, 5), ssa(0.5, 5));
  EXPECT_GT(ssa(0.5, 5.01), ssa(0.5, 5));
  EXPECT_EQ(ssa_mode_from_string("maintext"), SsaMode::maintext);
  EXPECT_THROW(ssa_mode_from_string("other"), Error);
}

TEST(Metrics, ClarifyScore) {
  using C = Change;
  auto of = [](std::vector<C> cs) {
    std::vector<TurnPairJudgment> js;
    for (std::size_t i = 0; i < cs.size(); ++i) js.push_back(judged(static_cast<int>(i), cs[i]));
    return clarify_score(js);
  };
  EXPECT_EQ(of({C::improve, C::improve}), 10.0);
  EXPECT_EQ(of({C::not_change, C::not_change, C::not_change}), 5.0);
  EXPECT_NEAR(of({C::improve, C::improve, C::decrease, C::not_change}), 6.25, 1e-12);
  EXPECT_THROW(clarify_score(std::vector<TurnPairJudgment>{}), ContractViolation);
  EXPECT_THROW(clarify_score(series({0.5, 0.6, 0.7}), {judged(0, C::improve)}), ContractViolation);
}

TEST(Metrics, GoalProgressFallback) {
  UserProfile p;
  p.specifics.must_meet = {"Long battery life", "Unknown/Not sure", "Warranty"};
  auto t = series({0.5, 0.6, 0.7});
  t.turns[1].assistant_message = "It has LONG battery life.";
  t.turns[2].assistant_message = "And a warranty.";
  EXPECT_EQ(goal_progress_fallback(t, p), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Metrics, ReportCellsAndTable) {
  std::vector<CorpusEntry> corpus;
  for (int d = 0; d < 3; ++d) {
    CorpusEntry e;
    e.key = {"m", 40, d == 0};
    e.transcript = series({0.5, 0.9}, "d" + std::to_string(d));
    e.judgments = {judged(0, Change::improve)};
    corpus.push_back(e);
  }
  const auto r = build_report(corpus);
  ASSERT_EQ(r.cells.size(), 2u);
  const auto* off = r.find({"m", 40, false});
  ASSERT_TRUE(off);
  EXPECT_EQ(off->dialogue_count, 2u);
  EXPECT_NEAR(*off->clarify, 10.0, 1e-12);
  EXPECT_NEAR(*off->ssa, 0.7 * 0.7 * 7.75 + 3.0, 1e-12);
  EXPECT_EQ(*off->high_satisfaction_rate, 0.0);
  EXPECT_EQ(*off->improved_satisfaction_rate, 100.0);
  EXPECT_EQ(r.find({"m", 0, false}), nullptr);
  const auto table = r.to_table();
  EXPECT_NE(table.find("w/o Profile"), std::string::npos);
  EXPECT_NE(table.find("SSA"), std::string::npos);
}

TEST(Metrics, RecordedReport) {
  const auto doc = nlohmann::json::parse(R"({"cells": [
    {"model": "x", "uncertainty_percent": 0, "share_profile": false, "average_satisfaction": 0.83,
     "clarify": 5.23, "published_ssa": 6.07},
    {"model": "x", "uncertainty_percent": 0, "share_profile": true, "average_satisfaction": 0.9}]})");
  const auto r = report_from_recorded(doc);
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_NEAR(*r.find({"x", 0, false})->ssa, 6.07, 0.01);
  EXPECT_FALSE(r.find({"x", 0, true})->ssa);
  EXPECT_NE(r.to_table().find("Pub SSA"), std::string::npos);
  auto dup = doc;
  dup["cells"].push_back(doc["cells"][0]);
  EXPECT_THROW(report_from_recorded(dup), ValidationError);
}
