// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include <gtest/gtest.h>

#include <fstream>

#include "asymdial/augment.hpp"
#include "asymdial/error.hpp"
#include "support.hpp"

using namespace asymdial;
using namespace asymdial::testing;

namespace {

struct Run {
  UserProfile profile;
  Transcript transcript;
};

Run simulate(std::uint64_t seed, std::vector<double> scores, int uncertainty = 0) {
  ProfileRequest req;
  req.seed = seed;
  req.uncertainty = UncertaintyLevel::from_percent(uncertainty);
  Run r{generate_profile(req), {}};
  ScriptedBackend user(user_script(scores, seed)), agent(agent_script(seed));
  RunConfig c;
  c.max_turns = static_cast<int>(scores.size());
  RunOptions o;
  o.dialogue_id = "dialogue-" + std::to_string(seed);
  o.clock = fixed_clock();
  r.transcript = run_dialogue(r.profile, user, agent, c, false, o).transcript;
  return r;
}

}  // namespace

TEST(Augment, A1CarriesEveryTurn) {
  const auto r = simulate(1, {0.5, 0.6, 0.4, 0.7}, 60);
  const auto e = a1_enhance(r.transcript, r.profile);
  ASSERT_EQ(e.annotations.size(), 4u);
  for (const auto& a : e.annotations) {
    EXPECT_FALSE(a.emotion.empty());
    EXPECT_FALSE(a.intent.empty());
  }
  EXPECT_EQ(e.masked_fields, r.profile.masked_fields);
  EXPECT_EQ(e.uncertainty_percent, 60);
  EXPECT_FALSE(e.annotations[0].satisfaction_delta);
  EXPECT_NEAR(*e.annotations[1].satisfaction_delta, 0.1, 1e-12);
  EXPECT_EQ(enhanced_from_json(enhanced_to_json(e), r.transcript, r.profile), e);
  EXPECT_THROW(a1_enhance(Transcript{}, r.profile), ContractViolation);
}

TEST(Augment, A2PairsAndLabels) {
  const auto r = simulate(2, {0.5, 0.6, 0.4, 0.7, 0.8});
  StubJudge judge;
  const auto js = a2_turn_analysis(a1_enhance(r.transcript, r.profile), judge);
  ASSERT_EQ(js.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(js[i].turn_pair, "Turn " + std::to_string(i) + " -> Turn " + std::to_string(i + 1));
    EXPECT_FALSE(js[i].failed);
    EXPECT_EQ(js[i].satisfaction_change, Change::improve);
    EXPECT_EQ(judgment_from_json(judgment_to_json(js[i])), js[i]);
  }
  EXPECT_EQ(judge.calls(), 4);
}

TEST(Augment, A2RejectsWrongEcho) {
  const auto r = simulate(3, {0.5, 0.6});
  StubJudge judge;
  judge.echo_offset = 0.05;
  const auto js = a2_turn_analysis(a1_enhance(r.transcript, r.profile), judge);
  ASSERT_EQ(js.size(), 1u);
  EXPECT_TRUE(js[0].failed);
  EXPECT_EQ(judge.calls(), 3);  // first try plus two retries
}

TEST(Augment, A2RetriesThenSucceeds) {
  const auto r = simulate(4, {0.5, 0.6});
  StubJudge judge;
  judge.invalid_first = 2;
  const auto js = a2_turn_analysis(a1_enhance(r.transcript, r.profile), judge);
  EXPECT_FALSE(js[0].failed);
  EXPECT_EQ(judge.calls(), 3);
}

TEST(Augment, A2BackendFailureMarksPairs) {
  const auto r = simulate(5, {0.5, 0.6, 0.7});
  StubJudge judge;
  judge.fail = true;
  const auto js = a2_turn_analysis(a1_enhance(r.transcript, r.profile), judge);
  ASSERT_EQ(js.size(), 2u);
  EXPECT_TRUE(js[0].failed && js[1].failed);
  EXPECT_THROW(a2_turn_analysis(a1_enhance(simulate(6, {0.5}).transcript, r.profile), judge),
               ContractViolation);
}

TEST(Augment, CheckReply) {
  auto reply = nlohmann::json::parse(R"({"turn_pair": "Turn 0 -> Turn 1",
    "user_satisfaction": {"change": "Improve", "score": 0.8, "explanation": "x"},
    "user_clarity": {"change": "Not Change", "explanation": "y"}})");
  EXPECT_FALSE(check_judgment_reply(reply, 0, 0.8));
  EXPECT_TRUE(check_judgment_reply(reply, 1, 0.8));
  EXPECT_TRUE(check_judgment_reply(reply, 0, 0.7));
  reply["user_clarity"]["change"] = "Better";
  EXPECT_TRUE(check_judgment_reply(reply, 0, 0.8));
}

TEST(Augment, A3StatisticsCrossCheck) {
  const auto r = simulate(7, {0.5, 0.7, 0.9});
  StubJudge judge;
  const auto e = a1_enhance(r.transcript, r.profile);
  const auto s = a3_summarize(e, a2_turn_analysis(e, judge), judge);
  EXPECT_FALSE(s.failed);
  EXPECT_FALSE(s.inconsistent);
  EXPECT_NEAR(s.local_statistics.average_score, 0.7, 1e-12);
  EXPECT_NEAR(s.statistics.average_score, 0.7, 0.01);
  ASSERT_EQ(s.important_turns.size(), 2u);  // both swings are 0.2
  EXPECT_EQ(summary_from_json(summary_to_json(s)), s);

  StubJudge off;
  off.stats_offset = 0.5;
  const auto bad = a3_summarize(e, {}, off);
  EXPECT_TRUE(bad.inconsistent);
  EXPECT_FALSE(bad.inconsistencies.empty());
}

TEST(Augment, A3SingleTurn) {
  const auto r = simulate(8, {0.6});
  StubJudge judge;
  const auto s = a3_summarize(a1_enhance(r.transcript, r.profile), {}, judge);
  ASSERT_EQ(s.satisfaction_evolution.size(), 1u);
  EXPECT_FALSE(s.satisfaction_evolution[0].delta);
}

TEST(Augment, A3FailedAfterRetries) {
  const auto r = simulate(9, {0.6, 0.7});
  StubJudge judge;
  judge.invalid_first = 10;
  const auto s = a3_summarize(a1_enhance(r.transcript, r.profile), {}, judge);
  EXPECT_TRUE(s.failed);
}

TEST(Augment, KnowledgeBaseBasics) {
  auto one = KnowledgeBase::build({{"a", "", "red green blue"}});
  EXPECT_NEAR(cosine(one.entries()[0].vector, one.vectorize("red green blue")), 1.0, 1e-9);

  auto two = KnowledgeBase::build({{"b", "", "alpha beta"}, {"a", "", "gamma delta"}});
  EXPECT_EQ(cosine(two.entries()[0].vector, two.entries()[1].vector), 0.0);
  EXPECT_EQ(two.entries()[0].id, "a");
  EXPECT_EQ(two.retrieve("anything", 10).size(), 2u);
  EXPECT_THROW(two.retrieve("x", 0), ContractViolation);
  EXPECT_THROW(KnowledgeBase::build(std::vector<KnowledgeBase::Document>{}), ContractViolation);

  auto ties = KnowledgeBase::build({{"z", "", "same words"}, {"y", "", "same words"}});
  const auto hits = ties.retrieve("same words", 2);
  EXPECT_EQ(hits[0].id, "y");
  EXPECT_EQ(hits[1].id, "z");

  const auto back = KnowledgeBase::from_json(two.to_json());
  EXPECT_EQ(back.entries(), two.entries());
  EXPECT_EQ(back.vocabulary(), two.vocabulary());
}

TEST(Augment, QueryEqualToSummaryRanksFirst) {
  std::vector<KnowledgeBase::Document> docs;
  SeededRng rng(20);
  const std::vector<std::string> words = {"price", "battery", "screen", "travel", "budget",
                                          "warranty", "support", "fast", "light", "cheap",
                                          "brand", "color", "storage", "camera", "sound"};
  for (int i = 0; i < 20; ++i) {
    std::string text;
    for (int k = 0; k < 8; ++k) text += words[rng.index(words.size())] + " ";
    docs.push_back({"doc-" + std::to_string(100 + i), "", text + "unique" + std::to_string(i)});
  }
  const auto kb = KnowledgeBase::build(docs);
  for (const auto& d : docs) EXPECT_EQ(kb.retrieve(d.text, 1).front().id, d.id);
}

TEST(Augment, Tokenize) {
  EXPECT_EQ(tokenize("Hello, World-42 ok"),
            (std::vector<std::string>{"hello", "world", "42", "ok"}));
}

TEST(Augment, RefineVersioningAndLeaks) {
  const auto root = temp_dir("refine");
  std::vector<std::pair<EnhancedDialogue, DialogueSummary>> records;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto r = simulate(30 + s, {0.4, 0.7, 0.5});
    StubJudge judge;
    const auto e = a1_enhance(r.transcript, r.profile);
    records.emplace_back(e, a3_summarize(e, {}, judge));
  }
  StubJudge judge;
  const auto first = refine_prompt(records, judge, root);
  ASSERT_TRUE(first.stored);
  EXPECT_EQ(first.version, 1);
  std::ifstream in(root / "prompts/refined/v1.txt");
  std::string stored((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(stored, judge.refined_prompt);
  EXPECT_TRUE(std::filesystem::exists(root / "prompts/refined/v1.json"));
  EXPECT_EQ(refine_prompt(records, judge, root).version, 2);

  StubJudge leaky;
  leaky.refined_prompt = "Greet " + records[1].first.profile.base.name + " warmly.";
  const auto leak = refine_prompt(records, leaky, root);
  EXPECT_FALSE(leak.stored);
  EXPECT_FALSE(leak.warnings.empty());
  EXPECT_EQ(next_refined_version(root), 3);

  StubJudge down;
  down.fail = true;
  const auto failed = refine_prompt(records, down, root);
  EXPECT_TRUE(failed.backend_failed);
  EXPECT_FALSE(failed.stored);

  EXPECT_THROW(refine_prompt({}, judge, root), ContractViolation);
  std::filesystem::remove_all(root);
}
