// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include <gtest/gtest.h>

#include "asymdial/dialogue.hpp"
#include "support.hpp"

using namespace asymdial;
using namespace asymdial::testing;

namespace {

UserProfile profile(std::uint64_t seed = 31, int uncertainty = 0) {
  ProfileRequest req;
  req.seed = seed;
  req.uncertainty = UncertaintyLevel::from_percent(uncertainty);
  return generate_profile(req);
}

RunOptions options(const std::string& id = "d") {
  RunOptions o;
  o.dialogue_id = id;
  o.clock = fixed_clock();
  return o;
}

// Fails from the `n`th call on.
class FlakyBackend final : public TextBackend {
 public:
  FlakyBackend(ScriptedScript s, int fail_at) : inner_(std::move(s)), fail_at_(fail_at) {}
  ChatResponse complete(const ChatRequest& r) override {
    if (++calls_ >= fail_at_) throw BackendError(BackendError::Kind::timeout, "gone", 0, 5);
    return inner_.complete(r);
  }
  std::string id() const override { return "flaky"; }

 private:
  ScriptedBackend inner_;
  int fail_at_;
  int calls_ = 0;
};

}  // namespace

TEST(Dialogue, LeavingTerminatesEarly) {
  auto s = user_script({0.5, 0.6, 0.7});
  s.entries.push_back({std::nullopt, tagged(0.9, "done here", "Okay, goodbye, thanks for the info")});
  ScriptedBackend user(s), agent(agent_script());
  const auto r = run_dialogue(profile(), user, agent, RunConfig{}, false, options());
  ASSERT_EQ(r.transcript.turns.size(), 4u);
  EXPECT_EQ(r.transcript.turns.back().hidden.intent, "leaving");
  for (std::size_t i = 0; i < r.transcript.turns.size(); ++i) {
    EXPECT_EQ(r.transcript.turns[i].index, static_cast<int>(i));
    EXPECT_FALSE(contains_tag_marker(r.transcript.turns[i].user_message));
  }
}

TEST(Dialogue, MaxTurnsCap) {
  ScriptedBackend user(user_script({0.5, 0.6, 0.7})), agent(agent_script());
  RunConfig c;
  c.max_turns = 1;
  EXPECT_EQ(run_dialogue(profile(), user, agent, c, false, options()).transcript.turns.size(), 1u);
}

TEST(Dialogue, AgentSideSeesNoPrivateValues) {
  const auto p = profile(44, 40);
  ScriptedBackend user(user_script(score_walk(1, 5))), agent(agent_script());
  RunConfig c;
  c.max_turns = 5;
  const auto r = run_dialogue(p, user, agent, c, false, options());
  for (const auto& e : r.log) {
    if (e.side != Side::agent) continue;
    EXPECT_EQ(e.request.provenance.rfind("agent_default", 0), 0u);
    const auto text = e.request_text();
    for (const auto& v : private_attribute_values(p)) {
      if (v.size() >= 4) EXPECT_EQ(text.find(v), std::string::npos) << v;
    }
    for (const auto& t : r.transcript.turns) {
      EXPECT_EQ(text.find(t.hidden.inner_thoughts), std::string::npos);
    }
  }
  EXPECT_TRUE(audit_asymmetry(p, r.transcript, r.log, false).empty());
}

TEST(Dialogue, AuditCatchesLeak) {
  const auto p = profile(45);
  ScriptedBackend user(user_script({0.5, 0.6})), agent(agent_script());
  RunConfig c;
  c.max_turns = 2;
  auto r = run_dialogue(p, user, agent, c, false, options());
  for (auto& e : r.log) {
    if (e.side == Side::agent) e.request.messages.back().text += " " + p.base.name;
  }
  EXPECT_FALSE(audit_asymmetry(p, r.transcript, r.log, false).empty());
}

TEST(Dialogue, EnforceLength) {
  const RunConfig c;
  EXPECT_EQ(enforce_length(std::string(50, 'a'), ChatRole::user, c).verdict, LengthVerdict::accept);
  const auto short_msg = enforce_length("too short", ChatRole::user, c);
  EXPECT_EQ(short_msg.verdict, LengthVerdict::retry_with_instruction);
  EXPECT_FALSE(short_msg.reminder.empty());
  EXPECT_EQ(enforce_length(std::string(200, 'b'), ChatRole::assistant, c, 2).verdict,
            LengthVerdict::accept_with_warning);
  EXPECT_EQ(visible_length("[INNER_THOUGHTS] long hidden text [/INNER_THOUGHTS]hello", ChatRole::user),
            5u);
  EXPECT_EQ(visible_length("héllo", ChatRole::assistant), 5u);
}

TEST(Dialogue, LengthRetryThenWarning) {
  ScriptedScript s;
  s.entries.push_back({std::nullopt, tagged(0.5, "hm", "short")});
  ScriptedBackend user(s), agent(agent_script());
  RunConfig c;
  c.max_turns = 1;
  const auto r = run_dialogue(profile(), user, agent, c, false, options());
  EXPECT_EQ(user.calls(), 3u);
  EXPECT_FALSE(r.transcript.turns.front().warnings.empty());
}

TEST(Dialogue, ByteIdenticalRerun) {
  auto once = [] {
    ScriptedBackend user(user_script(score_walk(3, 6))), agent(agent_script(2));
    RunConfig c;
    c.max_turns = 6;
    return run_dialogue(profile(), user, agent, c, true, options()).transcript;
  };
  EXPECT_EQ(once(), once());
}

TEST(Dialogue, BackendFailureTruncates) {
  ScriptedBackend user(user_script(score_walk(4, 6)));
  FlakyBackend agent(agent_script(), 3);
  const auto r = run_dialogue(profile(), user, agent, RunConfig{}, false, options());
  EXPECT_TRUE(r.transcript.truncated);
  EXPECT_EQ(r.transcript.turns.size(), 2u);
  ASSERT_TRUE(r.transcript.failure);
}

TEST(Dialogue, BatchKeepsInputOrder) {
  std::vector<UserProfile> profiles;
  for (std::uint64_t s = 0; s < 6; ++s) profiles.push_back(profile(s));
  const BackendFactory f = [](const UserProfile& p, std::size_t) {
    return BackendPair{std::make_unique<ScriptedBackend>(user_script(score_walk(p.seed, 3))),
                       std::make_unique<ScriptedBackend>(agent_script(p.seed))};
  };
  RunConfig c;
  c.max_turns = 3;
  const auto results = run_batch(profiles, f, c, false, 4, options("dialogue-"));
  ASSERT_EQ(results.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "dialogue-%04zu", i);
    EXPECT_EQ(results[i].transcript.id, id);
    EXPECT_EQ(results[i].transcript.profile_ref.seed, profiles[i].seed);
  }
}

TEST(Dialogue, RunConfigValidation) {
  RunConfig c;
  c.max_turns = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  RunConfig d;
  d.user_length = {50, 40, 100};
  EXPECT_THROW(d.validate(), ValidationError);
  EXPECT_EQ(format_timestamp(std::chrono::system_clock::time_point(std::chrono::seconds(1767225600))),
            "2026-01-01T00:00:00.000Z");
}
