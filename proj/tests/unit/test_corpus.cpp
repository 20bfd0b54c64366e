// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include <gtest/gtest.h>

#include <fstream>

#include "asymdial/corpus.hpp"
#include "asymdial/error.hpp"
#include "support.hpp"

using namespace asymdial;
using namespace asymdial::testing;

namespace {

DialogueRecord record(std::uint64_t seed, std::size_t turns = 3) {
  ProfileRequest req;
  req.seed = seed;
  req.uncertainty = UncertaintyLevel::from_percent(40);
  const auto profile = generate_profile(req);
  ScriptedBackend user(user_script(score_walk(seed, turns), seed)), agent(agent_script(seed));
  RunConfig c;
  c.max_turns = static_cast<int>(turns);
  RunOptions o;
  o.dialogue_id = "dialogue-" + std::to_string(seed);
  o.clock = fixed_clock();
  return make_record(run_dialogue(profile, user, agent, c, false, o).transcript, profile);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Corpus, SaveLoadRoundTrip) {
  const auto dir = temp_dir("corpus-rt");
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = record(s, 1 + s % 5);
    save_record(r, dir / "a.json");
    const auto back = load_record(dir / "a.json");
    EXPECT_EQ(back, r);
    save_record(back, dir / "b.json");
    EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  }
  std::filesystem::remove_all(dir);
}

TEST(Corpus, CanonicalDump) {
  const auto doc = nlohmann::json::parse(R"({"b": 1, "a": [0.1, 2.0, 1e-9, 0.123456789]})");
  EXPECT_EQ(canonical_dump(doc),
            "{\n  \"a\": [\n    0.1,\n    2.0,\n    1e-09,\n    0.123457\n  ],\n  \"b\": 1\n}\n");
}

TEST(Corpus, MissingScoreNamesPath) {
  auto doc = record_to_json(record(3));
  doc["turns"][1]["metadata"]["hidden_states"]["satisfaction"].erase("score");
  doc["turns"][2]["timestamp"] = "2000-01-01T00:00:00.000Z";
  const auto report = validate_record(doc);
  ASSERT_FALSE(report.ok());
  bool named = false;
  for (const auto& i : report.issues) {
    named = named || i.path == "turns[1].metadata.hidden_states.satisfaction.score";
  }
  EXPECT_TRUE(named) << report.to_string();
  EXPECT_GE(report.issues.size(), 2u);
  EXPECT_THROW(record_from_json(doc), ValidationError);
}

TEST(Corpus, ValidatorIsTotal) {
  const std::vector<std::string> docs = {
      "null", "[]", "42", "\"x\"", "{}", R"({"turns": 5})", R"({"turns": [null, {}, []]})",
      R"({"turns": [{"metadata": {"hidden_states": {"satisfaction": {"score": "high"}}}}]})",
      R"({"profile": [], "analysis": 3, "id": 7})"};
  for (const auto& text : docs) {
    EXPECT_NO_THROW({
      const auto r = validate_record(nlohmann::json::parse(text));
      EXPECT_FALSE(r.ok());
    });
  }
}

TEST(Corpus, ParseErrorOffset) {
  try {
    parse_json_text("{\"a\": 1,, }");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.byte_offset(), 8u);
  }
}

TEST(Corpus, ManifestCountsFiles) {
  const auto dir = temp_dir("manifest") / condition_dir_name("gpt/4o mini", 60, false);
  EXPECT_EQ(dir.filename().string(), "gpt-4o-mini__u60__noprofile");
  const auto r = record(1, 1);
  for (int i = 0; i < 150; ++i) {
    auto copy = r;
    copy.transcript.id = "dialogue-" + std::to_string(i);
    save_record(copy, dir / (copy.transcript.id + ".json"));
  }
  Manifest m;
  m.model_id = "gpt/4o mini";
  m.uncertainty_percent = 60;
  m = write_manifest(dir, m);
  EXPECT_EQ(m.dialogue_count, 150u);
  EXPECT_EQ(read_manifest(dir).dialogue_count, dialogue_files(dir).size());
  const auto scanned = scan_corpus(dir.parent_path());
  ASSERT_EQ(scanned.size(), 1u);
  EXPECT_EQ(scanned[0].manifest, m);
  auto bad = manifest_to_json(m);
  bad["uncertainty_percent"] = 50;
  EXPECT_THROW(manifest_from_json(bad), ValidationError);
  std::filesystem::remove_all(dir.parent_path());
}

TEST(Corpus, ImportShim) {
  const auto canonical = record_to_json(record(5, 2));
  nlohmann::json raw = canonical;
  raw.erase("user_name");
  raw.erase("rag_used");
  raw["dialogue"] = raw["turns"];
  raw.erase("turns");
  for (auto& t : raw["dialogue"]) {
    t["user"] = t["raw_user_output"];
    t.erase("user_message");
    t.erase("raw_user_output");
    t["metadata"]["hidden_states"]["satisfaction"] =
        t["metadata"]["hidden_states"]["satisfaction"]["score"];
  }
  const auto imported = import_document(raw);
  EXPECT_FALSE(imported.mapping.empty());
  const auto report = validate_record(imported.document);
  EXPECT_TRUE(report.ok()) << report.to_string();
  EXPECT_EQ(imported.document["turns"][0]["user_message"], canonical["turns"][0]["user_message"]);
  EXPECT_EQ(imported.document["rag_used"], false);
}

TEST(Corpus, CorpusEntriesPreferAnalysisFiles) {
  const auto root = temp_dir("entries");
  const auto dir = root / condition_dir_name("m", 40, false);
  auto r = record(6, 3);
  save_record(r, dir / (r.transcript.id + ".json"));
  Manifest m;
  m.model_id = "m";
  m.uncertainty_percent = 40;
  write_manifest(dir, m);
  StubJudge judge;
  const auto js = a2_turn_analysis(a1_enhance(r.transcript, r.profile), judge);
  write_json_file(analysis_path(dir, r.transcript.id, AnalysisKind::judgments),
                  judgments_to_json(js));
  const auto entries = load_corpus_entries(root);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].key, (CellKey{"m", 40, false}));
  EXPECT_EQ(entries[0].judgments.size(), 2u);
  EXPECT_EQ(judgments_from_json(judgments_to_json(js)), js);
  std::filesystem::remove_all(root);
}
