// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

// Acceptance runner. Prints one PASS/FAIL line per criterion.
//
//   asymdial_acceptance            run every criterion
//   asymdial_acceptance <name>...  run the named criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "asymdial/annotate.hpp"
#include "asymdial/augment.hpp"
#include "asymdial/corpus.hpp"
#include "asymdial/dialogue.hpp"
#include "asymdial/metrics.hpp"
#include "asymdial/profiles.hpp"
#include "support.hpp"

#ifndef ASYMDIAL_DATA_DIR
#define ASYMDIAL_DATA_DIR "data"
#endif

namespace {

using namespace asymdial;
using namespace asymdial::testing;

struct Outcome {
  bool pass = true;
  std::vector<std::string> failures;
  std::string summary;

  void fail(const std::string& why) {
    pass = false;
    if (failures.size() < 12) failures.push_back(why);
  }
  void expect(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---------------------------------------------------------------------------

Outcome ssa_reproduction() {
  Outcome out;
  const auto doc = read_json_file(std::string(ASYMDIAL_DATA_DIR) + "/table1_recorded.json");
  int rows = 0;
  int matched = 0;
  for (const auto& c : doc.at("cells")) {
    if (!c.contains("published_ssa")) continue;
    ++rows;
    const double s = c.at("average_satisfaction").get<double>();
    const double clarify = c.at("clarify").get<double>();
    const double published = c.at("published_ssa").get<double>();
    const double got = ssa(s, clarify);
    if (near(got, published, 0.01 + 1e-9)) {
      ++matched;
    } else {
      out.fail(c.at("model").get<std::string>() + " " +
               std::to_string(c.at("uncertainty_percent").get<int>()) + "%: computed " +
               fmt(got) + ", published " + fmt(published, 2));
    }
  }
  out.expect(rows == 16, "expected 16 published rows, found " + std::to_string(rows));

  struct Anchor {
    const char* label;
    double s, c, published;
  };
  const Anchor anchors[] = {{"Claude 0%", 0.83, 5.23, 6.07},
                            {"Llama 80%", 0.76, 7.75, 6.45},
                            {"Gemini 60%", 0.75, 6.50, 6.02},
                            {"GPT 0%", 0.75, 5.97, 5.86}};
  for (const auto& a : anchors) {
    const double oracle = 0.7 * (a.s * 7.75) + 0.3 * a.c;
    out.expect(near(ssa(a.s, a.c), oracle, 1e-12), std::string(a.label) + ": formula mismatch");
    out.expect(near(ssa(a.s, a.c), a.published, 0.01 + 1e-9),
               std::string(a.label) + ": anchor " + fmt(ssa(a.s, a.c)));
  }

  const auto report = report_from_recorded(doc);
  int report_matched = 0;
  for (const auto& cell : report.cells) {
    if (cell.published_ssa && cell.ssa && near(*cell.ssa, *cell.published_ssa, 0.01 + 1e-9)) {
      ++report_matched;
    }
  }
  out.expect(report_matched == matched, "report path disagrees with direct computation");
  out.summary = std::to_string(matched) + "/" + std::to_string(rows) + " rows within 0.01";
  return out;
}

// ---------------------------------------------------------------------------

std::string random_words(SeededRng& rng, int min_words, int max_words) {
  static const std::vector<std::string> words = {
      "maybe", "price", "options", "quite", "unclear", "needs", "more", "detail", "good",
      "slow", "it's", "fine", "really", "help", "screen", "budget", "weekend", "ok",
      "plan", "100%", "café", "-", "3.5", "x", "well,", "hmm", "sure?", "naïve", "\"quoted\""};
  const int n = rng.between(min_words, max_words);
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += words[rng.index(words.size())];
  }
  return s;
}

Outcome parser_suite() {
  Outcome out;
  const auto worked = parse_user_message(
      "[INNER_THOUGHTS] I'm not sure about the options yet [/INNER_THOUGHTS]\n"
      "[SATISFACTION] 0.7 - The suggestions are good but I need more information "
      "[/SATISFACTION]\nCould you tell me more about the features?");
  out.expect(worked.inner_thoughts == "I'm not sure about the options yet", "worked: thoughts");
  out.expect(worked.satisfaction_score == 0.7, "worked: score");
  out.expect(worked.satisfaction_explanation ==
                 "The suggestions are good but I need more information",
             "worked: explanation");
  out.expect(worked.visible_text == "Could you tell me more about the features?", "worked: visible");
  out.expect(!worked.satisfaction_defaulted && !worked.inner_thoughts_defaulted,
             "worked: no defaults");

  const auto f1 = parse_user_message("[SATISFACTION: 0.8 - helpful] hi there friend, thanks!");
  out.expect(f1.satisfaction_score == 0.8 && f1.satisfaction_explanation == "helpful" &&
                 f1.visible_text == "hi there friend, thanks!",
             "format 1");
  const auto f2 = parse_user_message("[SATISFACTION] 0.25 - too vague [/SATISFACTION] what now?");
  out.expect(f2.satisfaction_score == 0.25 && f2.satisfaction_explanation == "too vague" &&
                 f2.visible_text == "what now?",
             "format 2");

  const auto plain = parse_user_message("Just the visible text");
  out.expect(plain.satisfaction_score == 0.5 && plain.satisfaction_defaulted &&
                 plain.inner_thoughts_defaulted && plain.visible_text == "Just the visible text",
             "tagless defaults");

  SeededRng rng(20260101);
  int lossless = 0;
  for (int i = 0; i < 1000; ++i) {
    ParsedUserMessage m;
    m.inner_thoughts = random_words(rng, 1, 12);
    m.satisfaction_score = static_cast<double>(rng.between(0, 1000)) / 1000.0;
    if (i % 7 == 0) m.satisfaction_score = rng.unit();
    m.satisfaction_explanation = random_words(rng, 1, 10);
    m.visible_text = random_words(rng, 2, 16);
    const auto back = parse_user_message(serialize_user_message(m));
    if (back == m) {
      ++lossless;
    } else {
      out.fail("round-trip " + std::to_string(i) + ": " + serialize_user_message(m));
    }
  }
  out.summary = std::to_string(lossless) + "/1000 round-trips lossless";
  return out;
}

// ---------------------------------------------------------------------------

Outcome masking_property() {
  Outcome out;
  const auto& paths = maskable_paths();
  const std::size_t n = paths.size();
  int checked = 0;
  for (int p : kUncertaintyPercents) {
    const auto expected = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) / 100.0 + 0.5));
    for (std::uint64_t seed = 1; seed <= 500; ++seed) {
      ProfileRequest req;
      req.seed = seed;
      const UserProfile clean = generate_profile(req);
      const UserProfile masked =
          apply_uncertainty_mask(clean, UncertaintyLevel::from_percent(p), seed);
      ++checked;
      const std::set<std::string> chosen(masked.masked_fields.begin(), masked.masked_fields.end());
      if (masked.masked_fields.size() != expected || chosen.size() != expected) {
        out.fail("p=" + std::to_string(p) + " seed=" + std::to_string(seed) + ": " +
                 std::to_string(masked.masked_fields.size()) + " masked, expected " +
                 std::to_string(expected));
        continue;
      }
      for (const auto& path : paths) {
        const auto before = read_attribute(clean, path);
        const auto after = read_attribute(masked, path);
        if (chosen.count(path)) {
          if (after != kUnknown) out.fail(path + " masked but reads '" + after + "'");
        } else if (after != before) {
          out.fail(path + " changed without being masked (seed " + std::to_string(seed) + ")");
        }
      }
      // Everything outside the maskable set is untouched too.
      out.expect(masked.task == clean.task && masked.difficulty == clean.difficulty &&
                     masked.base.name == clean.base.name && masked.seed == clean.seed &&
                     masked.specifics.priority_features == clean.specifics.priority_features &&
                     masked.specifics.must_meet == clean.specifics.must_meet,
                 "non-maskable field changed (seed " + std::to_string(seed) + ")");

      // The full pipeline masks the same count.
      if (seed <= 50) {
        ProfileRequest full = req;
        full.uncertainty = UncertaintyLevel::from_percent(p);
        const auto piped = generate_profile(full);
        std::size_t unknowns = 0;
        for (const auto& path : paths) unknowns += read_attribute(piped, path) == kUnknown;
        out.expect(piped.masked_fields.size() == expected && unknowns >= expected,
                   "pipeline mask count (p=" + std::to_string(p) + ")");
      }
    }
  }
  out.summary = std::to_string(checked) + " profiles over " + std::to_string(n) +
                " maskable fields";
  return out;
}

// ---------------------------------------------------------------------------

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

Outcome lexicon_coverage() {
  Outcome out;
  int categories = 0;
  for (auto kind : {LexiconKind::emotion, LexiconKind::intent, LexiconKind::inner_emotion,
                    LexiconKind::inner_intent}) {
    const auto& lex = default_lexicon(kind);
    const auto& cats = lex.categories();
    for (std::size_t ci = 0; ci < cats.size(); ++ci) {
      ++categories;
      // A keyword of this category that carries no other category's keyword.
      std::optional<std::string> probe;
      for (const auto& k : cats[ci].keywords) {
        bool clean = true;
        for (std::size_t cj = 0; cj < cats.size() && clean; ++cj) {
          if (cj == ci) continue;
          for (const auto& other : cats[cj].keywords) {
            if (k.find(other) != std::string::npos) clean = false;
          }
        }
        if (clean) {
          probe = k;
          break;
        }
      }
      const std::string where = std::string(to_string(kind)) + "/" + cats[ci].label;
      if (!probe) {
        out.fail(where + ": every keyword contains another category's keyword");
        continue;
      }
      for (const std::string& msg : {*probe, "... " + *probe + " ...", upper(*probe)}) {
        const auto a = classify(lex, msg);
        const auto b = classify(lex, msg);
        out.expect(a == b, where + ": nondeterministic");
        out.expect(a.label == cats[ci].label && a.match_count >= 1,
                   where + ": '" + msg + "' -> " + a.label);
      }
    }
    out.expect(classify(lex, "").match_count == 0 &&
                   classify(lex, "").label == lex.fallback_label(),
               std::string(to_string(kind)) + ": empty input");
  }
  out.summary = std::to_string(categories) + " categories over 4 lexicons";
  return out;
}

// ---------------------------------------------------------------------------

// Inner thoughts that quote the profile, so a leak would be visible.
ScriptedScript leaky_user_script(const UserProfile& profile, const std::vector<double>& scores) {
  ScriptedScript s;
  const auto values = private_attribute_values(profile);
  const auto& lines = visible_lines();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::string secret = values.empty() ? "nothing" : values[i % values.size()];
    s.entries.push_back(
        {std::nullopt, tagged(scores[i], "my private note " + std::to_string(i) + ": " + secret,
                              lines[i % lines.size()])});
  }
  return s;
}

Outcome asymmetry_audit() {
  Outcome out;
  std::size_t agent_requests = 0;
  std::size_t scanned_values = 0;
  for (int d = 0; d < 20; ++d) {
    ProfileRequest req;
    req.seed = 1000 + static_cast<std::uint64_t>(d);
    req.uncertainty = UncertaintyLevel::from_percent(kUncertaintyPercents[d % 4]);
    const auto profile = generate_profile(req);
    ScriptedBackend user(leaky_user_script(profile, score_walk(req.seed, 6)), "user");
    ScriptedBackend agent(agent_script(static_cast<std::uint64_t>(d)), "agent");
    RunConfig config;
    config.max_turns = 6;
    RunOptions options;
    options.dialogue_id = "audit-" + std::to_string(d);
    options.clock = fixed_clock();
    const auto result = run_dialogue(profile, user, agent, config, false, options);
    out.expect(result.transcript.turns.size() == 6 && !result.transcript.truncated,
               options.dialogue_id + ": incomplete run");

    std::vector<std::string> secrets;
    for (const auto& v : private_attribute_values(profile)) {
      if (v.size() >= 4) secrets.push_back(v);
    }
    std::vector<std::string> thoughts;
    for (const auto& t : result.transcript.turns) {
      if (t.hidden.inner_thoughts.size() >= 4) thoughts.push_back(t.hidden.inner_thoughts);
    }
    out.expect(!thoughts.empty(), options.dialogue_id + ": no inner thoughts recorded");
    for (std::size_t i = 0; i < result.log.size(); ++i) {
      const auto& entry = result.log[i];
      if (entry.side != Side::agent) continue;
      ++agent_requests;
      const std::string text = entry.request_text();
      for (const auto& s : secrets) {
        ++scanned_values;
        if (text.find(s) != std::string::npos) {
          out.fail(options.dialogue_id + " request " + std::to_string(i) + " leaks '" + s + "'");
        }
      }
      for (const auto& t : thoughts) {
        if (text.find(t) != std::string::npos) {
          out.fail(options.dialogue_id + " request " + std::to_string(i) + " leaks thoughts");
        }
      }
    }
    // The user side does see its own profile.
    bool user_sees_profile = false;
    for (const auto& entry : result.log) {
      if (entry.side == Side::user && !secrets.empty() &&
          entry.request_text().find(secrets.front()) != std::string::npos) {
        user_sees_profile = true;
      }
    }
    out.expect(user_sees_profile, options.dialogue_id + ": user side lacks the profile");
    out.expect(audit_asymmetry(profile, result.transcript, result.log, false).empty(),
               options.dialogue_id + ": library audit reports findings");
  }
  out.summary = std::to_string(agent_requests) + " agent requests, " +
                std::to_string(scanned_values) + " substring checks";
  return out;
}

// ---------------------------------------------------------------------------

struct ScriptedCorpus {
  std::vector<CorpusEntry> entries;
  std::vector<UserProfile> profiles;
};

ScriptedCorpus scripted_corpus(std::size_t count) {
  ScriptedCorpus c;
  const std::vector<std::string> models = {"model-a", "model-b"};
  for (std::size_t d = 0; d < count; ++d) {
    ProfileRequest req;
    req.seed = 500 + d;
    req.uncertainty = UncertaintyLevel::from_percent(kUncertaintyPercents[d % 4]);
    const auto profile = generate_profile(req);
    const auto turns = 1 + (d * 7) % 8;
    ScriptedBackend user(user_script(score_walk(req.seed, turns), d), "user");
    ScriptedScript agent_s = agent_script(d);
    if (d % 3 == 0 && !profile.specifics.must_meet.empty()) {
      agent_s.entries.insert(agent_s.entries.begin() + 1,
                             {std::nullopt, "Something to check: " +
                                                profile.specifics.must_meet.front() + "."});
    }
    ScriptedBackend agent(agent_s, "agent");
    RunConfig config;
    config.max_turns = static_cast<int>(turns);
    RunOptions options;
    options.dialogue_id = "dialogue-" + std::to_string(d);
    options.clock = fixed_clock();
    const bool share = d % 2 == 1;
    auto result = run_dialogue(profile, user, agent, config, share, options);

    CorpusEntry e;
    e.key = {models[d % 2 == 0 ? 0 : 1], profile.uncertainty.percent(), share};
    if (d % 5 == 0) e.key.model = models[0];
    e.transcript = result.transcript;
    e.profile = profile;
    if (e.transcript.turns.size() >= 2 && d % 6 != 5) {
      StubJudge judge;
      e.judgments = a2_turn_analysis(a1_enhance(e.transcript, profile), judge);
    }
    if (d % 4 == 1) {
      std::vector<double> g;
      for (std::size_t t = 0; t < e.transcript.turns.size(); ++t) {
        g.push_back(static_cast<double>(t) / static_cast<double>(e.transcript.turns.size()));
      }
      e.goal_progress = g;
    }
    c.entries.push_back(std::move(e));
    c.profiles.push_back(profile);
  }
  return c;
}

// Independent recomputation, written from the metric definitions.
struct Oracle {
  double avg = 0, final = 0, trend = 0, variance = 0, min = 0, max = 0;
  std::optional<double> clarify;
  std::optional<double> performance;
};

Oracle oracle_for(const CorpusEntry& e) {
  Oracle o;
  std::vector<double> s;
  for (const auto& t : e.transcript.turns) s.push_back(t.hidden.satisfaction_score);
  const double n = static_cast<double>(s.size());
  double sum = 0;
  for (double v : s) sum += v;
  o.avg = sum / n;
  o.final = s.back();
  o.min = *std::min_element(s.begin(), s.end());
  o.max = *std::max_element(s.begin(), s.end());
  double ss = 0;
  for (double v : s) ss += (v - o.avg) * (v - o.avg);
  o.variance = ss / n;
  double sxy = 0, sxx = 0;
  const double xbar = (n - 1) / 2.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxy += (static_cast<double>(i) - xbar) * (s[i] - o.avg);
    sxx += (static_cast<double>(i) - xbar) * (static_cast<double>(i) - xbar);
  }
  o.trend = sxx == 0 ? 0 : sxy / sxx;

  const bool judged = !e.judgments.empty() && e.judgments.size() + 1 == s.size();
  if (judged) {
    double good = 0;
    int usable = 0;
    for (const auto& j : e.judgments) {
      if (j.failed) continue;
      ++usable;
      good += j.clarity_change == Change::improve ? 1.0
              : j.clarity_change == Change::not_change ? 0.5
                                                       : 0.0;
    }
    if (usable) o.clarify = 10.0 * good / usable;
  }
  if (judged || s.size() == 1) {
    std::vector<double> h = {0.5};
    for (const auto& j : e.judgments) {
      double next = h.back();
      if (!j.failed && j.clarity_change == Change::improve) next += 0.1;
      if (!j.failed && j.clarity_change == Change::decrease) next -= 0.1;
      h.push_back(std::min(1.0, std::max(0.0, next)));
    }
    std::vector<double> g(s.size(), 0.0);
    if (e.goal_progress) {
      g = *e.goal_progress;
    } else if (e.profile) {
      std::vector<std::string> crit;
      for (auto c : e.profile->specifics.must_meet) {
        if (c == "Unknown" || c == "Unknown/Not sure") continue;
        for (auto& ch : c) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        crit.push_back(c);
      }
      std::string seen;
      for (std::size_t t = 0; t < s.size(); ++t) {
        std::string a = e.transcript.turns[t].assistant_message;
        for (auto& ch : a) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        seen += "\x01" + a;
        int hits = 0;
        for (const auto& c : crit) hits += seen.find(c) != std::string::npos;
        g[t] = crit.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(crit.size());
      }
    }
    double csum = 0;
    for (std::size_t t = 1; t < s.size(); ++t) {
      csum += 0.5 * (h[t] - h[t - 1]) + 0.3 * (s[t] - s[t - 1]) + 0.2 * g[t];
    }
    const double mean = s.size() > 1 ? csum / static_cast<double>(s.size() - 1) : 0.0;
    const double norm = (mean + 0.8) / 1.8;
    o.performance = 0.4 * norm + 0.3 * std::min(1.0, 6.0 / n) + 0.3 * o.final;
  }
  return o;
}

Outcome metrics_oracle() {
  Outcome out;
  const auto corpus = scripted_corpus(30);
  const MetricsConfig config;
  std::map<CellKey, std::vector<std::pair<const CorpusEntry*, Oracle>>> cells;
  int clarify_n = 0;
  for (const auto& e : corpus.entries) {
    const Oracle o = oracle_for(e);
    const auto stats = satisfaction_stats(e.transcript.satisfaction_scores());
    const std::string id = e.transcript.id;
    out.expect(near(stats.average, o.avg, 1e-9) && near(stats.final, o.final, 1e-9) &&
                   near(stats.trend, o.trend, 1e-9) && near(stats.variance, o.variance, 1e-9) &&
                   near(stats.min, o.min, 1e-9) && near(stats.max, o.max, 1e-9),
               id + ": satisfaction stats");
    const auto m = compute_dialogue_metrics(
        e.transcript, &*e.profile, e.judgments, config,
        e.goal_progress ? &*e.goal_progress : nullptr);
    out.expect(m.clarify.has_value() == o.clarify.has_value(), id + ": clarify presence");
    if (m.clarify && o.clarify) {
      ++clarify_n;
      out.expect(near(*m.clarify, *o.clarify, 1e-9), id + ": clarify");
    }
    out.expect(m.performance.has_value() == o.performance.has_value(), id + ": E presence");
    if (m.performance && o.performance) {
      out.expect(near(*m.performance, *o.performance, 1e-9),
                 id + ": E " + fmt(*m.performance, 9) + " vs " + fmt(*o.performance, 9));
    }
    cells[e.key].push_back({&e, o});
  }

  // Rates over the whole corpus.
  std::vector<std::vector<double>> series;
  int high = 0, improved = 0;
  for (const auto& e : corpus.entries) {
    const auto s = e.transcript.satisfaction_scores();
    series.push_back(s);
    const Oracle o = oracle_for(e);
    high += o.avg >= 0.8;
    improved += s.back() > s.front();
  }
  const auto rates = dialogue_rates(series, 0.8);
  out.expect(near(rates.high_satisfaction_rate, 100.0 * high / 30.0, 1e-9) &&
                 near(rates.improved_satisfaction_rate, 100.0 * improved / 30.0, 1e-9),
             "corpus rates");

  const auto report = build_report(corpus.entries, config);
  const auto report_json = report.to_json();
  out.expect(report.cells.size() == cells.size(), "cell count");
  for (const auto& [key, members] : cells) {
    const auto* cell = report.find(key);
    const std::string where = key.model + "/u" + std::to_string(key.uncertainty) +
                              (key.share_profile ? "/profile" : "/noprofile");
    if (!cell) {
      out.fail(where + ": missing cell");
      continue;
    }
    double avg = 0, hi = 0, imp = 0, cl = 0, perf = 0;
    int cln = 0, pn = 0;
    for (const auto& [e, o] : members) {
      avg += o.avg;
      hi += o.avg >= 0.8;
      imp += o.final > e->transcript.turns.front().hidden.satisfaction_score;
      if (o.clarify) cl += *o.clarify, ++cln;
      if (o.performance) perf += *o.performance, ++pn;
    }
    const double k = static_cast<double>(members.size());
    out.expect(cell->dialogue_count == members.size(), where + ": count");
    out.expect(near(*cell->average_satisfaction, avg / k, 1e-9), where + ": average");
    out.expect(near(*cell->high_satisfaction_rate, 100 * hi / k, 1e-9), where + ": high rate");
    out.expect(near(*cell->improved_satisfaction_rate, 100 * imp / k, 1e-9),
               where + ": improved rate");
    out.expect(cell->clarify.has_value() == (cln > 0), where + ": clarify presence");
    if (cln && cell->clarify) {
      out.expect(near(*cell->clarify, cl / cln, 1e-9), where + ": clarify");
      out.expect(cell->ssa && near(*cell->ssa, 0.7 * (avg / k * 7.75) + 0.3 * (cl / cln), 1e-9),
                 where + ": ssa");
    }
    if (pn && cell->performance) {
      out.expect(near(*cell->performance, perf / pn, 1e-9), where + ": performance");
    }
    // Reported (rounded) values agree within 0.01.
    const auto json_cell = [&] {
      for (const auto& c : report_json.at("cells")) {
        if (c.at("model") == key.model && c.at("uncertainty_percent") == key.uncertainty &&
            c.at("share_profile") == key.share_profile) {
          return c;
        }
      }
      return nlohmann::json();
    }();
    out.expect(!json_cell.is_null() &&
                   near(json_cell.at("average_satisfaction").get<double>(), avg / k, 0.01),
               where + ": reported average");
  }
  const auto table = report.to_table();
  out.expect(table.find("model-a") != std::string::npos, "table lists models");
  out.summary = std::to_string(corpus.entries.size()) + " dialogues, " +
                std::to_string(report.cells.size()) + " cells, " + std::to_string(clarify_n) +
                " judged";
  return out;
}

// ---------------------------------------------------------------------------

double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0;
  for (const auto& [i, x] : a) {
    for (const auto& [j, y] : b) {
      if (i == j) s += x * y;
    }
  }
  return s;
}

Outcome augmentation_schema() {
  Outcome out;
  std::vector<std::pair<EnhancedDialogue, DialogueSummary>> records;
  std::size_t judgments_total = 0;
  for (std::size_t d = 0; d < 50; ++d) {
    ProfileRequest req;
    req.seed = 9000 + d;
    req.uncertainty = UncertaintyLevel::from_percent(kUncertaintyPercents[d % 4]);
    const auto profile = generate_profile(req);
    const std::size_t turns = 2 + d % 6;
    ScriptedBackend user(user_script(score_walk(req.seed, turns), d), "user");
    ScriptedBackend agent(agent_script(d), "agent");
    RunConfig config;
    config.max_turns = static_cast<int>(turns);
    RunOptions options;
    options.dialogue_id = "dialogue-" + std::to_string(1000 + d);
    options.clock = fixed_clock();
    const auto run = run_dialogue(profile, user, agent, config, false, options);
    const auto& tr = run.transcript;
    const std::string id = tr.id;

    const auto enhanced = a1_enhance(tr, profile);
    out.expect(enhanced.annotations.size() == tr.turns.size(), id + ": annotation count");

    StubJudge judge;
    const auto judgments = a2_turn_analysis(enhanced, judge);
    out.expect(judgments.size() + 1 == tr.turns.size(), id + ": judgment count");
    for (std::size_t i = 0; i < judgments.size(); ++i) {
      const auto& j = judgments[i];
      const auto doc = judgment_to_json(j);
      const bool ok =
          !j.failed && doc.at("turn_pair") == "Turn " + std::to_string(i) + " -> Turn " +
                                                  std::to_string(i + 1) &&
          change_from_string(doc.at("user_satisfaction").at("change").get<std::string>()) &&
          change_from_string(doc.at("user_clarity").at("change").get<std::string>()) &&
          near(doc.at("user_satisfaction").at("score").get<double>(),
               tr.turns[i + 1].hidden.satisfaction_score, 1e-9) &&
          judgment_from_json(doc) == j;
      out.expect(ok, id + ": judgment " + std::to_string(i) + " fails the schema");
    }
    judgments_total += judgments.size();

    const auto summary = a3_summarize(enhanced, judgments, judge);
    std::vector<double> s = tr.satisfaction_scores();
    double mean = 0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    out.expect(!summary.failed && !summary.inconsistent, id + ": summary flagged");
    out.expect(near(summary.statistics.average_score, mean, 0.01) &&
                   near(summary.local_statistics.average_score, mean, 1e-9),
               id + ": summary average");
    out.expect(summary.satisfaction_evolution.size() == s.size() &&
                   !summary.satisfaction_evolution.front().delta,
               id + ": evolution coverage");
    records.emplace_back(enhanced, summary);
  }

  const auto kb = KnowledgeBase::build(records);
  int self_first = 0;
  for (const auto& entry : kb.entries()) {
    double norm = 0;
    for (const auto& [i, w] : entry.vector) norm += w * w;
    out.expect(near(norm, 1.0, 1e-9), entry.id + ": vector not normalized");

    const auto query = kb.vectorize(entry.text);
    std::string best;
    double best_sim = -1;
    for (const auto& other : kb.entries()) {
      const double sim = dot(query, other.vector);
      if (sim > best_sim + 1e-12) {
        best_sim = sim;
        best = other.id;
      }
    }
    const auto hits = kb.retrieve(entry.text, 1);
    out.expect(hits.size() == 1 && hits.front().id == best, entry.id + ": top-1 differs from scan");
    if (!hits.empty() && hits.front().id == entry.id) ++self_first;
  }
  out.expect(self_first == 50, "self-retrieval ranked first for " + std::to_string(self_first) +
                                   "/50");
  out.summary = std::to_string(judgments_total) + " judgments, 50 summaries, self-retrieval " +
                std::to_string(self_first) + "/50";
  return out;
}

struct Criterion {
  const char* name;
  Outcome (*run)();
  double budget_s;
};

const Criterion kCriteria[] = {
    {"ssa_reproduction", ssa_reproduction, 1},
    {"parser_suite", parser_suite, 5},
    {"masking_property", masking_property, 10},
    {"lexicon_coverage", lexicon_coverage, 5},
    {"asymmetry_audit", asymmetry_audit, 30},
    {"metrics_oracle", metrics_oracle, 30},
    {"augmentation_schema", augmentation_schema, 60},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  bool all_pass = true;
  int ran = 0;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) {
      continue;
    }
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) o.fail("runtime " + fmt(secs, 2) + " s over " + fmt(c.budget_s, 0) + " s");
    all_pass = all_pass && o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " (" << o.summary << "; "
              << fmt(secs, 3) << " s)\n";
    for (const auto& f : o.failures) std::cout << "    " << f << "\n";
  }
  if (ran == 0) {
    std::cerr << "unknown criterion\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
