// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "asymdial/annotate.hpp"
#include "asymdial/backends.hpp"
#include "asymdial/dialogue.hpp"
#include "asymdial/judgment.hpp"
#include "asymdial/profiles.hpp"
#include "asymdial/rng.hpp"

namespace asymdial::testing {

inline std::string tagged(double score, const std::string& thoughts, const std::string& visible) {
  return "[INNER_THOUGHTS] " + thoughts + " [/INNER_THOUGHTS]\n[SATISFACTION] " +
         format_number(score) + " - " + "the reply was " + (score >= 0.6 ? "useful" : "thin") +
         " [/SATISFACTION]\n" + visible;
}

// Visible user lines that stay clear of the "leaving" intent keywords and of
// the length limits.
inline const std::vector<std::string>& visible_lines() {
  static const std::vector<std::string> lines = {
      "Could you tell me a little more about the options here?",
      "What are the main features I should look at first?",
      "How does it compare with the other choice you gave me?",
      "Is that right for someone who travels for work a lot?",
      "Can you explain the trade-offs in simpler words please?",
      "Which one would you recommend for my situation now?",
  };
  return lines;
}

inline const std::vector<std::string>& agent_lines() {
  static const std::vector<std::string> lines = {
      "Sure. There are a few options worth a look; tell me what matters most to you.",
      "The main features are battery life, weight and the screen. Which one is key?",
      "Compared with the other choice it is lighter, though the warranty is shorter.",
      "For frequent travel a lighter model with long battery life usually works best.",
      "In short: the first is cheaper, the second lasts longer. Want more detail?",
  };
  return lines;
}

// Scores in [0,1] with two decimals, drawn from a seeded walk.
inline std::vector<double> score_walk(std::uint64_t seed, std::size_t turns) {
  SeededRng rng(seed);
  std::vector<double> out;
  int cents = static_cast<int>(rng.between(30, 70));
  for (std::size_t i = 0; i < turns; ++i) {
    out.push_back(cents / 100.0);
    cents = std::clamp(cents + static_cast<int>(rng.between(0, 40)) - 18, 0, 100);
  }
  return out;
}

inline ScriptedScript user_script(const std::vector<double>& scores, std::uint64_t seed = 0) {
  ScriptedScript s;
  const auto& lines = visible_lines();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    s.entries.push_back(
        {std::nullopt,
         tagged(scores[i], "thinking it over at step " + std::to_string(i),
                lines[(i + seed) % lines.size()])});
  }
  s.policy = ExhaustionPolicy::repeat_last;
  return s;
}

inline ScriptedScript agent_script(std::uint64_t seed = 0) {
  ScriptedScript s;
  const auto& lines = agent_lines();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    s.entries.push_back({std::nullopt, lines[(i + seed) % lines.size()]});
  }
  return s;
}

inline WallClock fixed_clock() {
  return stepping_clock(std::chrono::system_clock::time_point(std::chrono::seconds(1767225600)),
                        std::chrono::milliseconds(1000));
}

// Judge stub that answers turn-pair prompts by echoing the pre-filled score and
// summary prompts with statistics computed from the conversation text.
class StubJudge final : public TextBackend {
 public:
  double echo_offset = 0.0;      // added to the echoed score
  double stats_offset = 0.0;     // added to average_score
  int invalid_first = 0;         // this many leading calls get a prose reply
  bool fail = false;             // throw BackendError on every call
  std::string refined_prompt = "You are a careful assistant. Ask one clarifying question at a time.";

  // Clarity verdict for pair i.
  static Change clarity_for(int index, const std::string& key) {
    return static_cast<Change>(fnv1a64(key + std::to_string(index)) % 3);
  }

  ChatResponse complete(const ChatRequest& request) override {
    const int call = calls_.fetch_add(1);
    if (fail) throw BackendError(BackendError::Kind::api, "stub judge failure", 500);
    if (call < invalid_first) return {"I think the user was happy overall.", 0, id(), 1};
    const std::string& prompt = request.messages.back().text;
    if (request.provenance == "turn_pair") return {turn_pair(prompt), 0, id(), 1};
    if (request.provenance == "summary") return {summary(prompt), 0, id(), 1};
    return {refined_prompt, 0, id(), 1};
  }
  std::string id() const override { return "stub-judge"; }
  int calls() const { return calls_.load(); }

 private:
  static double number_after(const std::string& text, const std::string& marker,
                             std::size_t from = 0) {
    const auto pos = text.find(marker, from);
    return std::stod(text.substr(pos + marker.size()));
  }

  std::string turn_pair(const std::string& prompt) const {
    const std::string key = "\"turn_pair\": \"Turn ";
    const int index = static_cast<int>(number_after(prompt, key));
    const double score = number_after(prompt, "Satisfaction Score (X+1): ") + echo_offset;
    const auto clarity = clarity_for(index, prompt.substr(prompt.find("User Message (Turn")));
    nlohmann::json reply = {
        {"turn_pair", turn_pair_label(index)},
        {"user_satisfaction",
         {{"change", "Improve"}, {"score", score}, {"explanation", "steady progress"}}},
        {"user_clarity",
         {{"change", std::string(to_string(clarity))}, {"explanation", "clearer goals"}}}};
    return "```json\n" + reply.dump(2) + "\n```";
  }

  std::string summary(const std::string& prompt) const {
    std::vector<double> scores;
    std::size_t pos = 0;
    const std::string marker = "Satisfaction score: ";
    while ((pos = prompt.find(marker, pos)) != std::string::npos) {
      pos += marker.size();
      scores.push_back(std::stod(prompt.substr(pos)));
    }
    double sum = 0;
    for (double s : scores) sum += s;
    const double mean = sum / scores.size();
    double var = 0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= scores.size();
    nlohmann::json evolution = nlohmann::json::array();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      evolution.push_back({{"turn_index", i},
                           {"score", scores[i]},
                           {"delta", i == 0 ? nlohmann::json(nullptr)
                                            : nlohmann::json(scores[i] - scores[i - 1])}});
    }
    nlohmann::json reply = {
        {"summary_overall", "mixed"},
        {"topics_covered", {"features", "price"}},
        {"statistics",
         {{"average_score", mean + stats_offset},
          {"min_score", *std::min_element(scores.begin(), scores.end())},
          {"max_score", *std::max_element(scores.begin(), scores.end())},
          {"score_variance", var}}},
        {"satisfaction_evolution", evolution},
        {"important_turns", nlohmann::json::array()},
        {"detailed_findings", nlohmann::json::array()},
        {"contextual_notes", {"short replies"}},
        {"general_insights", {"Ask about priorities early", "Summarize options briefly"}}};
    return reply.dump();
  }

  std::atomic<int> calls_{0};
};

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("asymdial-test-" + name + "-" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace asymdial::testing
