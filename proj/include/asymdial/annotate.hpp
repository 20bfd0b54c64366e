// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace asymdial {

inline constexpr double kDefaultSatisfaction = 0.5;

// Result of splitting a raw user-model output into its tagged blocks and the
// text the agent is allowed to see.
struct ParsedUserMessage {
  std::string inner_thoughts;
  double satisfaction_score = kDefaultSatisfaction;
  std::string satisfaction_explanation;
  std::string visible_text;
  bool satisfaction_defaulted = false;
  bool inner_thoughts_defaulted = false;
  std::vector<std::string> warnings;

  bool operator==(const ParsedUserMessage&) const = default;
};

// Total: never throws. Recognizes
//   [INNER_THOUGHTS] ... [/INNER_THOUGHTS]
//   [SATISFACTION] score - explanation [/SATISFACTION]   (format 2)
//   [SATISFACTION: score - explanation]                  (format 1)
// Tag names match case-insensitively. The first well-formed block of each kind
// wins; every recognized block and stray tag marker is stripped from the
// visible text. Numeric scores outside [0,1] are clamped with a warning.
ParsedUserMessage parse_user_message(std::string_view raw);

// Inverse of parse_user_message for the canonical layout: thoughts block,
// satisfaction block (format 2), visible text, one per line.
std::string serialize_user_message(const ParsedUserMessage& message);

// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

// True when text still contains any of the tag markers above.
bool contains_tag_marker(std::string_view text);

// ---------------------------------------------------------------------------
// Keyword lexicons

enum class LexiconKind { emotion, intent, inner_emotion, inner_intent };

std::string_view to_string(LexiconKind kind);

struct LexiconCategory {
  std::string label;
  std::vector<std::string> keywords;  // lowercase
};

class KeywordLexicon {
 public:
  KeywordLexicon(LexiconKind kind, std::vector<LexiconCategory> categories);

  LexiconKind kind() const noexcept { return kind_; }
  const std::vector<LexiconCategory>& categories() const noexcept { return categories_; }

  // Label returned when nothing matches: "neutral" for the emotion kinds,
  // "exploring" for the intent kinds.
  std::string_view fallback_label() const noexcept;

  // Plain-text table, one category per line, laid out like
  //   Happy & happy, excited, great
  // '|' or ':' may replace '&'. A trailing double backslash (LaTeX row end)
  // and '#' comment lines are ignored.
  static KeywordLexicon parse(LexiconKind kind, std::string_view text);
  static KeywordLexicon load(LexiconKind kind, const std::filesystem::path& path);

 private:
  LexiconKind kind_;
  std::vector<LexiconCategory> categories_;
};

const KeywordLexicon& default_lexicon(LexiconKind kind);

struct Classification {
  std::string label;
  int match_count = 0;

  bool operator==(const Classification&) const = default;
};

// Each keyword found anywhere in the lowercased text adds one to its category,
// however often it repeats. Highest count wins; ties go to the earlier
// category; no match yields the lexicon's fallback label with count 0.
Classification classify(const KeywordLexicon& lexicon, std::string_view text);

// ASCII lowercase plus typographic apostrophes folded to '.
std::string normalize_for_matching(std::string_view text);

}  // namespace asymdial
