// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace asymdial {

// The user's per-turn internal record. Satisfaction, clarity, intent and
// emotion are stored as four separate components.
struct HiddenState {
  std::string inner_thoughts;
  double satisfaction_score = 0.5;
  std::string satisfaction_explanation;
  std::string emotion;
  std::string intent;
  std::string inner_emotion;
  std::string inner_intent;
  std::optional<double> clarity;
  // Subset of {"satisfaction", "inner_thoughts"}.
  std::vector<std::string> defaults_applied;
  // False for turns imported without any hidden-state record.
  bool parsed = true;

  bool operator==(const HiddenState&) const = default;
};

struct Turn {
  int index = 0;
  std::string user_message;       // visible text, tags stripped
  std::string assistant_message;
  std::string timestamp;          // ISO 8601 UTC, millisecond precision
  HiddenState hidden;
  std::string raw_user_output;    // tagged original
  std::vector<std::string> warnings;

  bool operator==(const Turn&) const = default;
};

struct ProfileRef {
  std::string name;
  std::uint64_t seed = 0;
  std::string digest;

  bool operator==(const ProfileRef&) const = default;
};

struct Transcript {
  std::string id;
  ProfileRef profile_ref;
  std::vector<Turn> turns;
  std::string run_config_digest;
  bool share_profile = false;
  std::string created_at;
  bool truncated = false;
  std::optional<std::string> failure;
  std::string agent_model;

  bool operator==(const Transcript&) const = default;

  std::vector<double> satisfaction_scores() const;
};

}  // namespace asymdial
