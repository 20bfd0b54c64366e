// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace asymdial {

enum class Change { improve, not_change, decrease };

// "Improve", "Not Change", "Decrease".
std::string_view to_string(Change change);
std::optional<Change> change_from_string(std::string_view text);

// Judge verdict for the pair (turn index, turn index + 1).
struct TurnPairJudgment {
  int index = 0;
  std::string turn_pair;  // "Turn i -> Turn i+1"
  Change satisfaction_change = Change::not_change;
  double score = 0.0;
  std::string satisfaction_explanation;
  Change clarity_change = Change::not_change;
  std::string clarity_explanation;
  // A failed pair has no usable verdict; `failure` says why.
  bool failed = false;
  std::string failure;

  bool operator==(const TurnPairJudgment&) const = default;
};

std::string turn_pair_label(int index);

}  // namespace asymdial
