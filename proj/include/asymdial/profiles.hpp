// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "asymdial/config.hpp"

namespace asymdial {

class TextBackend;

inline constexpr std::string_view kUnknown = "Unknown";
inline constexpr std::string_view kUnknownNotSure = "Unknown/Not sure";

// ---------------------------------------------------------------------------
// Value pools

struct Pool {
  std::string name;
  std::vector<std::string> values;
};

// Ordered named pools. Order within a pool is significant: seeded draws index
// into it.
class PoolSet {
 public:
  PoolSet() = default;
  explicit PoolSet(std::vector<Pool> pools);

  // Throws ConfigError naming the pool when it is missing or empty.
  const std::vector<std::string>& at(std::string_view name) const;
  bool contains(std::string_view name) const;
  void set(std::string name, std::vector<std::string> values);
  const std::vector<Pool>& pools() const noexcept { return pools_; }

  // Every required pool present, non-empty, duplicate-free.
  void validate(const std::vector<std::string_view>& required) const;

 private:
  std::vector<Pool> pools_;
};

// Attribute pools for base and context profiles, keyed by attribute name.
PoolSet default_profile_pools();
// Static pools for offline task-specifics generation (must_have, nice_to_have,
// deal_breakers, budget_flexibility, payment_methods, knowledge_levels,
// urgency_levels, decision_factors, purchase_locations).
PoolSet default_task_pools();

// Applies `<prefix><name> = a | b | c` entries from a key-value config on top
// of `base`. Names not present in `base` raise ConfigError.
PoolSet apply_pool_overrides(PoolSet base, const KeyValueConfig& config,
                             std::string_view prefix = "pool.");

// ---------------------------------------------------------------------------
// Profile types

struct BaseProfile {
  std::string age_group;
  std::string tech_experience;
  std::string language_style;
  std::string personality;
  std::string culture;
  std::string decision_style;
  std::string communication_style;
  std::string expressiveness;
  std::string social_context;
  std::string physical_status;
  std::string name;
  std::string description;

  bool operator==(const BaseProfile&) const = default;
};

struct ContextProfile {
  // behavioral traits
  std::string patience;
  std::string attention_to_detail;
  std::string risk_tolerance;
  std::string adaptability;
  std::string learning_style;
  // contextual factors
  std::string time_constraint;
  std::string environment;
  std::string social_pressure;
  std::string previous_experience;

  bool operator==(const ContextProfile&) const = default;
};

template <typename T>
struct FieldRef {
  std::string_view key;
  std::string T::*member;
};

inline constexpr std::array<FieldRef<BaseProfile>, 10> kBaseFields = {{
    {"age_group", &BaseProfile::age_group},
    {"tech_experience", &BaseProfile::tech_experience},
    {"language_style", &BaseProfile::language_style},
    {"personality", &BaseProfile::personality},
    {"culture", &BaseProfile::culture},
    {"decision_style", &BaseProfile::decision_style},
    {"communication_style", &BaseProfile::communication_style},
    {"expressiveness", &BaseProfile::expressiveness},
    {"social_context", &BaseProfile::social_context},
    {"physical_status", &BaseProfile::physical_status},
}};

inline constexpr std::array<FieldRef<ContextProfile>, 5> kBehavioralFields = {{
    {"patience", &ContextProfile::patience},
    {"attention_to_detail", &ContextProfile::attention_to_detail},
    {"risk_tolerance", &ContextProfile::risk_tolerance},
    {"adaptability", &ContextProfile::adaptability},
    {"learning_style", &ContextProfile::learning_style},
}};

inline constexpr std::array<FieldRef<ContextProfile>, 4> kContextualFields = {{
    {"time_constraint", &ContextProfile::time_constraint},
    {"environment", &ContextProfile::environment},
    {"social_pressure", &ContextProfile::social_pressure},
    {"previous_experience", &ContextProfile::previous_experience},
}};

struct TaskInstance {
  std::string category;
  std::string task_name;
  std::string description;

  bool operator==(const TaskInstance&) const = default;
};

inline constexpr std::array<std::string_view, 5> kTaskCategories = {
    "Technology", "Healthcare", "Daily Living", "Housing", "Caregiver Support"};

// The built-in library: 5 categories x 3 tasks.
const std::vector<TaskInstance>& task_library();
// Throws ValidationError unless the pair is in the library or both fields are
// non-empty user-supplied text.
void validate_task(const TaskInstance& task);
std::optional<TaskInstance> find_task(std::string_view task_name);

struct BudgetRange {
  // Either free text, or a numeric range with empty text.
  std::string text;
  std::optional<double> min;
  std::optional<double> max;

  bool operator==(const BudgetRange&) const = default;
  std::string display() const;
};

struct TaskSpecifics {
  BudgetRange budget_range;
  std::vector<std::string> priority_features;
  std::vector<std::string> usage_scenarios;
  std::vector<std::string> preferred_brands;
  std::string timeline;
  std::string purchase_location;
  std::vector<std::string> additional_requirements;
  std::vector<std::string> technical_requirements;
  std::vector<std::string> non_technical_requirements;
  std::vector<std::string> must_meet;
  std::vector<std::string> should_meet;
  std::vector<std::string> nice_to_meet;
  std::string flexibility;
  std::vector<std::string> payment_methods;
  // Set when a backend reply could not be used and static pools filled in.
  std::vector<std::string> warnings;

  bool operator==(const TaskSpecifics&) const = default;

  // Number of "Unknown/Not sure" values across all fields.
  std::size_t unknown_count() const;
};

enum class InstructionKind { dialogue, profile, hidden_state };

struct DifficultyInstructions {
  std::string dialogue;
  std::string profile;
  std::string hidden_state;

  bool operator==(const DifficultyInstructions&) const = default;
};

struct DifficultyDims {
  int style = 1;
  int length = 1;
  int content = 1;
  int tone = 1;

  bool operator==(const DifficultyDims&) const = default;
};

struct DifficultyConfig {
  int level = 1;
  DifficultyDims dims;
  DifficultyInstructions instructions;

  bool operator==(const DifficultyConfig&) const = default;
  void validate() const;
};

// Instruction strings and example user messages for levels 1..5.
struct DifficultyTable {
  std::array<DifficultyInstructions, 5> instructions;
  std::array<std::vector<std::string>, 5> example_messages;

  const DifficultyInstructions& for_level(int level) const;
  const std::vector<std::string>& examples_for_level(int level) const;
};

const DifficultyTable& default_difficulty_table();
// Keys difficulty.<level>.dialogue / .profile / .hidden_state / .examples.
DifficultyTable apply_difficulty_overrides(DifficultyTable base, const KeyValueConfig& config);

class UncertaintyLevel {
 public:
  constexpr UncertaintyLevel() = default;
  // Throws ValidationError unless percent is 0, 40, 60 or 80.
  static UncertaintyLevel from_percent(int percent);
  constexpr int percent() const noexcept { return percent_; }
  bool operator==(const UncertaintyLevel&) const = default;

 private:
  constexpr explicit UncertaintyLevel(int p) : percent_(p) {}
  int percent_ = 0;
};

inline constexpr std::array<int, 4> kUncertaintyPercents = {0, 40, 60, 80};

struct UserProfile {
  BaseProfile base;
  ContextProfile context;
  TaskInstance task;
  TaskSpecifics specifics;
  DifficultyConfig difficulty;
  UncertaintyLevel uncertainty;
  std::uint64_t seed = 0;
  std::vector<std::string> masked_fields;
  std::vector<std::string> warnings;

  bool operator==(const UserProfile&) const = default;
};

// ---------------------------------------------------------------------------
// Attribute paths ("base.age_group", "context.patience", "specifics.timeline")

// Base fields (without name/description), context fields, and the scalar task
// specifics; task identity is never maskable.
const std::vector<std::string>& maskable_paths();
std::string read_attribute(const UserProfile& profile, std::string_view path);
void write_attribute(UserProfile& profile, std::string_view path, std::string value);

// round-half-up(percent / 100 * n), computed exactly in integers.
std::size_t mask_count(int percent, std::size_t n);

// ---------------------------------------------------------------------------
// Operations

// Draws every base and context attribute uniformly from its pool. Name and
// description are left empty.
std::pair<BaseProfile, ContextProfile> generate_base_profile(std::uint64_t seed,
                                                             const PoolSet& pools);

// With a backend: renders the task attribute, budget and requirements prompts
// and validates the JSON replies (3 attempts each, then static fallback with
// a warning). Without: seeded draws from the static pools. At difficulty >= 3
// "Unknown/Not sure" entries are injected with a probability that grows with
// the level.
TaskSpecifics generate_task_specifics(const TaskInstance& task, const BaseProfile& base,
                                      const DifficultyConfig& difficulty, std::uint64_t seed,
                                      TextBackend* backend,
                                      const PoolSet& task_pools = default_task_pools());

// Probability of an "Unknown/Not sure" injection per field at a level.
double unknown_injection_probability(int level);

// Throws ContractViolation when the profile is already masked.
UserProfile apply_uncertainty_mask(UserProfile profile, UncertaintyLevel level,
                                   std::uint64_t seed);

// Throws ValidationError when level is outside 1..5.
DifficultyConfig assign_difficulty(std::uint64_t seed, std::optional<int> level,
                                   const DifficultyTable& table = default_difficulty_table());

// Fills name and description through the backend, or "User-<seed>" and a
// templated sentence when absent or unusable.
void fill_identity(UserProfile& profile, TextBackend* backend);

struct ProfileRequest {
  std::uint64_t seed = 0;
  std::optional<TaskInstance> task;      // explicit task
  std::optional<std::string> category;   // draw a task from this category
  std::optional<int> difficulty;         // 1..5, drawn when absent
  UncertaintyLevel uncertainty;
  PoolSet profile_pools = default_profile_pools();
  PoolSet task_pools = default_task_pools();
  const DifficultyTable* difficulty_table = nullptr;
};

// Full pipeline: base/context, task, difficulty, specifics, mask, identity.
// Each stage draws from its own stream derived from request.seed.
UserProfile generate_profile(const ProfileRequest& request, TextBackend* backend = nullptr);

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json profile_to_json(const UserProfile& profile);
// Throws ValidationError on missing or mistyped fields.
UserProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json specifics_to_json(const TaskSpecifics& specifics);
TaskSpecifics specifics_from_json(const nlohmann::json& doc);
// Attribute maps without name/description, as embedded in prompts.
nlohmann::json base_attributes_json(const BaseProfile& base);
nlohmann::json behavioral_json(const ContextProfile& context);
nlohmann::json contextual_json(const ContextProfile& context);

// Non-sentinel attribute values the agent must not see when the profile is
// not shared: base/context values, name, description and every task-specific
// string.
std::vector<std::string> private_attribute_values(const UserProfile& profile);

}  // namespace asymdial
