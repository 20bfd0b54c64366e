// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "asymdial/profiles.hpp"
#include "asymdial/transcript.hpp"

namespace asymdial {

enum class PromptRole { system, user };

struct RenderedPrompt {
  PromptRole role = PromptRole::system;
  std::string text;
  std::string template_id;
  std::string digest;  // over the bound values

  std::string provenance() const { return template_id + "@" + digest; }
};

using Bindings = std::map<std::string, std::string, std::less<>>;

// Body text with {name} placeholders; "{{" and "}}" render as literal braces.
class PromptTemplate {
 public:
  // Throws ConfigError on a lone brace or a malformed placeholder name.
  PromptTemplate(std::string id, std::string body);

  const std::string& id() const noexcept { return id_; }
  const std::string& body() const noexcept { return body_; }
  const std::set<std::string>& required_placeholders() const noexcept { return required_; }

  // Throws ContractViolation naming every unbound placeholder.
  std::string render(const Bindings& bindings) const;

 private:
  struct Piece {
    bool placeholder;
    std::string text;
  };
  std::string id_;
  std::string body_;
  std::vector<Piece> pieces_;
  std::set<std::string> required_;
};

namespace template_ids {
inline constexpr std::string_view user_system = "user_system";
inline constexpr std::string_view agent_default = "agent_default";
inline constexpr std::string_view agent_profile = "agent_profile";
inline constexpr std::string_view turn_pair = "turn_pair";
inline constexpr std::string_view summary = "summary";
inline constexpr std::string_view option_pool = "option_pool";
inline constexpr std::string_view budget = "budget";
inline constexpr std::string_view requirements = "requirements";
inline constexpr std::string_view identity = "identity";
inline constexpr std::string_view task_attributes = "task_attributes";
inline constexpr std::string_view refine = "refine";
}  // namespace template_ids

class TemplateRegistry {
 public:
  static const TemplateRegistry& defaults();

  // Defaults, with every <id>.txt in dir replacing the template of that id.
  // Unknown stems raise ConfigError.
  static TemplateRegistry with_overrides(const std::filesystem::path& dir);

  const PromptTemplate& get(std::string_view id) const;
  void set(PromptTemplate tmpl);
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

struct LengthBounds {
  int min = 0;
  int target = 0;
  int max = 0;

  bool operator==(const LengthBounds&) const = default;
};

inline constexpr LengthBounds kUserLength{20, 50, 100};
inline constexpr LengthBounds kAssistantLength{30, 80, 150};

struct PromptOptions {
  const TemplateRegistry* registry = nullptr;          // defaults when null
  const DifficultyTable* difficulty_table = nullptr;   // defaults when null
  LengthBounds user_length = kUserLength;
  LengthBounds assistant_length = kAssistantLength;
  double important_turn_threshold = 0.2;

  const TemplateRegistry& templates() const {
    return registry ? *registry : TemplateRegistry::defaults();
  }
};

RenderedPrompt render_user_system_prompt(const UserProfile& profile,
                                         const PromptOptions& options = {});

// Throws ContractViolation when share_profile is set without a profile.
RenderedPrompt render_agent_system_prompt(const TaskInstance& task, const UserProfile* profile,
                                          bool share_profile, const PromptOptions& options = {});

// Throws ContractViolation when `next` carries no parsed hidden state.
RenderedPrompt render_turn_pair_prompt(const Turn& prev, const Turn& next, int index,
                                       const PromptOptions& options = {});

// Throws ContractViolation on an empty transcript.
RenderedPrompt render_summary_prompt(const Transcript& transcript, std::string_view filename,
                                     const PromptOptions& options = {});

// Conversation text embedded in the summary prompt.
std::string conversation_text(const Transcript& transcript);

RenderedPrompt render_option_pool_prompt(std::string_view option_type, const TaskInstance& task,
                                         const PromptOptions& options = {});
RenderedPrompt render_budget_prompt(const TaskInstance& task, const PromptOptions& options = {});
RenderedPrompt render_requirements_prompt(const TaskInstance& task, const BaseProfile& base,
                                          int difficulty_level, int option_number,
                                          int total_options, const PromptOptions& options = {});
RenderedPrompt render_identity_prompt(const UserProfile& profile,
                                      const PromptOptions& options = {});
RenderedPrompt render_task_attributes_prompt(const TaskInstance& task, const BaseProfile& base,
                                             const PromptOptions& options = {});

// Asks the judge for an improved agent system prompt from analysis excerpts.
RenderedPrompt render_refine_prompt(std::string_view current_prompt,
                                    const std::vector<std::string>& insights,
                                    const std::vector<std::string>& turn_excerpts,
                                    const PromptOptions& options = {});

// "key: value" lines of the task-specific attributes, as shown in prompts.
std::vector<std::pair<std::string, std::string>> specifics_items(const TaskSpecifics& specifics);

}  // namespace asymdial
