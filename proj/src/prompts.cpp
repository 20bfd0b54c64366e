// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "asymdial/annotate.hpp"
#include "asymdial/error.hpp"
#include "asymdial/rng.hpp"

namespace asymdial {

namespace {

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

constexpr const char* kUserSystem = R"(You are {name}. {description}

Your base profile (private):
{base_profile_items}

Your behavioral traits (private):
{behavioral_items}

Your contextual factors (private):
{contextual_items}

Your task profile (private):
- Task: {task}
- Difficulty Level: {difficulty_level}
- Task-specific attributes:
{task_specific_items}

Difficulty Instructions:
- Dialogue: {dialogue_instruction}
- Profile: {profile_instruction}
- Hidden State: {hidden_state_instruction}

Example messages:
{example_messages}

Message Format Requirements:
1. Your messages should be between {min_length} and {max_length} characters
2. Follow the difficulty instructions for dialogue, profile disclosure, and hidden state expression
3. Use the example messages as a guide for your communication style
4. Maintain consistency with your profile attributes

Inner Thoughts Format:
- Use the exact format: [INNER_THOUGHTS] your thoughts here [/INNER_THOUGHTS]
- Place your inner thoughts at the beginning of your message
- Keep thoughts concise and relevant to the conversation

Satisfaction Format:
- Use the exact format: [SATISFACTION] score - explanation [/SATISFACTION]
- Score must be a number between 0.0 and 1.0
- Place satisfaction after your inner thoughts
- Example: [SATISFACTION] 0.8 - The response was helpful but I need more details [/SATISFACTION]

Example Message Format:

[INNER_THOUGHTS] I'm not sure about the options yet [/INNER_THOUGHTS]

[SATISFACTION] 0.7 - The suggestions are good but I need more information [/SATISFACTION]

Could you tell me more about the features?

Remember to stay in character and respond naturally based on your profile.
)";

constexpr const char* kAgentDefault = R"(You are a helpful assistant helping a user with their task.

Requirements:
1. Your messages should be between {min_length} and {max_length} characters
2. Be professional, clear, and helpful
3. Respond only to information explicitly shared by the user in the conversation
4. Do not make assumptions about the user's preferences, demographic information, or needs
5. Ask clarifying questions when needed
6. Maintain a natural conversation flow
7. Only base your responses on what the user has explicitly told you in the conversation

Remember to be patient and understanding. Do not reference any information about the user that they haven't explicitly shared in the conversation.
)";

constexpr const char* kAgentProfile = R"(You are a helpful assistant helping a user with their task.

User Context:
- Name: {name}
{user_context_items}

Task Information:
- Task: {task}
{task_information_items}

Requirements:
1. Your messages should be between {min_length} and {max_length} characters
2. Be professional, clear, and helpful
3. Consider the user's profile when providing information
4. Adapt your communication style to match the user's preferences
5. Focus on addressing the user's specific needs and requirements
6. Provide relevant and accurate information
7. Ask clarifying questions when needed
8. Maintain a natural conversation flow

Remember to be patient and understanding, especially with users who have limited technical experience.
)";

constexpr const char* kTurnPair = R"(You are given a JSON file representing a multi-turn conversation between a user and an assistant. Each turn includes the user's message, the assistant's response, timestamp, and metadata with satisfaction and inner_thoughts.

For each pair of consecutive turns (e.g., Turn 0 -> Turn 1, Turn 1 -> Turn 2, etc.), perform the following analysis:

Turn {i} -> Turn {i_next}

User Satisfaction

Change from Previous Turn: [Improve / Not Change / Decrease]

Satisfaction Score (X+1): {score}

Explanation:
Did the assistant's previous response improve the user's experience, keep it steady, or reduce satisfaction? Justify based on the satisfaction score and the user's explanation.

User Clarity

Change in Clarity: [Improve / Not Change / Decrease]

Explanation:
Based on the user's message and inner thoughts in Turn {i_next}, assess whether their ability to express thoughts, preferences, or goals became clearer, stayed the same, or became less clear. Note specific changes, improvements, or ambiguities.

Now return the result as valid JSON in this exact format:
{{
  "turn_pair": "Turn {i} -> Turn {i_next}",
  "user_satisfaction": {{
    "change": "One of: Improve, Not Change, Decrease",
    "score": {score},
    "explanation": "Your explanation here"
  }},
  "user_clarity": {{
    "change": "One of: Improve, Not Change, Decrease",
    "explanation": "Your explanation here"
  }}
}}

Here is the conversation snippet:

User Message (Turn {i}): {prev_user_message}

Assistant Response (Turn {i}): {prev_assistant_message}

User Message (Turn {i_next}): {next_user_message}

Assistant Response (Turn {i_next}): {next_assistant_message}

User Inner Thoughts: {inner_thoughts}

Satisfaction Explanation: {satisfaction_explanation}
)";

constexpr const char* kSummary = R"(You are given a multi-turn conversation between a user and an assistant. Each turn includes a user satisfaction score.

Consider that each user's background, expertise, and goals may vary; present your analysis as nuanced insights and generalizable recommendations, avoiding absolute judgments.

Generate a comprehensive, detailed summary analysis of the conversation. Return strictly valid JSON with these fields:

1. summary_overall: A concise evaluation of overall user satisfaction trend (e.g., positive, negative, mixed).
2. topics_covered: A list of key topics or user intents addressed throughout the conversation.
3. statistics: An object containing:
   - average_score: Average satisfaction score across all turns.
   - min_score: Minimum score observed.
   - max_score: Maximum score observed.
   - score_variance: Variance of the satisfaction scores.
4. satisfaction_evolution: A list of objects for each turn:
   - turn_index: Index of the turn.
   - score: Satisfaction score at that turn.
   - delta: Change in score from the previous turn (null for first turn).
5. important_turns: A list of objects identifying critical turns where satisfaction changes significantly (e.g., change >= {important_threshold}):
   - turn_index: Index of the user turn.
   - user_message: The user's message at that turn.
   - score_before: Score at the previous turn.
   - score_after: Score at the following turn.
   - change: Numeric difference (score_after - score_before).
   - reason: Explanation based on conversation content.
6. detailed_findings: A list of objects providing deep insights for each important turn:
   - turn_index: Index of the turn.
   - context_before: The assistant and user messages immediately before this turn.
   - context_after: The assistant and user messages immediately after this turn.
   - analysis: Detailed rationale for why the score changed.
   - recommendation: Suggestions for how the assistant could improve at this point.
7. contextual_notes: A list of any relevant context, caveats, or user metadata considerations that influenced the analysis.
8. general_insights: A list of general patterns or best practices inferred from this conversation that could apply to a broad range of users.

Conversation file: {filename}

{conversation_text}
)";

constexpr const char* kOptionPool = R"(Generate a diverse list of {option_type} options for the task: {task}.

1. Generate 15-20 unique and realistic options.
2. Include both common and unique scenarios.
3. Consider different user perspectives and needs.
4. Make options specific to the task context.
5. Include some complex and challenging options.
6. Add one "Unknown/Not sure" option at the end.

Your task: Return a JSON array of strings.

Example: ["Option 1", "Option 2", "Unknown/Not sure"].

Write ONLY the JSON array. Do not include any explanations.
)";

constexpr const char* kBudget = R"(Generate budget information for the task: {task}.

1. Generate a JSON object with the structure:
{{
  "range": {{
    "min": number,
    "max": number
  }},
  "flexibility": "string",
  "payment_methods": ["string"]
}}
2. Consider:
   - Realistic price ranges for the task.
   - Different budget flexibility levels.
   - Various payment methods.
   - Include "Unknown/Not sure" as a possible flexibility option.

Write ONLY the JSON response. Do not include any explanations.
)";

constexpr const char* kRequirements = R"(Generate task-specific requirements and success criteria for:
Task: {task}
Base Profile: {base_profile}
Difficulty Level: {difficulty_level}
Option Number: {option_number} of {total_options}

1. Generate a JSON object with structure:
{{
  "task_requirements": {{
    "technical": ["string"],
    "non_technical": ["string"]
  }},
  "success_criteria": {{
    "must_meet": ["string"],
    "should_meet": ["string"],
    "nice_to_meet": ["string"]
  }}
}}
2. IMPORTANT: Make this profile AMBIGUOUS based on difficulty level {difficulty_level}:
   - For difficulty 3+: Include vague requirements like "something modern" or "good performance".
   - For difficulty 4+: Add contradictory requirements.
   - For difficulty 5: Make most requirements unclear, using phrases like "I think I need...".
   - Include more "Unknown/Not sure" entries at higher difficulties.
   - Add statements showing knowledge gaps like "I heard X is important but I'm not sure why".
   - For technical requirements, use imprecise language showing limited understanding.
3. Express confusion about technical specs - use incorrect terms or mix concepts.

Write ONLY the JSON response. Do not include any explanations or additional text.
)";

constexpr const char* kIdentity = R"(Based on the following user profile, generate a realistic name and description:

Base Profile:
{base_profile}

Behavioral Traits:
{behavioral_traits}

Contextual Factors:
{contextual_factors}

Task: {task}
Difficulty Level: {difficulty_level}

Generate a response in the following JSON format:
{{
  "name": "Realistic name that matches the profile",
  "description": "A detailed description of the user's background, personality, and current situation"
}}

1. The name should be culturally appropriate based on the profile
2. The description should be detailed and consistent with all profile attributes
3. The description should explain why they are interested in the task
4. Keep the description concise but informative (2-3 sentences)
)";

constexpr const char* kTaskAttributes = R"(Based on the following task and user profile, generate task-specific attributes:

Task: {task}
Base Profile:
{base_profile}

Generate a response in the following JSON format:
{{
  "task_specific_attributes": {{
    "budget_range": "string",
    "priority_features": ["string"],
    "usage_scenarios": ["string"],
    "preferred_brands": ["string"],
    "timeline": "string",
    "purchase_location": "string",
    "additional_requirements": ["string"]
  }}
}}

1. Attributes should be specific to the task and consistent with the user profile
2. Consider the user's tech experience, personality, and behavioral traits
3. Make the attributes realistic and detailed
4. Include at least 3 priority features and usage scenarios
5. IMPORTANT: Your response must be valid JSON only, with no additional text or explanation
)";

constexpr const char* kRefine = R"(You are improving the system prompt of a dialogue assistant. The assistant cannot see the user's profile and must work from what the user says.

Current system prompt:
{current_prompt}

General insights from analyzed conversations:
{insights}

Turns where user satisfaction changed sharply:
{turn_excerpts}

Write an improved system prompt for the assistant. Keep the rule that it responds only to information the user has explicitly shared. Do not mention any specific user, name or personal attribute. Return only the new system prompt text.
)";

std::string bullet_lines(const std::vector<std::pair<std::string, std::string>>& items) {
  std::string out;
  for (const auto& [key, value] : items) {
    if (!out.empty()) out += '\n';
    out += "- " + key + ": " + value;
  }
  return out;
}

template <typename T, std::size_t N>
std::vector<std::pair<std::string, std::string>> field_items(
    const T& object, const std::array<FieldRef<T>, N>& fields) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields) out.emplace_back(std::string(f.key), object.*f.member);
  return out;
}

std::string join(const std::vector<std::string>& values, std::string_view sep) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += sep;
    out += v;
  }
  return out;
}

std::string numbered(const std::vector<std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + values[i];
  }
  return out;
}

RenderedPrompt finish(const PromptOptions& options, std::string_view id, PromptRole role,
                      const Bindings& bindings) {
  const auto& tmpl = options.templates().get(id);
  RenderedPrompt out;
  out.role = role;
  out.template_id = std::string(id);
  out.text = tmpl.render(bindings);
  std::string canonical;
  for (const auto& [key, value] : bindings) {
    canonical += key;
    canonical += '\0';
    canonical += value;
    canonical += '\0';
  }
  out.digest = hex_digest(canonical);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// PromptTemplate

PromptTemplate::PromptTemplate(std::string id, std::string body)
    : id_(std::move(id)), body_(std::move(body)) {
  std::string literal;
  for (std::size_t i = 0; i < body_.size(); ++i) {
    const char c = body_[i];
    if (c == '{' && i + 1 < body_.size() && body_[i + 1] == '{') {
      literal += '{';
      ++i;
    } else if (c == '}' && i + 1 < body_.size() && body_[i + 1] == '}') {
      literal += '}';
      ++i;
    } else if (c == '{') {
      std::size_t j = i + 1;
      if (j >= body_.size() || !name_start(body_[j])) {
        throw ConfigError("template '" + id_ + "': malformed placeholder at offset " +
                          std::to_string(i));
      }
      while (j < body_.size() && name_char(body_[j])) ++j;
      if (j >= body_.size() || body_[j] != '}') {
        throw ConfigError("template '" + id_ + "': unterminated placeholder at offset " +
                          std::to_string(i));
      }
      if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
      literal.clear();
      std::string name = body_.substr(i + 1, j - i - 1);
      required_.insert(name);
      pieces_.push_back({true, std::move(name)});
      i = j;
    } else if (c == '}') {
      throw ConfigError("template '" + id_ + "': lone '}' at offset " + std::to_string(i));
    } else {
      literal += c;
    }
  }
  if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
}

std::string PromptTemplate::render(const Bindings& bindings) const {
  std::string missing;
  for (const auto& name : required_) {
    if (bindings.find(name) == bindings.end()) missing += (missing.empty() ? "" : ", ") + name;
  }
  if (!missing.empty()) {
    throw ContractViolation("template '" + id_ + "' has unbound placeholders: " + missing);
  }
  std::string out;
  for (const auto& piece : pieces_) {
    out += piece.placeholder ? bindings.find(piece.text)->second : piece.text;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Registry

const TemplateRegistry& TemplateRegistry::defaults() {
  static const TemplateRegistry registry = [] {
    TemplateRegistry r;
    const std::pair<std::string_view, const char*> bodies[] = {
        {template_ids::user_system, kUserSystem},
        {template_ids::agent_default, kAgentDefault},
        {template_ids::agent_profile, kAgentProfile},
        {template_ids::turn_pair, kTurnPair},
        {template_ids::summary, kSummary},
        {template_ids::option_pool, kOptionPool},
        {template_ids::budget, kBudget},
        {template_ids::requirements, kRequirements},
        {template_ids::identity, kIdentity},
        {template_ids::task_attributes, kTaskAttributes},
        {template_ids::refine, kRefine},
    };
    for (const auto& [id, body] : bodies) r.set(PromptTemplate(std::string(id), body));
    return r;
  }();
  return registry;
}

TemplateRegistry TemplateRegistry::with_overrides(const std::filesystem::path& dir) {
  TemplateRegistry r = defaults();
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("templates directory '" + dir.string() + "' does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const std::string id = path.stem().string();
    if (r.templates_.find(id) == r.templates_.end()) {
      throw ConfigError("template override '" + path.filename().string() +
                        "' does not name a known template");
    }
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    r.set(PromptTemplate(id, buf.str()));
  }
  return r;
}

const PromptTemplate& TemplateRegistry::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw ConfigError("unknown template '" + std::string(id) + "'");
  return it->second;
}

void TemplateRegistry::set(PromptTemplate tmpl) {
  const std::string id = tmpl.id();
  templates_.insert_or_assign(id, std::move(tmpl));
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// Renderers

std::vector<std::pair<std::string, std::string>> specifics_items(const TaskSpecifics& s) {
  auto list = [](const std::vector<std::string>& values) {
    return values.empty() ? std::string("(none given)") : join(values, ", ");
  };
  return {
      {"budget_range", s.budget_range.display()},
      {"priority_features", list(s.priority_features)},
      {"usage_scenarios", list(s.usage_scenarios)},
      {"preferred_brands", list(s.preferred_brands)},
      {"timeline", s.timeline},
      {"purchase_location", s.purchase_location},
      {"additional_requirements", list(s.additional_requirements)},
      {"technical_requirements", list(s.technical_requirements)},
      {"non_technical_requirements", list(s.non_technical_requirements)},
      {"must_meet", list(s.must_meet)},
      {"should_meet", list(s.should_meet)},
      {"nice_to_meet", list(s.nice_to_meet)},
      {"flexibility", s.flexibility},
      {"payment_methods", list(s.payment_methods)},
  };
}

RenderedPrompt render_user_system_prompt(const UserProfile& profile, const PromptOptions& options) {
  const DifficultyTable& table =
      options.difficulty_table ? *options.difficulty_table : default_difficulty_table();
  auto task_items = specifics_items(profile.specifics);
  std::string task_lines;
  for (const auto& [key, value] : task_items) {
    if (!task_lines.empty()) task_lines += '\n';
    task_lines += "  - " + key + ": " + value;
  }
  const Bindings bindings = {
      {"name", profile.base.name},
      {"description", profile.base.description},
      {"base_profile_items", bullet_lines(field_items(profile.base, kBaseFields))},
      {"behavioral_items", bullet_lines(field_items(profile.context, kBehavioralFields))},
      {"contextual_items", bullet_lines(field_items(profile.context, kContextualFields))},
      {"task", profile.task.task_name},
      {"difficulty_level", std::to_string(profile.difficulty.level)},
      {"task_specific_items", task_lines},
      {"dialogue_instruction", profile.difficulty.instructions.dialogue},
      {"profile_instruction", profile.difficulty.instructions.profile},
      {"hidden_state_instruction", profile.difficulty.instructions.hidden_state},
      {"example_messages", numbered(table.examples_for_level(profile.difficulty.level))},
      {"min_length", std::to_string(options.user_length.min)},
      {"max_length", std::to_string(options.user_length.max)},
  };
  return finish(options, template_ids::user_system, PromptRole::system, bindings);
}

RenderedPrompt render_agent_system_prompt(const TaskInstance& task, const UserProfile* profile,
                                          bool share_profile, const PromptOptions& options) {
  Bindings bindings = {
      {"min_length", std::to_string(options.assistant_length.min)},
      {"max_length", std::to_string(options.assistant_length.max)},
  };
  if (!share_profile) {
    return finish(options, template_ids::agent_default, PromptRole::system, bindings);
  }
  if (!profile) throw ContractViolation("share_profile requires a profile");
  auto context = field_items(profile->base, kBaseFields);
  for (auto& item : field_items(profile->context, kBehavioralFields)) context.push_back(item);
  for (auto& item : field_items(profile->context, kContextualFields)) context.push_back(item);
  context.emplace_back("description", profile->base.description);
  bindings["name"] = profile->base.name;
  bindings["user_context_items"] = bullet_lines(context);
  bindings["task"] = task.task_name;
  bindings["task_information_items"] = bullet_lines(specifics_items(profile->specifics));
  return finish(options, template_ids::agent_profile, PromptRole::system, bindings);
}

RenderedPrompt render_turn_pair_prompt(const Turn& prev, const Turn& next, int index,
                                       const PromptOptions& options) {
  if (!next.hidden.parsed) {
    throw ContractViolation("turn " + std::to_string(next.index) + " has no parsed hidden state");
  }
  const Bindings bindings = {
      {"i", std::to_string(index)},
      {"i_next", std::to_string(index + 1)},
      {"score", format_number(next.hidden.satisfaction_score)},
      {"prev_user_message", prev.user_message},
      {"prev_assistant_message", prev.assistant_message},
      {"next_user_message", next.user_message},
      {"next_assistant_message", next.assistant_message},
      {"inner_thoughts", next.hidden.inner_thoughts},
      {"satisfaction_explanation", next.hidden.satisfaction_explanation},
  };
  return finish(options, template_ids::turn_pair, PromptRole::user, bindings);
}

std::string conversation_text(const Transcript& transcript) {
  std::string out;
  for (const auto& turn : transcript.turns) {
    if (!out.empty()) out += '\n';
    out += "Turn " + std::to_string(turn.index) + "\n";
    out += "User: " + turn.user_message + "\n";
    out += "Assistant: " + turn.assistant_message + "\n";
    out += "Satisfaction score: " + format_number(turn.hidden.satisfaction_score) + "\n";
  }
  return out;
}

RenderedPrompt render_summary_prompt(const Transcript& transcript, std::string_view filename,
                                     const PromptOptions& options) {
  if (transcript.turns.empty()) throw ContractViolation("summary needs at least one turn");
  const Bindings bindings = {
      {"important_threshold", format_number(options.important_turn_threshold)},
      {"filename", std::string(filename)},
      {"conversation_text", conversation_text(transcript)},
  };
  return finish(options, template_ids::summary, PromptRole::user, bindings);
}

RenderedPrompt render_option_pool_prompt(std::string_view option_type, const TaskInstance& task,
                                         const PromptOptions& options) {
  return finish(options, template_ids::option_pool, PromptRole::user,
                {{"option_type", std::string(option_type)}, {"task", task.task_name}});
}

RenderedPrompt render_budget_prompt(const TaskInstance& task, const PromptOptions& options) {
  return finish(options, template_ids::budget, PromptRole::user, {{"task", task.task_name}});
}

RenderedPrompt render_requirements_prompt(const TaskInstance& task, const BaseProfile& base,
                                          int difficulty_level, int option_number,
                                          int total_options, const PromptOptions& options) {
  return finish(options, template_ids::requirements, PromptRole::user,
                {{"task", task.task_name},
                 {"base_profile", base_attributes_json(base).dump(2)},
                 {"difficulty_level", std::to_string(difficulty_level)},
                 {"option_number", std::to_string(option_number)},
                 {"total_options", std::to_string(total_options)}});
}

RenderedPrompt render_identity_prompt(const UserProfile& profile, const PromptOptions& options) {
  return finish(options, template_ids::identity, PromptRole::user,
                {{"base_profile", base_attributes_json(profile.base).dump(2)},
                 {"behavioral_traits", behavioral_json(profile.context).dump(2)},
                 {"contextual_factors", contextual_json(profile.context).dump(2)},
                 {"task", profile.task.task_name},
                 {"difficulty_level", std::to_string(profile.difficulty.level)}});
}

RenderedPrompt render_task_attributes_prompt(const TaskInstance& task, const BaseProfile& base,
                                             const PromptOptions& options) {
  return finish(options, template_ids::task_attributes, PromptRole::user,
                {{"task", task.task_name}, {"base_profile", base_attributes_json(base).dump(2)}});
}

RenderedPrompt render_refine_prompt(std::string_view current_prompt,
                                    const std::vector<std::string>& insights,
                                    const std::vector<std::string>& turn_excerpts,
                                    const PromptOptions& options) {
  auto dashed = [](const std::vector<std::string>& values) {
    if (values.empty()) return std::string("- (none)");
    std::string out;
    for (const auto& v : values) out += (out.empty() ? "- " : "\n- ") + v;
    return out;
  };
  return finish(options, template_ids::refine, PromptRole::user,
                {{"current_prompt", std::string(current_prompt)},
                 {"insights", dashed(insights)},
                 {"turn_excerpts", dashed(turn_excerpts)}});
}

}  // namespace asymdial
