// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/profiles.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "asymdial/backends.hpp"
#include "asymdial/error.hpp"
#include "asymdial/json_reply.hpp"
#include "asymdial/prompts.hpp"
#include "asymdial/rng.hpp"

namespace asymdial {

using nlohmann::json;

namespace {

enum Stream : std::uint64_t {
  kStreamBase = 1,
  kStreamTask = 2,
  kStreamDifficulty = 3,
  kStreamSpecifics = 4,
  kStreamMask = 5,
};

constexpr int kBackendAttempts = 3;

std::vector<std::string> split_values(std::string_view csv) { return split_trimmed(csv, ','); }

std::string lower_first(std::string text) {
  if (!text.empty()) text[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(text[0])));
  return text;
}

std::string lower_all(std::string text) {
  for (auto& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return text;
}

bool is_sentinel(std::string_view value) { return value == kUnknown || value == kUnknownNotSure; }

}  // namespace

// ---------------------------------------------------------------------------
// PoolSet

PoolSet::PoolSet(std::vector<Pool> pools) : pools_(std::move(pools)) {}

const std::vector<std::string>& PoolSet::at(std::string_view name) const {
  for (const auto& pool : pools_) {
    if (pool.name == name) {
      if (pool.values.empty()) throw ConfigError("pool '" + pool.name + "' is empty");
      return pool.values;
    }
  }
  throw ConfigError("pool '" + std::string(name) + "' is missing");
}

bool PoolSet::contains(std::string_view name) const {
  return std::any_of(pools_.begin(), pools_.end(), [&](const Pool& p) { return p.name == name; });
}

void PoolSet::set(std::string name, std::vector<std::string> values) {
  for (auto& pool : pools_) {
    if (pool.name == name) {
      pool.values = std::move(values);
      return;
    }
  }
  pools_.push_back({std::move(name), std::move(values)});
}

void PoolSet::validate(const std::vector<std::string_view>& required) const {
  for (auto name : required) at(name);
  for (const auto& pool : pools_) {
    if (pool.values.empty()) throw ConfigError("pool '" + pool.name + "' is empty");
    std::set<std::string_view> seen;
    for (const auto& v : pool.values) {
      if (!seen.insert(v).second) {
        throw ConfigError("pool '" + pool.name + "' repeats value '" + v + "'");
      }
    }
  }
}

PoolSet default_profile_pools() {
  return PoolSet({
      {"age_group", split_values("18-24, 25-34, 35-44, 45-54, 55-64, 65+")},
      {"tech_experience", split_values("Expert, Advanced, Intermediate, Beginner, Novice")},
      {"language_style", split_values("Formal, Casual, Technical, Simple, Professional")},
      {"personality", split_values("Friendly, Reserved, Outgoing, Analytical, Creative")},
      {"culture", split_values("Western, Eastern, Middle Eastern, African, Latin American")},
      {"decision_style", split_values("Rational, Intuitive, Cautious, Impulsive, Balanced")},
      {"communication_style", split_values("Direct, Indirect, Detailed, Concise, Adaptive")},
      {"expressiveness", split_values("Very Expressive, Moderately Expressive, Neutral, Reserved, "
                                      "Very Reserved")},
      {"social_context", split_values("Professional, Personal, Academic, Social, Mixed")},
      {"physical_status", split_values("Active, Sedentary, Limited Mobility, Athletic, Average")},
      {"patience", split_values("Very Patient, Patient, Moderate, Impatient, Very Impatient")},
      {"attention_to_detail", split_values("Very Detailed, Detailed, Moderate, Basic, Minimal")},
      {"risk_tolerance", split_values("Very Risk-Averse, Risk-Averse, Moderate, Risk-Taking, "
                                      "Very Risk-Taking")},
      {"adaptability", split_values("Very Adaptable, Adaptable, Moderate, Resistant, "
                                    "Very Resistant")},
      {"learning_style", split_values("Visual, Auditory, Reading/Writing, Kinesthetic, Mixed")},
      {"time_constraint", split_values("Very Urgent, Urgent, Moderate, Flexible, Very Flexible")},
      {"environment", split_values("Home, Office, Public Space, Mobile, Mixed")},
      {"social_pressure", split_values("High, Moderate, Low, None, Mixed")},
      {"previous_experience", split_values("Extensive, Moderate, Limited, None, Mixed")},
  });
}

PoolSet default_task_pools() {
  return PoolSet({
      {"must_have",
       split_values("High quality and durability, Latest technology and features, Good value for "
                    "money, Brand reputation, Ease of use, Compatibility with existing devices, "
                    "Long battery life, Fast performance, Good customer support, Warranty "
                    "coverage, Environmentally friendly, Customization options, Future-proof "
                    "design, Security features, User-friendly interface, Portability, "
                    "Reliability, Energy efficiency, Maintenance requirements, Upgradeability")},
      {"nice_to_have",
       split_values("Premium design, Advanced features, Smart home integration, Cloud storage, "
                    "Wireless charging, Water resistance, Fingerprint sensor, Face recognition, "
                    "AI capabilities, Virtual assistant, Gaming features, Professional tools, "
                    "Creative software, Collaboration features, Remote access, Backup solutions, "
                    "Multi-device sync, Custom themes, Accessibility features, Health "
                    "monitoring")},
      {"deal_breakers",
       split_values("Poor quality, High maintenance, Limited warranty, Poor customer service, "
                    "Compatibility issues, Security concerns, Short lifespan, Difficult to use, "
                    "Expensive repairs, Limited support, Poor performance, Battery issues, "
                    "Overheating problems, Software bugs, Privacy concerns, Limited storage, "
                    "Slow updates, Restrictive policies, Poor connectivity, Limited "
                    "customization")},
      {"budget_flexibility",
       {"Very flexible - willing to pay more for better quality",
        "Somewhat flexible - can adjust for important features",
        "Moderate - prefer to stay within range but can be convinced",
        "Limited - strict budget constraints",
        "Fixed - cannot exceed budget under any circumstances",
        "Open-ended - quality is more important than cost",
        "Value-focused - looking for best price-performance ratio",
        "Premium - willing to pay for top-tier options",
        "Budget-conscious - seeking best deals",
        "Investment-minded - considering long-term value"}},
      {"payment_methods",
       split_values("Credit card, Debit card, Bank transfer, PayPal, Digital wallet, Cash, "
                    "Installment plan, Lease option, Trade-in, Gift cards, Cryptocurrency, "
                    "Company account, Financing, Layaway, Subscription")},
      {"knowledge_levels",
       {"Expert - very knowledgeable in the field",
        "Advanced - good understanding of technical aspects",
        "Intermediate - familiar with basic concepts",
        "Beginner - limited knowledge but eager to learn",
        "Novice - completely new to the subject", "Professional - industry experience",
        "Enthusiast - self-taught with practical experience",
        "Student - learning and researching", "Casual user - basic understanding",
        "Uncertain - not sure about technical details"}},
      {"urgency_levels",
       {"Immediate - needed right away", "Urgent - within a few days", "Soon - within a week",
        "Planned - within a month", "Future - planning ahead", "Flexible - no strict timeline",
        "Research phase - gathering information", "Comparison phase - evaluating options",
        "Decision phase - ready to choose", "Exploratory - just starting to look"}},
      {"decision_factors",
       split_values("Price and budget, Quality and durability, Features and functionality, Brand "
                    "reputation, User reviews, Technical specifications, Design and aesthetics, "
                    "Ease of use, Customer support, Warranty and protection, Future "
                    "compatibility, Environmental impact, Social proof, Personal preferences, "
                    "Professional requirements, Lifestyle fit, Long-term value, Maintenance "
                    "needs, Security features, Innovation level")},
      {"purchase_locations", {"Online", "In store", "Either online or in store"}},
  });
}

PoolSet apply_pool_overrides(PoolSet base, const KeyValueConfig& config,
                             std::string_view prefix) {
  for (const auto& [name, value] : config.with_prefix(prefix)) {
    if (!base.contains(name)) {
      throw ConfigError("unknown pool '" + name + "' in configuration");
    }
    auto values = split_trimmed(value, '|');
    std::erase_if(values, [](const std::string& v) { return v.empty(); });
    if (values.empty()) throw ConfigError("pool '" + name + "' is empty");
    base.set(name, std::move(values));
  }
  return base;
}

// ---------------------------------------------------------------------------
// Tasks

const std::vector<TaskInstance>& task_library() {
  static const std::vector<TaskInstance> library = [] {
    const std::vector<std::pair<std::string, std::vector<std::string>>> table = {
        {"Technology",
         {"Buy a smartphone", "Reset an online password", "Teach my parent to use video calls"}},
        {"Healthcare",
         {"Refill my prescription", "Schedule a doctor visit",
          "Find a caregiver for an elderly person"}},
        {"Daily Living",
         {"Order groceries online", "Set medication reminders",
          "Arrange transportation to a clinic"}},
        {"Housing",
         {"Rent an apartment", "Find an accessible home",
          "Arrange home modifications for elderly"}},
        {"Caregiver Support",
         {"Book a nurse for my father", "Choose a phone for my mom",
          "Find cognitive exercises for dementia prevention"}},
    };
    std::vector<TaskInstance> out;
    for (const auto& [category, tasks] : table) {
      for (const auto& name : tasks) {
        out.push_back({category, name, "The user wants to " + lower_first(name) + "."});
      }
    }
    return out;
  }();
  return library;
}

std::optional<TaskInstance> find_task(std::string_view task_name) {
  for (const auto& t : task_library()) {
    if (t.task_name == task_name) return t;
  }
  return std::nullopt;
}

void validate_task(const TaskInstance& task) {
  for (const auto& t : task_library()) {
    if (t.category == task.category && t.task_name == task.task_name) return;
  }
  if (trim(task.category).empty() || trim(task.task_name).empty()) {
    throw ValidationError("task needs a non-empty category and task name");
  }
}

// ---------------------------------------------------------------------------
// Specifics

std::string BudgetRange::display() const {
  if (!text.empty() || (!min && !max)) return text;
  auto num = [](double v) {
    std::string s = std::to_string(static_cast<long long>(v));
    if (static_cast<double>(static_cast<long long>(v)) != v) s = std::to_string(v);
    return s;
  };
  if (min && max) return num(*min) + "-" + num(*max);
  return min ? "from " + num(*min) : "up to " + num(*max);
}

std::size_t TaskSpecifics::unknown_count() const {
  std::size_t n = 0;
  auto scalar = [&](const std::string& v) { n += v == kUnknownNotSure ? 1 : 0; };
  auto list = [&](const std::vector<std::string>& vs) {
    n += static_cast<std::size_t>(std::count(vs.begin(), vs.end(), kUnknownNotSure));
  };
  scalar(budget_range.text);
  scalar(timeline);
  scalar(purchase_location);
  scalar(flexibility);
  for (const auto* vs : {&priority_features, &usage_scenarios, &preferred_brands,
                         &additional_requirements, &technical_requirements,
                         &non_technical_requirements, &must_meet, &should_meet, &nice_to_meet,
                         &payment_methods}) {
    list(*vs);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Difficulty

void DifficultyConfig::validate() const {
  auto in_range = [](int v) { return v >= 1 && v <= 5; };
  if (!in_range(level)) throw ValidationError("difficulty level must be in 1..5");
  if (!in_range(dims.style) || !in_range(dims.length) || !in_range(dims.content) ||
      !in_range(dims.tone)) {
    throw ValidationError("difficulty dimensions must be in 1..5");
  }
  if (instructions.dialogue.empty() || instructions.profile.empty() ||
      instructions.hidden_state.empty()) {
    throw ValidationError("difficulty instructions must be non-empty");
  }
}

const DifficultyInstructions& DifficultyTable::for_level(int level) const {
  if (level < 1 || level > 5) throw ValidationError("difficulty level must be in 1..5");
  return instructions[static_cast<std::size_t>(level - 1)];
}

const std::vector<std::string>& DifficultyTable::examples_for_level(int level) const {
  if (level < 1 || level > 5) throw ValidationError("difficulty level must be in 1..5");
  return example_messages[static_cast<std::size_t>(level - 1)];
}

const DifficultyTable& default_difficulty_table() {
  static const DifficultyTable table = {
      {{
          {"Write with a highly structured logical flow. Be concise yet comprehensive, state all "
           "necessary information explicitly and keep an appropriate, consistent tone.",
           "Share the profile details and task attributes that matter as soon as they are "
           "relevant.",
           "Keep your inner thoughts and satisfaction closely aligned with what you say."},
          {"Write in a mostly organized way with only small gaps. Give the key facts and add "
           "minor details when asked. Keep the tone steady.",
           "Share most relevant profile details, leaving a few for follow-up questions.",
           "Let inner thoughts add small reservations that you do not always voice."},
          {"Mix organized and loosely connected statements. Leave out some details and offer "
           "them only when asked. Let the tone shift now and then.",
           "Reveal profile details partially and sometimes vaguely, for example \"something "
           "modern\" instead of a specification.",
           "Let inner thoughts sometimes differ from the message you send."},
          {"Jump between points without much order. Be noticeably too brief or too wordy, skip "
           "important context and let your mood show in ways that do not fit the content.",
           "Reveal little of your profile, and let some stated requirements contradict each "
           "other.",
           "Keep real concerns mostly in your inner thoughts; your message may hide them."},
          {"Let your messages lack coherence and organization. Be either too brief or "
           "excessively verbose, omit critical information so the assistant must infer it, and "
           "let emotions fluctuate or misalign with the content.",
           "Withhold most profile details and hint at needs without stating them; say things "
           "like \"I think I need...\".",
           "Keep your real goals and feelings hidden; inner thoughts may contradict your "
           "visible message."},
      }},
      {{
          {"I need a phone under $500 with long battery life. Which models fit?",
           "Please list two options within my budget and the main difference.",
           "I prefer large text and simple menus. Does this model offer both?"},
          {"Looking for something reliable, budget is around $400. Any ideas?",
           "That sounds okay. What about battery life on that one?",
           "I mostly use it for calls and photos, nothing fancy."},
          {"I want something good, not too pricey I guess. What do people get?",
           "Hmm, maybe. My old one kept dying, so battery matters? I think.",
           "Not sure which specs matter. Something modern?"},
          {"need it soon. or maybe not, depends. whats good",
           "I said cheap but quality matters more. Or both. Can you just pick?",
           "Ugh, this again. Fine. Something like what my friend has."},
          {"idk, something good?",
           "my daughter said get the one with the camera thing but I never use cameras so no",
           "great!!! wait no that's not what I meant at all"},
      }},
  };
  return table;
}

DifficultyTable apply_difficulty_overrides(DifficultyTable base, const KeyValueConfig& config) {
  for (int level = 1; level <= 5; ++level) {
    const std::string prefix = "difficulty." + std::to_string(level) + ".";
    auto& ins = base.instructions[static_cast<std::size_t>(level - 1)];
    if (auto v = config.get(prefix + "dialogue")) ins.dialogue = *v;
    if (auto v = config.get(prefix + "profile")) ins.profile = *v;
    if (auto v = config.get(prefix + "hidden_state")) ins.hidden_state = *v;
    if (config.get(prefix + "examples")) {
      base.example_messages[static_cast<std::size_t>(level - 1)] =
          config.get_list(prefix + "examples");
    }
    if (ins.dialogue.empty() || ins.profile.empty() || ins.hidden_state.empty()) {
      throw ConfigError("difficulty level " + std::to_string(level) +
                        " has an empty instruction");
    }
  }
  return base;
}

UncertaintyLevel UncertaintyLevel::from_percent(int percent) {
  if (std::find(kUncertaintyPercents.begin(), kUncertaintyPercents.end(), percent) ==
      kUncertaintyPercents.end()) {
    throw ValidationError("uncertainty must be one of 0, 40, 60, 80 (got " +
                          std::to_string(percent) + ")");
  }
  return UncertaintyLevel(percent);
}

DifficultyConfig assign_difficulty(std::uint64_t seed, std::optional<int> level,
                                   const DifficultyTable& table) {
  int chosen = 0;
  if (level) {
    if (*level < 1 || *level > 5) {
      throw ValidationError("difficulty level must be in 1..5 (got " + std::to_string(*level) +
                            ")");
    }
    chosen = *level;
  } else {
    SeededRng rng(seed);
    chosen = rng.between(1, 5);
  }
  DifficultyConfig config;
  config.level = chosen;
  config.dims = {chosen, chosen, chosen, chosen};
  config.instructions = table.for_level(chosen);
  config.validate();
  return config;
}

// ---------------------------------------------------------------------------
// Attribute paths

const std::vector<std::string>& maskable_paths() {
  static const std::vector<std::string> paths = [] {
    std::vector<std::string> out;
    for (const auto& f : kBaseFields) out.push_back("base." + std::string(f.key));
    for (const auto& f : kBehavioralFields) out.push_back("context." + std::string(f.key));
    for (const auto& f : kContextualFields) out.push_back("context." + std::string(f.key));
    for (const char* key : {"budget_range", "timeline", "purchase_location", "flexibility"}) {
      out.push_back(std::string("specifics.") + key);
    }
    return out;
  }();
  return paths;
}

namespace {

std::string* scalar_slot(UserProfile& profile, std::string_view path) {
  const auto dot = path.find('.');
  if (dot == std::string_view::npos) return nullptr;
  const auto group = path.substr(0, dot);
  const auto key = path.substr(dot + 1);
  if (group == "base") {
    for (const auto& f : kBaseFields) {
      if (f.key == key) return &(profile.base.*f.member);
    }
  } else if (group == "context") {
    for (const auto& f : kBehavioralFields) {
      if (f.key == key) return &(profile.context.*f.member);
    }
    for (const auto& f : kContextualFields) {
      if (f.key == key) return &(profile.context.*f.member);
    }
  } else if (group == "specifics") {
    if (key == "timeline") return &profile.specifics.timeline;
    if (key == "purchase_location") return &profile.specifics.purchase_location;
    if (key == "flexibility") return &profile.specifics.flexibility;
  }
  return nullptr;
}

}  // namespace

std::string read_attribute(const UserProfile& profile, std::string_view path) {
  if (path == "specifics.budget_range") return profile.specifics.budget_range.display();
  auto* slot = scalar_slot(const_cast<UserProfile&>(profile), path);
  if (!slot) throw ContractViolation("unknown attribute path '" + std::string(path) + "'");
  return *slot;
}

void write_attribute(UserProfile& profile, std::string_view path, std::string value) {
  if (path == "specifics.budget_range") {
    profile.specifics.budget_range = BudgetRange{std::move(value), std::nullopt, std::nullopt};
    return;
  }
  auto* slot = scalar_slot(profile, path);
  if (!slot) throw ContractViolation("unknown attribute path '" + std::string(path) + "'");
  *slot = std::move(value);
}

std::size_t mask_count(int percent, std::size_t n) {
  return (static_cast<std::size_t>(percent) * n + 50) / 100;
}

// ---------------------------------------------------------------------------
// Generation

std::pair<BaseProfile, ContextProfile> generate_base_profile(std::uint64_t seed,
                                                             const PoolSet& pools) {
  SeededRng rng(seed);
  BaseProfile base;
  ContextProfile context;
  for (const auto& f : kBaseFields) base.*f.member = rng.pick(pools.at(f.key));
  for (const auto& f : kBehavioralFields) context.*f.member = rng.pick(pools.at(f.key));
  for (const auto& f : kContextualFields) context.*f.member = rng.pick(pools.at(f.key));
  return {std::move(base), std::move(context)};
}

double unknown_injection_probability(int level) {
  static constexpr std::array<double, 5> table = {0.0, 0.0, 0.15, 0.3, 0.5};
  if (level < 1 || level > 5) throw ValidationError("difficulty level must be in 1..5");
  return table[static_cast<std::size_t>(level - 1)];
}

namespace {

const std::array<std::pair<double, double>, 5> kBudgetTiers = {
    {{50, 200}, {200, 500}, {500, 1000}, {1000, 2500}, {2500, 5000}}};

TaskSpecifics offline_specifics(const TaskInstance& task, const PoolSet& pools, SeededRng& rng) {
  TaskSpecifics s;
  const auto& tier = kBudgetTiers[rng.index(kBudgetTiers.size())];
  s.budget_range = BudgetRange{"", tier.first, tier.second};
  s.priority_features = rng.sample(pools.at("must_have"), static_cast<std::size_t>(rng.between(3, 5)));
  for (const auto& factor : rng.sample(pools.at("decision_factors"), 3)) {
    s.usage_scenarios.push_back(task.task_name + " with focus on " + lower_all(factor));
  }
  s.timeline = rng.pick(pools.at("urgency_levels"));
  s.purchase_location = rng.pick(pools.at("purchase_locations"));
  const auto& knowledge = rng.pick(pools.at("knowledge_levels"));
  s.additional_requirements = {"Avoid: " + rng.pick(pools.at("deal_breakers")),
                               "Knowledge: " + knowledge};
  s.technical_requirements = rng.sample(pools.at("nice_to_have"), 2);
  s.non_technical_requirements = {knowledge, rng.pick(pools.at("decision_factors"))};
  s.must_meet = rng.sample(pools.at("must_have"), 2);
  s.should_meet = rng.sample(pools.at("decision_factors"), 2);
  s.nice_to_meet = rng.sample(pools.at("nice_to_have"), 2);
  s.flexibility = rng.pick(pools.at("budget_flexibility"));
  s.payment_methods =
      rng.sample(pools.at("payment_methods"), static_cast<std::size_t>(rng.between(1, 3)));
  return s;
}

void inject_unknowns(TaskSpecifics& s, int level, SeededRng& rng) {
  const double q = unknown_injection_probability(level);
  if (q <= 0.0) return;
  const std::string marker(kUnknownNotSure);
  for (auto* list : {&s.priority_features, &s.usage_scenarios, &s.additional_requirements,
                     &s.technical_requirements, &s.non_technical_requirements, &s.must_meet,
                     &s.should_meet, &s.nice_to_meet, &s.payment_methods}) {
    if (rng.bernoulli(q)) list->push_back(marker);
  }
  for (auto* scalar : {&s.timeline, &s.purchase_location, &s.flexibility}) {
    if (rng.bernoulli(q)) *scalar = marker;
  }
  if (rng.bernoulli(q)) s.budget_range = BudgetRange{marker, std::nullopt, std::nullopt};
}

std::optional<std::vector<std::string>> string_list(const json& doc, const char* key,
                                                    std::size_t min_size) {
  if (!doc.contains(key) || !doc[key].is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& item : doc[key]) {
    if (!item.is_string()) return std::nullopt;
    out.push_back(item.get<std::string>());
  }
  if (out.size() < min_size) return std::nullopt;
  return out;
}

std::optional<std::string> string_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_string()) return std::nullopt;
  return doc[key].get<std::string>();
}

std::optional<BudgetRange> budget_value(const json& v) {
  if (v.is_string()) return BudgetRange{v.get<std::string>(), std::nullopt, std::nullopt};
  if (v.is_object() && v.contains("min") && v.contains("max") && v["min"].is_number() &&
      v["max"].is_number()) {
    const double lo = v["min"].get<double>();
    const double hi = v["max"].get<double>();
    if (lo > hi) return std::nullopt;
    return BudgetRange{"", lo, hi};
  }
  return std::nullopt;
}

// Calls the backend up to kBackendAttempts times until `accept` takes the
// parsed reply. Returns false when no reply was usable.
template <typename Accept>
bool ask_json(TextBackend& backend, const RenderedPrompt& prompt, Accept&& accept) {
  ChatRequest request;
  request.system_prompt = "You generate structured data. Reply with JSON only.";
  request.messages = {{ChatRole::user, prompt.text}};
  request.provenance = prompt.template_id;
  for (int attempt = 0; attempt < kBackendAttempts; ++attempt) {
    try {
      const auto reply = parse_json_reply(backend.complete(request).text);
      if (reply && accept(*reply)) return true;
    } catch (const BackendError&) {
    }
  }
  return false;
}

}  // namespace

TaskSpecifics generate_task_specifics(const TaskInstance& task, const BaseProfile& base,
                                      const DifficultyConfig& difficulty, std::uint64_t seed,
                                      TextBackend* backend, const PoolSet& task_pools) {
  validate_task(task);
  SeededRng rng(seed);
  TaskSpecifics specifics = offline_specifics(task, task_pools, rng);
  inject_unknowns(specifics, difficulty.level, rng);
  if (!backend) return specifics;

  const bool attributes_ok =
      ask_json(*backend, render_task_attributes_prompt(task, base), [&](const json& doc) {
        if (!doc.is_object() || !doc.contains("task_specific_attributes")) return false;
        const auto& a = doc["task_specific_attributes"];
        if (!a.is_object() || !a.contains("budget_range")) return false;
        auto budget = budget_value(a["budget_range"]);
        auto features = string_list(a, "priority_features", 3);
        auto scenarios = string_list(a, "usage_scenarios", 3);
        auto brands = string_list(a, "preferred_brands", 0);
        auto timeline = string_field(a, "timeline");
        auto location = string_field(a, "purchase_location");
        auto additional = string_list(a, "additional_requirements", 0);
        if (!budget || !features || !scenarios || !brands || !timeline || !location ||
            !additional) {
          return false;
        }
        specifics.budget_range = *budget;
        specifics.priority_features = *features;
        specifics.usage_scenarios = *scenarios;
        specifics.preferred_brands = *brands;
        specifics.timeline = *timeline;
        specifics.purchase_location = *location;
        specifics.additional_requirements = *additional;
        return true;
      });
  if (!attributes_ok) {
    specifics.warnings.push_back(
        "task_attributes: no schema-valid reply after 3 attempts; static pools used");
  }

  const bool budget_ok = ask_json(*backend, render_budget_prompt(task), [&](const json& doc) {
    if (!doc.is_object() || !doc.contains("range")) return false;
    auto range = budget_value(doc["range"]);
    auto flexibility = string_field(doc, "flexibility");
    auto methods = string_list(doc, "payment_methods", 1);
    if (!range || !range->text.empty() || !flexibility || !methods) return false;
    specifics.budget_range = *range;
    specifics.flexibility = *flexibility;
    specifics.payment_methods = *methods;
    return true;
  });
  if (!budget_ok) {
    specifics.warnings.push_back("budget: no schema-valid reply after 3 attempts; static pools used");
  }

  const bool requirements_ok =
      ask_json(*backend, render_requirements_prompt(task, base, difficulty.level, 1, 1),
               [&](const json& doc) {
                 if (!doc.is_object() || !doc.contains("task_requirements") ||
                     !doc.contains("success_criteria")) {
                   return false;
                 }
                 const auto& req = doc["task_requirements"];
                 const auto& crit = doc["success_criteria"];
                 auto technical = string_list(req, "technical", 0);
                 auto non_technical = string_list(req, "non_technical", 0);
                 auto must = string_list(crit, "must_meet", 0);
                 auto should = string_list(crit, "should_meet", 0);
                 auto nice = string_list(crit, "nice_to_meet", 0);
                 if (!technical || !non_technical || !must || !should || !nice) return false;
                 specifics.technical_requirements = *technical;
                 specifics.non_technical_requirements = *non_technical;
                 specifics.must_meet = *must;
                 specifics.should_meet = *should;
                 specifics.nice_to_meet = *nice;
                 return true;
               });
  if (!requirements_ok) {
    specifics.warnings.push_back(
        "requirements: no schema-valid reply after 3 attempts; static pools used");
  }
  return specifics;
}

UserProfile apply_uncertainty_mask(UserProfile profile, UncertaintyLevel level,
                                   std::uint64_t seed) {
  if (!profile.masked_fields.empty()) {
    throw ContractViolation("profile is already masked");
  }
  profile.uncertainty = level;
  const auto& paths = maskable_paths();
  const std::size_t k = mask_count(level.percent(), paths.size());
  SeededRng rng(seed);
  auto picked = rng.sample_indices(paths.size(), k);
  std::sort(picked.begin(), picked.end());
  for (auto i : picked) {
    write_attribute(profile, paths[i], std::string(kUnknown));
    profile.masked_fields.push_back(paths[i]);
  }
  return profile;
}

namespace {

std::string fallback_description(const UserProfile& p) {
  auto known = [](const std::string& v) { return !v.empty() && !is_sentinel(v); };
  std::string who = "A";
  if (known(p.base.age_group)) who += " " + p.base.age_group + " year old";
  if (known(p.base.personality)) who += " " + lower_all(p.base.personality);
  who += " user";
  if (known(p.base.tech_experience)) {
    who += " with " + lower_all(p.base.tech_experience) + " tech experience";
  }
  return who + " who wants to " + lower_first(p.task.task_name) + ".";
}

}  // namespace

void fill_identity(UserProfile& profile, TextBackend* backend) {
  bool filled = false;
  if (backend) {
    filled = ask_json(*backend, render_identity_prompt(profile), [&](const json& doc) {
      auto name = doc.is_object() ? string_field(doc, "name") : std::nullopt;
      auto description = doc.is_object() ? string_field(doc, "description") : std::nullopt;
      if (!name || !description || trim(*name).empty() || trim(*description).empty()) {
        return false;
      }
      profile.base.name = trim(*name);
      profile.base.description = trim(*description);
      return true;
    });
    if (!filled) {
      profile.warnings.push_back("identity: no schema-valid reply after 3 attempts; "
                                 "templated name used");
    }
  }
  if (!filled) {
    profile.base.name = "User-" + std::to_string(profile.seed);
    profile.base.description = fallback_description(profile);
  }
}

UserProfile generate_profile(const ProfileRequest& request, TextBackend* backend) {
  const DifficultyTable& table =
      request.difficulty_table ? *request.difficulty_table : default_difficulty_table();
  request.profile_pools.validate({});
  UserProfile profile;
  profile.seed = request.seed;
  auto [base, context] = generate_base_profile(derive_seed(request.seed, kStreamBase),
                                               request.profile_pools);
  profile.base = std::move(base);
  profile.context = std::move(context);

  if (request.task) {
    profile.task = *request.task;
  } else {
    std::vector<const TaskInstance*> candidates;
    for (const auto& t : task_library()) {
      if (!request.category || t.category == *request.category) candidates.push_back(&t);
    }
    if (candidates.empty()) {
      throw ValidationError("unknown task category '" + request.category.value_or("") + "'");
    }
    SeededRng rng(derive_seed(request.seed, kStreamTask));
    profile.task = *candidates[rng.index(candidates.size())];
  }
  validate_task(profile.task);

  profile.difficulty =
      assign_difficulty(derive_seed(request.seed, kStreamDifficulty), request.difficulty, table);
  profile.specifics =
      generate_task_specifics(profile.task, profile.base, profile.difficulty,
                              derive_seed(request.seed, kStreamSpecifics), backend,
                              request.task_pools);
  for (const auto& w : profile.specifics.warnings) profile.warnings.push_back(w);
  profile = apply_uncertainty_mask(std::move(profile), request.uncertainty,
                                   derive_seed(request.seed, kStreamMask));
  fill_identity(profile, backend);
  return profile;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json string_array(const std::vector<std::string>& values) { return json(values); }

const json& require(const json& doc, const char* key, const std::string& where) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw ValidationError(where + "." + key + " is missing");
  }
  return doc[key];
}

std::string require_string(const json& doc, const char* key, const std::string& where) {
  const auto& v = require(doc, key, where);
  if (!v.is_string()) throw ValidationError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<std::string> require_strings(const json& doc, const char* key,
                                         const std::string& where) {
  const auto& v = require(doc, key, where);
  if (!v.is_array()) throw ValidationError(where + "." + key + " must be a list");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw ValidationError(where + "." + key + " must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

int require_int(const json& doc, const char* key, const std::string& where) {
  const auto& v = require(doc, key, where);
  if (!v.is_number_integer()) throw ValidationError(where + "." + key + " must be an integer");
  return v.get<int>();
}

}  // namespace

nlohmann::json base_attributes_json(const BaseProfile& base) {
  json out = json::object();
  for (const auto& f : kBaseFields) out[std::string(f.key)] = base.*f.member;
  return out;
}

nlohmann::json behavioral_json(const ContextProfile& context) {
  json out = json::object();
  for (const auto& f : kBehavioralFields) out[std::string(f.key)] = context.*f.member;
  return out;
}

nlohmann::json contextual_json(const ContextProfile& context) {
  json out = json::object();
  for (const auto& f : kContextualFields) out[std::string(f.key)] = context.*f.member;
  return out;
}

json specifics_to_json(const TaskSpecifics& s) {
  json budget;
  if (s.budget_range.min && s.budget_range.max && s.budget_range.text.empty()) {
    budget = {{"min", *s.budget_range.min}, {"max", *s.budget_range.max}};
  } else {
    budget = s.budget_range.display();
  }
  return {
      {"budget_range", budget},
      {"priority_features", string_array(s.priority_features)},
      {"usage_scenarios", string_array(s.usage_scenarios)},
      {"preferred_brands", string_array(s.preferred_brands)},
      {"timeline", s.timeline},
      {"purchase_location", s.purchase_location},
      {"additional_requirements", string_array(s.additional_requirements)},
      {"task_requirements",
       {{"technical", string_array(s.technical_requirements)},
        {"non_technical", string_array(s.non_technical_requirements)}}},
      {"success_criteria",
       {{"must_meet", string_array(s.must_meet)},
        {"should_meet", string_array(s.should_meet)},
        {"nice_to_meet", string_array(s.nice_to_meet)}}},
      {"flexibility", s.flexibility},
      {"payment_methods", string_array(s.payment_methods)},
      {"warnings", string_array(s.warnings)},
  };
}

TaskSpecifics specifics_from_json(const json& doc) {
  const std::string where = "task_specifics";
  TaskSpecifics s;
  auto budget = budget_value(require(doc, "budget_range", where));
  if (!budget) throw ValidationError(where + ".budget_range must be a string or {min, max}");
  s.budget_range = *budget;
  s.priority_features = require_strings(doc, "priority_features", where);
  s.usage_scenarios = require_strings(doc, "usage_scenarios", where);
  s.preferred_brands = require_strings(doc, "preferred_brands", where);
  s.timeline = require_string(doc, "timeline", where);
  s.purchase_location = require_string(doc, "purchase_location", where);
  s.additional_requirements = require_strings(doc, "additional_requirements", where);
  const auto& req = require(doc, "task_requirements", where);
  s.technical_requirements = require_strings(req, "technical", where + ".task_requirements");
  s.non_technical_requirements =
      require_strings(req, "non_technical", where + ".task_requirements");
  const auto& crit = require(doc, "success_criteria", where);
  s.must_meet = require_strings(crit, "must_meet", where + ".success_criteria");
  s.should_meet = require_strings(crit, "should_meet", where + ".success_criteria");
  s.nice_to_meet = require_strings(crit, "nice_to_meet", where + ".success_criteria");
  s.flexibility = require_string(doc, "flexibility", where);
  s.payment_methods = require_strings(doc, "payment_methods", where);
  if (doc.contains("warnings")) s.warnings = require_strings(doc, "warnings", where);
  return s;
}

json profile_to_json(const UserProfile& p) {
  json base = base_attributes_json(p.base);
  base["name"] = p.base.name;
  base["description"] = p.base.description;
  return {
      {"seed", p.seed},
      {"base_profile", base},
      {"behavioral_traits", behavioral_json(p.context)},
      {"contextual_factors", contextual_json(p.context)},
      {"task",
       {{"category", p.task.category},
        {"task_name", p.task.task_name},
        {"description", p.task.description}}},
      {"task_specifics", specifics_to_json(p.specifics)},
      {"difficulty",
       {{"level", p.difficulty.level},
        {"dims",
         {{"style", p.difficulty.dims.style},
          {"length", p.difficulty.dims.length},
          {"content", p.difficulty.dims.content},
          {"tone", p.difficulty.dims.tone}}},
        {"instructions",
         {{"dialogue", p.difficulty.instructions.dialogue},
          {"profile", p.difficulty.instructions.profile},
          {"hidden_state", p.difficulty.instructions.hidden_state}}}}},
      {"uncertainty_percent", p.uncertainty.percent()},
      {"masked_fields", string_array(p.masked_fields)},
      {"warnings", string_array(p.warnings)},
  };
}

UserProfile profile_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("profile must be a JSON object");
  UserProfile p;
  const auto& seed = require(doc, "seed", "profile");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw ValidationError("profile.seed must be an integer");
  }
  p.seed = seed.get<std::uint64_t>();

  const auto& base = require(doc, "base_profile", "profile");
  for (const auto& f : kBaseFields) {
    p.base.*f.member = require_string(base, std::string(f.key).c_str(), "profile.base_profile");
  }
  p.base.name = require_string(base, "name", "profile.base_profile");
  p.base.description = require_string(base, "description", "profile.base_profile");
  const auto& behavioral = require(doc, "behavioral_traits", "profile");
  for (const auto& f : kBehavioralFields) {
    p.context.*f.member =
        require_string(behavioral, std::string(f.key).c_str(), "profile.behavioral_traits");
  }
  const auto& contextual = require(doc, "contextual_factors", "profile");
  for (const auto& f : kContextualFields) {
    p.context.*f.member =
        require_string(contextual, std::string(f.key).c_str(), "profile.contextual_factors");
  }
  const auto& task = require(doc, "task", "profile");
  p.task.category = require_string(task, "category", "profile.task");
  p.task.task_name = require_string(task, "task_name", "profile.task");
  p.task.description = require_string(task, "description", "profile.task");
  p.specifics = specifics_from_json(require(doc, "task_specifics", "profile"));

  const auto& diff = require(doc, "difficulty", "profile");
  p.difficulty.level = require_int(diff, "level", "profile.difficulty");
  const auto& dims = require(diff, "dims", "profile.difficulty");
  p.difficulty.dims.style = require_int(dims, "style", "profile.difficulty.dims");
  p.difficulty.dims.length = require_int(dims, "length", "profile.difficulty.dims");
  p.difficulty.dims.content = require_int(dims, "content", "profile.difficulty.dims");
  p.difficulty.dims.tone = require_int(dims, "tone", "profile.difficulty.dims");
  const auto& ins = require(diff, "instructions", "profile.difficulty");
  p.difficulty.instructions.dialogue =
      require_string(ins, "dialogue", "profile.difficulty.instructions");
  p.difficulty.instructions.profile =
      require_string(ins, "profile", "profile.difficulty.instructions");
  p.difficulty.instructions.hidden_state =
      require_string(ins, "hidden_state", "profile.difficulty.instructions");
  p.difficulty.validate();

  p.uncertainty = UncertaintyLevel::from_percent(require_int(doc, "uncertainty_percent", "profile"));
  p.masked_fields = require_strings(doc, "masked_fields", "profile");
  const auto& paths = maskable_paths();
  for (const auto& m : p.masked_fields) {
    if (std::find(paths.begin(), paths.end(), m) == paths.end()) {
      throw ValidationError("profile.masked_fields holds unknown path '" + m + "'");
    }
  }
  if (doc.contains("warnings")) p.warnings = require_strings(doc, "warnings", "profile");
  return p;
}

std::vector<std::string> private_attribute_values(const UserProfile& p) {
  std::vector<std::string> out;
  auto add = [&](const std::string& v) {
    if (!v.empty() && !is_sentinel(v)) out.push_back(v);
  };
  for (const auto& f : kBaseFields) add(p.base.*f.member);
  for (const auto& f : kBehavioralFields) add(p.context.*f.member);
  for (const auto& f : kContextualFields) add(p.context.*f.member);
  add(p.base.name);
  add(p.base.description);
  const auto& s = p.specifics;
  add(s.budget_range.display());
  add(s.timeline);
  add(s.purchase_location);
  add(s.flexibility);
  for (const auto* list : {&s.priority_features, &s.usage_scenarios, &s.preferred_brands,
                           &s.additional_requirements, &s.technical_requirements,
                           &s.non_technical_requirements, &s.must_meet, &s.should_meet,
                           &s.nice_to_meet, &s.payment_methods}) {
    for (const auto& v : *list) add(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace asymdial
