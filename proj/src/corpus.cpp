// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "asymdial/annotate.hpp"
#include "asymdial/error.hpp"

namespace asymdial {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical JSON

namespace {

std::string float_text(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  std::string s = buf;
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void write_canonical(const json& v, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const std::string close_pad(static_cast<std::size_t>(depth) * 2, ' ');
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump(-1, ' ', false, json::error_handler_t::replace) + ": ";
        write_canonical(it.value(), depth + 1, out);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        write_canonical(v[i], depth + 1, out);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case json::value_t::number_float:
      out += float_text(v.get<double>());
      return;
    default:
      out += v.dump(-1, ' ', false, json::error_handler_t::replace);
  }
}

}  // namespace

std::string canonical_dump(const json& doc) {
  std::string out;
  write_canonical(doc, 0, out);
  out += '\n';
  return out;
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError("malformed JSON at byte " + std::to_string(offset) + ": " + e.what(), offset);
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_json_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte_offset());
  }
}

void write_json_file(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << canonical_dump(doc);
  if (!out) throw Error("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// Records

DialogueRecord make_record(const Transcript& transcript, const UserProfile& profile) {
  DialogueRecord r;
  r.transcript = transcript;
  r.profile = profile;
  return r;
}

json judgments_to_json(const std::vector<TurnPairJudgment>& judgments) {
  json out = json::array();
  for (const auto& j : judgments) out.push_back(judgment_to_json(j));
  return out;
}

std::vector<TurnPairJudgment> judgments_from_json(const json& doc) {
  if (!doc.is_array()) throw ValidationError("judgments must be an array");
  std::vector<TurnPairJudgment> out;
  for (const auto& j : doc) out.push_back(judgment_from_json(j));
  return out;
}

json record_to_json(const DialogueRecord& record) {
  const auto& t = record.transcript;
  json turns = json::array();
  for (const auto& turn : t.turns) {
    const auto& h = turn.hidden;
    json hidden = {{"inner_thoughts", h.inner_thoughts},
                   {"satisfaction", {{"score", h.satisfaction_score},
                                     {"explanation", h.satisfaction_explanation}}},
                   {"emotion", h.emotion},
                   {"intent", h.intent},
                   {"inner_emotion", h.inner_emotion},
                   {"inner_intent", h.inner_intent},
                   {"defaults_applied", h.defaults_applied}};
    if (h.clarity) hidden["clarity"] = *h.clarity;
    turns.push_back({{"turn_index", turn.index},
                     {"user_message", turn.user_message},
                     {"assistant_message", turn.assistant_message},
                     {"timestamp", turn.timestamp},
                     {"raw_user_output", turn.raw_user_output},
                     {"warnings", turn.warnings},
                     {"metadata", {{"hidden_states", hidden}}}});
  }
  json out = {{"id", t.id},
              {"user_name", record.profile.base.name.empty() ? t.profile_ref.name
                                                             : record.profile.base.name},
              {"created_at", t.created_at},
              {"share_profile", t.share_profile},
              {"rag_used", record.rag_used},
              {"agent_model", t.agent_model},
              {"run_config_digest", t.run_config_digest},
              {"truncated", t.truncated},
              {"failure", t.failure ? json(*t.failure) : json(nullptr)},
              {"profile_ref",
               {{"name", t.profile_ref.name},
                {"seed", t.profile_ref.seed},
                {"digest", t.profile_ref.digest}}},
              {"profile", profile_to_json(record.profile)},
              {"turns", turns}};
  if (record.analysis) {
    json analysis = {{"judgments", judgments_to_json(record.analysis->judgments)}};
    if (record.analysis->summary) analysis["summary"] = summary_to_json(*record.analysis->summary);
    out["analysis"] = analysis;
  }
  return out;
}

std::string ValidationReport::to_string() const {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += '\n';
    out += issue.path + ": " + issue.message;
  }
  return out;
}

namespace {

class Checker {
 public:
  explicit Checker(ValidationReport& report) : report_(report) {}

  void issue(std::string path, std::string message) {
    report_.issues.push_back({std::move(path), std::move(message)});
  }

  // Returns the member when present with the wanted type, else records an
  // issue and returns null.
  const json* field(const json& obj, const char* key, const std::string& path,
                    json::value_t type, bool required = true) {
    const std::string p = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) issue(p, "missing");
      return nullptr;
    }
    const json& v = obj[key];
    const bool ok = type == json::value_t::number_float ? v.is_number()
                    : type == json::value_t::number_integer ? v.is_number_integer()
                                                            : v.type() == type;
    if (!ok) {
      issue(p, std::string("expected ") + type_name(type));
      return nullptr;
    }
    return &v;
  }

  void string_list(const json& obj, const char* key, const std::string& path, bool required) {
    if (const json* v = field(obj, key, path, json::value_t::array, required)) {
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) {
          issue(path + "." + key + "[" + std::to_string(i) + "]", "expected string");
        }
      }
    }
  }

 private:
  static const char* type_name(json::value_t type) {
    switch (type) {
      case json::value_t::object: return "object";
      case json::value_t::array: return "array";
      case json::value_t::string: return "string";
      case json::value_t::boolean: return "boolean";
      case json::value_t::number_integer: return "integer";
      case json::value_t::number_float: return "number";
      default: return "value";
    }
  }

  ValidationReport& report_;
};

void validate_turn(Checker& c, const json& turn, const std::string& path) {
  if (!turn.is_object()) {
    c.issue(path, "expected object");
    return;
  }
  c.field(turn, "turn_index", path, json::value_t::number_integer);
  c.field(turn, "user_message", path, json::value_t::string);
  c.field(turn, "assistant_message", path, json::value_t::string);
  c.field(turn, "timestamp", path, json::value_t::string);
  c.field(turn, "raw_user_output", path, json::value_t::string, false);
  c.string_list(turn, "warnings", path, false);
  const json* meta = c.field(turn, "metadata", path, json::value_t::object);
  if (!meta) {
    c.issue(path + ".metadata.hidden_states.satisfaction.score", "missing");
    return;
  }
  const std::string hp = path + ".metadata.hidden_states";
  const json* hidden = c.field(*meta, "hidden_states", path + ".metadata", json::value_t::object);
  if (!hidden) {
    c.issue(hp + ".satisfaction.score", "missing");
    return;
  }
  c.field(*hidden, "inner_thoughts", hp, json::value_t::string);
  c.field(*hidden, "emotion", hp, json::value_t::string);
  c.field(*hidden, "intent", hp, json::value_t::string);
  c.field(*hidden, "inner_emotion", hp, json::value_t::string, false);
  c.field(*hidden, "inner_intent", hp, json::value_t::string, false);
  c.string_list(*hidden, "defaults_applied", hp, false);
  if (const json* clarity = c.field(*hidden, "clarity", hp, json::value_t::number_float, false)) {
    const double v = clarity->get<double>();
    if (!(v >= 0 && v <= 1)) c.issue(hp + ".clarity", "must be in [0,1]");
  }
  const json* sat = c.field(*hidden, "satisfaction", hp, json::value_t::object);
  if (!sat) {
    c.issue(hp + ".satisfaction.score", "missing");
    return;
  }
  if (const json* score =
          c.field(*sat, "score", hp + ".satisfaction", json::value_t::number_float)) {
    const double v = score->get<double>();
    if (!(v >= 0 && v <= 1)) c.issue(hp + ".satisfaction.score", "must be in [0,1]");
  }
  c.field(*sat, "explanation", hp + ".satisfaction", json::value_t::string);
}

}  // namespace

ValidationReport validate_record(const json& doc) {
  ValidationReport report;
  Checker c(report);
  try {
    if (!doc.is_object()) {
      c.issue("$", "expected object");
      return report;
    }
    if (const json* id = c.field(doc, "id", "", json::value_t::string)) {
      if (id->get<std::string>().empty()) c.issue("id", "must not be empty");
    }
    c.field(doc, "user_name", "", json::value_t::string);
    c.field(doc, "created_at", "", json::value_t::string);
    c.field(doc, "share_profile", "", json::value_t::boolean);
    c.field(doc, "rag_used", "", json::value_t::boolean);
    c.field(doc, "agent_model", "", json::value_t::string, false);
    c.field(doc, "run_config_digest", "", json::value_t::string, false);
    c.field(doc, "truncated", "", json::value_t::boolean, false);
    if (doc.contains("failure") && !doc["failure"].is_null() && !doc["failure"].is_string()) {
      c.issue("failure", "expected string or null");
    }
    if (const json* ref = c.field(doc, "profile_ref", "", json::value_t::object, false)) {
      c.field(*ref, "name", "profile_ref", json::value_t::string);
      if (ref->contains("seed") && !(*ref)["seed"].is_number_unsigned()) {
        c.issue("profile_ref.seed", "expected unsigned integer");
      }
      c.field(*ref, "digest", "profile_ref", json::value_t::string);
    }
    if (const json* profile = c.field(doc, "profile", "", json::value_t::object)) {
      try {
        (void)profile_from_json(*profile);
      } catch (const std::exception& e) {
        c.issue("profile", e.what());
      }
    }
    if (const json* turns = c.field(doc, "turns", "", json::value_t::array)) {
      std::optional<std::string> last;
      for (std::size_t i = 0; i < turns->size(); ++i) {
        const std::string path = "turns[" + std::to_string(i) + "]";
        const json& turn = (*turns)[i];
        validate_turn(c, turn, path);
        if (turn.is_object() && turn.contains("timestamp") && turn["timestamp"].is_string()) {
          const auto ts = turn["timestamp"].get<std::string>();
          if (last && ts < *last) c.issue(path + ".timestamp", "earlier than the previous turn");
          last = ts;
        }
      }
    }
    if (const json* analysis = c.field(doc, "analysis", "", json::value_t::object, false)) {
      if (const json* js = c.field(*analysis, "judgments", "analysis", json::value_t::array)) {
        for (std::size_t i = 0; i < js->size(); ++i) {
          try {
            (void)judgment_from_json((*js)[i]);
          } catch (const std::exception& e) {
            c.issue("analysis.judgments[" + std::to_string(i) + "]", e.what());
          }
        }
      }
      if (const json* s =
              c.field(*analysis, "summary", "analysis", json::value_t::object, false)) {
        try {
          (void)summary_from_json(*s);
        } catch (const std::exception& e) {
          c.issue("analysis.summary", e.what());
        }
      }
    }
  } catch (const std::exception& e) {
    c.issue("$", std::string("unexpected: ") + e.what());
  }
  return report;
}

DialogueRecord record_from_json(const json& doc) {
  const auto report = validate_record(doc);
  if (!report.ok()) throw ValidationError(report.to_string());
  DialogueRecord r;
  auto& t = r.transcript;
  t.id = doc["id"].get<std::string>();
  t.created_at = doc["created_at"].get<std::string>();
  t.share_profile = doc["share_profile"].get<bool>();
  r.rag_used = doc["rag_used"].get<bool>();
  t.agent_model = doc.value("agent_model", "");
  t.run_config_digest = doc.value("run_config_digest", "");
  t.truncated = doc.value("truncated", false);
  if (doc.contains("failure") && doc["failure"].is_string()) {
    t.failure = doc["failure"].get<std::string>();
  }
  r.profile = profile_from_json(doc["profile"]);
  if (doc.contains("profile_ref")) {
    const auto& ref = doc["profile_ref"];
    t.profile_ref = {ref["name"].get<std::string>(), ref.value("seed", std::uint64_t{0}),
                     ref["digest"].get<std::string>()};
  } else {
    t.profile_ref = {doc["user_name"].get<std::string>(), r.profile.seed, ""};
  }
  for (const auto& turn : doc["turns"]) {
    Turn out;
    out.index = turn["turn_index"].get<int>();
    out.user_message = turn["user_message"].get<std::string>();
    out.assistant_message = turn["assistant_message"].get<std::string>();
    out.timestamp = turn["timestamp"].get<std::string>();
    out.raw_user_output = turn.value("raw_user_output", "");
    out.warnings = turn.value("warnings", std::vector<std::string>{});
    const auto& h = turn["metadata"]["hidden_states"];
    out.hidden.inner_thoughts = h["inner_thoughts"].get<std::string>();
    out.hidden.satisfaction_score = h["satisfaction"]["score"].get<double>();
    out.hidden.satisfaction_explanation = h["satisfaction"]["explanation"].get<std::string>();
    out.hidden.emotion = h["emotion"].get<std::string>();
    out.hidden.intent = h["intent"].get<std::string>();
    out.hidden.inner_emotion = h.value("inner_emotion", "");
    out.hidden.inner_intent = h.value("inner_intent", "");
    out.hidden.defaults_applied = h.value("defaults_applied", std::vector<std::string>{});
    if (h.contains("clarity")) out.hidden.clarity = h["clarity"].get<double>();
    t.turns.push_back(std::move(out));
  }
  if (doc.contains("analysis")) {
    Analysis a;
    a.judgments = judgments_from_json(doc["analysis"]["judgments"]);
    if (doc["analysis"].contains("summary")) {
      a.summary = summary_from_json(doc["analysis"]["summary"]);
    }
    r.analysis = std::move(a);
  }
  return r;
}

void save_record(const DialogueRecord& record, const fs::path& path) {
  write_json_file(path, record_to_json(record));
}

DialogueRecord load_record(const fs::path& path) {
  const auto doc = read_json_file(path);
  try {
    return record_from_json(doc);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ":\n" + e.what());
  }
}

// ---------------------------------------------------------------------------
// Import

namespace {

class Mapper {
 public:
  explicit Mapper(std::vector<std::string>& notes) : notes_(notes) {}

  void note(const std::string& text) {
    if (seen_.insert(text).second) notes_.push_back(text);
  }

  void rename(json& obj, std::initializer_list<const char*> variants, const char* to,
              const std::string& prefix) {
    if (!obj.is_object() || obj.contains(to)) return;
    for (const char* from : variants) {
      if (obj.contains(from)) {
        obj[to] = std::move(obj[from]);
        obj.erase(from);
        note(prefix + from + " -> " + prefix + to);
        return;
      }
    }
  }

 private:
  std::vector<std::string>& notes_;
  std::set<std::string> seen_;
};

void import_turn(Mapper& m, json& turn, std::size_t index) {
  if (!turn.is_object()) return;
  const std::string p = "turns[*].";
  m.rename(turn, {"user", "user_input", "user_text", "userMessage"}, "user_message", p);
  m.rename(turn, {"assistant", "assistant_response", "agent", "agent_message", "agent_response",
                  "assistantMessage"},
           "assistant_message", p);
  m.rename(turn, {"time", "created_at", "ts"}, "timestamp", p);
  m.rename(turn, {"index", "turn", "turn_number"}, "turn_index", p);
  if (!turn.contains("turn_index")) {
    turn["turn_index"] = index;
    m.note("turns[*].turn_index numbered from 0");
  }
  if (!turn.contains("metadata")) turn["metadata"] = json::object();
  auto& meta = turn["metadata"];
  if (!meta.is_object()) return;
  for (const char* key : {"hidden_states", "hidden_state", "hiddenStates"}) {
    if (turn.contains(key) && !meta.contains("hidden_states")) {
      meta["hidden_states"] = std::move(turn[key]);
      turn.erase(key);
      m.note(p + key + " -> " + p + "metadata.hidden_states");
    }
  }
  m.rename(meta, {"hidden_state", "hiddenStates"}, "hidden_states", p + "metadata.");

  if (!meta.contains("hidden_states") && turn.contains("user_message") &&
      turn["user_message"].is_string() &&
      contains_tag_marker(turn["user_message"].get<std::string>())) {
    const auto raw = turn["user_message"].get<std::string>();
    const auto parsed = parse_user_message(raw);
    json defaults = json::array();
    if (parsed.satisfaction_defaulted) defaults.push_back("satisfaction");
    if (parsed.inner_thoughts_defaulted) defaults.push_back("inner_thoughts");
    meta["hidden_states"] = {{"inner_thoughts", parsed.inner_thoughts},
                             {"satisfaction",
                              {{"score", parsed.satisfaction_score},
                               {"explanation", parsed.satisfaction_explanation}}},
                             {"defaults_applied", defaults}};
    turn["raw_user_output"] = raw;
    turn["user_message"] = parsed.visible_text;
    m.note("turns[*].user_message tags -> turns[*].metadata.hidden_states");
  }
  else if (meta.contains("hidden_states") && turn.contains("user_message") &&
           turn["user_message"].is_string() &&
           contains_tag_marker(turn["user_message"].get<std::string>())) {
    const auto raw = turn["user_message"].get<std::string>();
    if (!turn.contains("raw_user_output")) turn["raw_user_output"] = raw;
    turn["user_message"] = parse_user_message(raw).visible_text;
    m.note("turns[*].user_message tags stripped");
  }
  if (!meta.contains("hidden_states") || !meta["hidden_states"].is_object()) return;

  auto& h = meta["hidden_states"];
  const std::string hp = p + "metadata.hidden_states.";
  m.rename(h, {"thoughts", "inner_thought", "innerThoughts"}, "inner_thoughts", hp);
  if (h.contains("satisfaction") && h["satisfaction"].is_number()) {
    h["satisfaction"] = {{"score", h["satisfaction"]}, {"explanation", ""}};
    m.note(hp + "satisfaction (number) -> " + hp + "satisfaction.score");
  }
  for (const char* key : {"satisfaction_score", "score"}) {
    if (h.contains(key) && !h.contains("satisfaction")) {
      h["satisfaction"] = {{"score", h[key]}, {"explanation", ""}};
      h.erase(key);
      m.note(hp + key + " -> " + hp + "satisfaction.score");
    }
  }
  if (h.contains("satisfaction_explanation") && h.contains("satisfaction") &&
      h["satisfaction"].is_object()) {
    h["satisfaction"]["explanation"] = std::move(h["satisfaction_explanation"]);
    h.erase("satisfaction_explanation");
    m.note(hp + "satisfaction_explanation -> " + hp + "satisfaction.explanation");
  }
  if (h.contains("satisfaction") && h["satisfaction"].is_object()) {
    m.rename(h["satisfaction"], {"reason", "explain"}, "explanation", hp + "satisfaction.");
  }
  if (!h.contains("inner_thoughts")) {
    h["inner_thoughts"] = "";
    m.note(hp + "inner_thoughts defaulted to empty");
  }
  const std::string visible =
      turn.contains("user_message") && turn["user_message"].is_string()
          ? turn["user_message"].get<std::string>()
          : std::string();
  const std::string thoughts =
      h["inner_thoughts"].is_string() ? h["inner_thoughts"].get<std::string>() : std::string();
  auto derive = [&](const char* key, LexiconKind kind, const std::string& text) {
    if (!h.contains(key)) {
      h[key] = classify(default_lexicon(kind), text).label;
      m.note(hp + key + " derived from lexicon");
    }
  };
  derive("emotion", LexiconKind::emotion, visible);
  derive("intent", LexiconKind::intent, visible);
  derive("inner_emotion", LexiconKind::inner_emotion, thoughts);
  derive("inner_intent", LexiconKind::inner_intent, thoughts);
}

}  // namespace

ImportResult import_document(const json& raw) {
  ImportResult result;
  result.document = raw;
  json& doc = result.document;
  if (!doc.is_object()) return result;
  Mapper m(result.mapping);
  m.rename(doc, {"dialogue_id", "conversation_id", "dialogueId"}, "id", "");
  m.rename(doc, {"username", "user", "userName"}, "user_name", "");
  m.rename(doc, {"created", "timestamp", "createdAt"}, "created_at", "");
  m.rename(doc, {"profile_shared", "shareProfile", "share", "with_profile"}, "share_profile", "");
  m.rename(doc, {"use_rag", "rag", "ragUsed"}, "rag_used", "");
  m.rename(doc, {"conversation", "messages", "dialogue", "history"}, "turns", "");
  m.rename(doc, {"user_profile", "persona", "userProfile"}, "profile", "");
  if (!doc.contains("rag_used")) {
    doc["rag_used"] = false;
    m.note("rag_used defaulted to false");
  }
  if (doc.contains("turns") && doc["turns"].is_array()) {
    for (std::size_t i = 0; i < doc["turns"].size(); ++i) import_turn(m, doc["turns"][i], i);
  }
  if (!doc.contains("user_name") && doc.contains("profile") && doc["profile"].is_object() &&
      doc["profile"].contains("base_profile") && doc["profile"]["base_profile"].is_object() &&
      doc["profile"]["base_profile"].contains("name")) {
    doc["user_name"] = doc["profile"]["base_profile"]["name"];
    m.note("profile.base_profile.name -> user_name");
  }
  if (!doc.contains("created_at") && doc.contains("turns") && doc["turns"].is_array() &&
      !doc["turns"].empty() && doc["turns"][0].is_object() &&
      doc["turns"][0].contains("timestamp")) {
    doc["created_at"] = doc["turns"][0]["timestamp"];
    m.note("turns[0].timestamp -> created_at");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Folder layout

std::string condition_dir_name(std::string_view model_id, int uncertainty_percent,
                               bool share_profile) {
  std::string model;
  for (char c : model_id) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
                      c == '-';
    model += keep ? c : '-';
  }
  return model + "__u" + std::to_string(uncertainty_percent) + "__" +
         (share_profile ? "profile" : "noprofile");
}

json manifest_to_json(const Manifest& m) {
  return {{"model_id", m.model_id},
          {"uncertainty_percent", m.uncertainty_percent},
          {"share_profile", m.share_profile},
          {"created_at", m.created_at},
          {"dialogue_count", m.dialogue_count}};
}

Manifest manifest_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("manifest must be an object");
  auto need = [&](const char* key) -> const json& {
    if (!doc.contains(key)) throw ValidationError(std::string("manifest.") + key + " is missing");
    return doc[key];
  };
  Manifest m;
  if (!need("model_id").is_string()) throw ValidationError("manifest.model_id must be a string");
  m.model_id = doc["model_id"].get<std::string>();
  if (!need("uncertainty_percent").is_number_integer()) {
    throw ValidationError("manifest.uncertainty_percent must be an integer");
  }
  m.uncertainty_percent =
      UncertaintyLevel::from_percent(doc["uncertainty_percent"].get<int>()).percent();
  if (!need("share_profile").is_boolean()) {
    throw ValidationError("manifest.share_profile must be a boolean");
  }
  m.share_profile = doc["share_profile"].get<bool>();
  if (!need("created_at").is_string()) throw ValidationError("manifest.created_at must be a string");
  m.created_at = doc["created_at"].get<std::string>();
  if (!need("dialogue_count").is_number_unsigned()) {
    throw ValidationError("manifest.dialogue_count must be a non-negative integer");
  }
  m.dialogue_count = doc["dialogue_count"].get<std::size_t>();
  return m;
}

Manifest read_manifest(const fs::path& condition_dir) {
  try {
    return manifest_from_json(read_json_file(condition_dir / kManifestFile));
  } catch (const ValidationError& e) {
    throw ValidationError((condition_dir / kManifestFile).string() + ": " + e.what());
  }
}

std::vector<fs::path> dialogue_files(const fs::path& condition_dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(condition_dir)) return out;
  for (const auto& entry : fs::directory_iterator(condition_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    if (entry.path().filename() == kManifestFile) continue;
    out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Manifest write_manifest(const fs::path& condition_dir, Manifest manifest) {
  (void)UncertaintyLevel::from_percent(manifest.uncertainty_percent);
  manifest.dialogue_count = dialogue_files(condition_dir).size();
  write_json_file(condition_dir / kManifestFile, manifest_to_json(manifest));
  return manifest;
}

std::vector<ConditionFolder> scan_corpus(const fs::path& root) {
  if (fs::exists(root / kManifestFile)) return {{root, read_manifest(root)}};
  std::vector<ConditionFolder> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / kManifestFile)) {
      out.push_back({entry.path(), read_manifest(entry.path())});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ConditionFolder& a, const ConditionFolder& b) { return a.path < b.path; });
  return out;
}

fs::path analysis_path(const fs::path& condition_dir, std::string_view dialogue_id,
                       AnalysisKind kind) {
  const char* suffix = kind == AnalysisKind::enhanced    ? ".enhanced.json"
                       : kind == AnalysisKind::judgments ? ".judgments.json"
                                                         : ".summary.json";
  return condition_dir / "analysis" / (std::string(dialogue_id) + suffix);
}

fs::path log_path(const fs::path& condition_dir, std::string_view dialogue_id) {
  return condition_dir / "logs" / (std::string(dialogue_id) + ".requests.json");
}

std::vector<CorpusEntry> load_corpus_entries(const fs::path& root) {
  std::vector<CorpusEntry> out;
  for (const auto& folder : scan_corpus(root)) {
    const CellKey key{folder.manifest.model_id, folder.manifest.uncertainty_percent,
                      folder.manifest.share_profile};
    for (const auto& file : dialogue_files(folder.path)) {
      auto record = load_record(file);
      CorpusEntry entry;
      entry.key = key;
      const auto id = record.transcript.id;
      const auto jpath = analysis_path(folder.path, id, AnalysisKind::judgments);
      const auto spath = analysis_path(folder.path, id, AnalysisKind::summary);
      if (fs::exists(jpath)) {
        entry.judgments = judgments_from_json(read_json_file(jpath));
      } else if (record.analysis) {
        entry.judgments = record.analysis->judgments;
      }
      std::optional<DialogueSummary> summary;
      if (fs::exists(spath)) {
        summary = summary_from_json(read_json_file(spath));
      } else if (record.analysis) {
        summary = record.analysis->summary;
      }
      if (summary && summary->goal_progress) entry.goal_progress = summary->goal_progress;
      entry.transcript = std::move(record.transcript);
      entry.profile = std::move(record.profile);
      out.push_back(std::move(entry));
    }
  }
  return out;
}

}  // namespace asymdial
