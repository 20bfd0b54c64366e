// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "asymdial/augment.hpp"
#include "asymdial/dialogue.hpp"
#include "asymdial/judgment.hpp"
#include "asymdial/metrics.hpp"
#include "asymdial/profiles.hpp"
#include "asymdial/transcript.hpp"

namespace asymdial {

// Sorted keys, 2-space indent, LF, trailing newline. Floats print with up to
// 6 significant digits and always carry a '.' or exponent; non-finite
// numbers become null.
std::string canonical_dump(const nlohmann::json& doc);

// Throws ParseError with the byte offset of the first bad byte.
nlohmann::json parse_json_text(std::string_view text);
nlohmann::json read_json_file(const std::filesystem::path& path);
// Canonical form; parent directories are created.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

struct Analysis {
  std::vector<TurnPairJudgment> judgments;
  std::optional<DialogueSummary> summary;

  bool operator==(const Analysis&) const = default;
};

struct DialogueRecord {
  Transcript transcript;  // id, created_at, share flag and turns
  UserProfile profile;
  bool rag_used = false;
  std::optional<Analysis> analysis;

  bool operator==(const DialogueRecord&) const = default;
};

DialogueRecord make_record(const Transcript& transcript, const UserProfile& profile);

nlohmann::json record_to_json(const DialogueRecord& record);
// Throws ValidationError carrying the full report when validate() fails.
DialogueRecord record_from_json(const nlohmann::json& doc);

struct SchemaIssue {
  std::string path;     // "turns[2].metadata.hidden_states.satisfaction.score"
  std::string message;

  bool operator==(const SchemaIssue&) const = default;
};

struct ValidationReport {
  std::vector<SchemaIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
  std::string to_string() const;
};

// Reports every violation. Never throws.
ValidationReport validate_record(const nlohmann::json& doc);

void save_record(const DialogueRecord& record, const std::filesystem::path& path);
// Throws ParseError on malformed JSON and ValidationError on schema issues.
DialogueRecord load_record(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Import

struct ImportResult {
  nlohmann::json document;           // canonical field names
  std::vector<std::string> mapping;  // "from -> to" notes, one per rule applied
};

// Maps known field-name variants onto the canonical schema. The result still
// has to pass validate_record.
ImportResult import_document(const nlohmann::json& raw);

// ---------------------------------------------------------------------------
// Folder layout

struct Manifest {
  std::string model_id;
  int uncertainty_percent = 0;
  bool share_profile = false;
  std::string created_at;
  std::size_t dialogue_count = 0;

  bool operator==(const Manifest&) const = default;
};

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kRecordedMetricsFile = "recorded_metrics.json";

// "<model>__u<p>__<profile|noprofile>"; characters outside [A-Za-z0-9._-]
// in the model id become '-'.
std::string condition_dir_name(std::string_view model_id, int uncertainty_percent,
                               bool share_profile);

nlohmann::json manifest_to_json(const Manifest& manifest);
// Throws ValidationError, including for an invalid uncertainty level.
Manifest manifest_from_json(const nlohmann::json& doc);
Manifest read_manifest(const std::filesystem::path& condition_dir);

// Dialogue files of a condition folder (every *.json but the manifest), sorted.
std::vector<std::filesystem::path> dialogue_files(const std::filesystem::path& condition_dir);

// Rewrites manifest.json with dialogue_count equal to the file count.
Manifest write_manifest(const std::filesystem::path& condition_dir, Manifest manifest);

struct ConditionFolder {
  std::filesystem::path path;
  Manifest manifest;
};

// `root` itself when it holds a manifest, otherwise its direct
// subdirectories that do, sorted by path.
std::vector<ConditionFolder> scan_corpus(const std::filesystem::path& root);

enum class AnalysisKind { enhanced, judgments, summary };

// <condition>/analysis/<id>.<kind>.json
std::filesystem::path analysis_path(const std::filesystem::path& condition_dir,
                                    std::string_view dialogue_id, AnalysisKind kind);
// <condition>/logs/<id>.requests.json
std::filesystem::path log_path(const std::filesystem::path& condition_dir,
                               std::string_view dialogue_id);

nlohmann::json judgments_to_json(const std::vector<TurnPairJudgment>& judgments);
std::vector<TurnPairJudgment> judgments_from_json(const nlohmann::json& doc);

// Metrics inputs for every dialogue under `root`. Judgments and summaries
// come from the analysis files when present, else from the record.
std::vector<CorpusEntry> load_corpus_entries(const std::filesystem::path& root);

}  // namespace asymdial
