// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "asymdial/augment.hpp"
#include "asymdial/backends.hpp"
#include "asymdial/config.hpp"
#include "asymdial/corpus.hpp"
#include "asymdial/dialogue.hpp"
#include "asymdial/error.hpp"
#include "asymdial/metrics.hpp"
#include "asymdial/profiles.hpp"
#include "asymdial/prompts.hpp"
#include "asymdial/rng.hpp"

namespace asymdial {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  int workers = 1;
  bool dry_run = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Root seed for every random draw");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--config", c.config, "Key-value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--workers", c.workers, "Parallel dialogues or judgments")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--dry-run", c.dry_run, "Print the planned work and stop");
}

struct Context {
  KeyValueConfig config;
  std::optional<TemplateRegistry> registry;
  DifficultyTable difficulty;
  PromptOptions prompts;

  explicit Context(const Common& c) : difficulty(default_difficulty_table()) {
    if (!c.config.empty()) config = KeyValueConfig::load(c.config);
    difficulty = apply_difficulty_overrides(difficulty, config);
    if (auto dir = config.get("templates.dir")) {
      registry = TemplateRegistry::with_overrides(*dir);
      prompts.registry = &*registry;
    }
    prompts.difficulty_table = &difficulty;
    prompts.important_turn_threshold =
        config.get_double("analysis.important_turn_threshold", 0.2);
  }
};

// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception
// is rethrown after every thread has stopped.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  const int count = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  std::vector<std::thread> threads;
  for (int w = 1; w < count; ++w) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

std::string model_label(const std::string& spec) {
  if (spec.rfind("api:", 0) == 0) return spec.substr(4);
  if (spec.rfind("scripted:", 0) == 0) return "scripted-" + fs::path(spec.substr(9)).stem().string();
  return spec;
}

std::chrono::system_clock::time_point parse_start_time(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char z = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &z) != 7 ||
      z != 'Z') {
    throw ValidationError("--start-time must look like 2026-01-01T00:00:00Z");
  }
  std::tm tm{};
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = s;
  return std::chrono::system_clock::from_time_t(timegm(&tm));
}

std::vector<fs::path> json_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw ValidationError(dir.string() + " is not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path require_out(const Common& c) {
  if (c.out.empty()) throw ValidationError("--out is required");
  return c.out;
}

// Output folder of a condition: the corpus folder itself, or its mirror under
// --out.
fs::path target_dir(const Common& c, const fs::path& corpus, const ConditionFolder& folder) {
  if (c.out.empty()) return folder.path;
  if (fs::equivalent(folder.path, corpus)) return fs::path(c.out);
  return fs::path(c.out) / folder.path.filename();
}

struct DialogueJob {
  fs::path file;
  fs::path target;  // condition folder receiving the analysis
};

std::vector<DialogueJob> corpus_jobs(const Common& c, const fs::path& corpus) {
  const auto folders = scan_corpus(corpus);
  if (folders.empty()) throw ValidationError(corpus.string() + " holds no condition folder");
  std::vector<DialogueJob> jobs;
  for (const auto& f : folders) {
    const auto target = target_dir(c, corpus, f);
    for (const auto& file : dialogue_files(f.path)) jobs.push_back({file, target});
  }
  return jobs;
}

// Enhanced record plus summary for every dialogue with a usable summary.
std::vector<std::pair<EnhancedDialogue, DialogueSummary>> summarized_records(
    const std::vector<DialogueJob>& jobs, std::ostream& err) {
  std::vector<std::pair<EnhancedDialogue, DialogueSummary>> out;
  for (const auto& job : jobs) {
    auto record = load_record(job.file);
    const auto id = record.transcript.id;
    auto spath = analysis_path(job.target, id, AnalysisKind::summary);
    if (!fs::exists(spath)) spath = analysis_path(job.file.parent_path(), id, AnalysisKind::summary);
    std::optional<DialogueSummary> summary;
    if (fs::exists(spath)) {
      summary = summary_from_json(read_json_file(spath));
    } else if (record.analysis && record.analysis->summary) {
      summary = record.analysis->summary;
    }
    if (!summary || summary->failed || record.transcript.turns.empty()) {
      err << "warning: " << id << " has no usable summary, skipped\n";
      continue;
    }
    out.emplace_back(a1_enhance(record.transcript, record.profile), std::move(*summary));
  }
  return out;
}

MetricsConfig metrics_config(const KeyValueConfig& cfg) {
  MetricsConfig m;
  m.high_threshold = cfg.get_double("metrics.high_threshold", m.high_threshold);
  m.clarity.w1 = cfg.get_double("clarity.w1", m.clarity.w1);
  m.clarity.w2 = cfg.get_double("clarity.w2", m.clarity.w2);
  m.clarity.w3 = cfg.get_double("clarity.w3", m.clarity.w3);
  m.performance.u1 = cfg.get_double("performance.u1", m.performance.u1);
  m.performance.u2 = cfg.get_double("performance.u2", m.performance.u2);
  m.performance.u3 = cfg.get_double("performance.u3", m.performance.u3);
  m.performance.reference_turns =
      cfg.get_double("performance.reference_turns", m.performance.reference_turns);
  m.ssa.alpha = cfg.get_double("ssa.alpha", m.ssa.alpha);
  m.ssa.beta = cfg.get_double("ssa.beta", m.ssa.beta);
  m.ssa.lambda = cfg.get_double("ssa.lambda", m.ssa.lambda);
  if (auto mode = cfg.get("ssa.mode")) m.ssa_mode = ssa_mode_from_string(*mode);
  return m;
}

// ---------------------------------------------------------------------------
// Subcommands

struct GenArgs {
  int n = 1;
  std::string category;
  std::string task;
  std::optional<int> difficulty;
  int uncertainty = 0;
  std::string backend;
};

int cmd_gen_profiles(const Common& c, const GenArgs& a, std::ostream& out, std::ostream& err) {
  Context ctx(c);
  ProfileRequest base;
  base.uncertainty = UncertaintyLevel::from_percent(a.uncertainty);
  base.profile_pools = apply_pool_overrides(default_profile_pools(), ctx.config, "pool.");
  base.task_pools = apply_pool_overrides(default_task_pools(), ctx.config, "task_pool.");
  base.difficulty = a.difficulty;
  base.difficulty_table = &ctx.difficulty;
  if (!a.task.empty()) {
    base.task = find_task(a.task);
    if (!base.task) throw ValidationError("unknown task '" + a.task + "'");
  }
  if (!a.category.empty()) {
    if (std::find(kTaskCategories.begin(), kTaskCategories.end(), a.category) ==
        kTaskCategories.end()) {
      throw ValidationError("unknown task category '" + a.category + "'");
    }
    base.category = a.category;
  }
  if (c.dry_run) {
    out << "gen-profiles: " << a.n << " profile(s), uncertainty " << a.uncertainty << "%, "
        << "difficulty " << (a.difficulty ? std::to_string(*a.difficulty) : "drawn") << ", "
        << "specifics from " << (a.backend.empty() ? "static pools" : a.backend) << ", seed "
        << c.seed << "\n";
    return 0;
  }
  const auto dir = require_out(c);
  std::unique_ptr<TextBackend> backend;
  if (!a.backend.empty()) backend = make_backend(a.backend, BackendRole::generation, ctx.config);
  fs::create_directories(dir);
  for (int i = 0; i < a.n; ++i) {
    ProfileRequest req = base;
    req.seed = derive_seed(c.seed, static_cast<std::uint64_t>(i));
    const auto profile = generate_profile(req, backend.get());
    char name[32];
    std::snprintf(name, sizeof name, "profile-%04d.json", i);
    write_json_file(dir / name, profile_to_json(profile));
    for (const auto& w : profile.warnings) err << "warning: " << name << ": " << w << "\n";
  }
  err << "wrote " << a.n << " profile(s) to " << dir.string() << "\n";
  return 0;
}

struct SimArgs {
  std::string profiles;
  bool share = false;
  std::optional<int> max_turns;
  std::string user_backend;
  std::string agent_backend;
  std::string model;
  std::string start_time;
};

int cmd_simulate(const Common& c, const SimArgs& a, std::ostream& out, std::ostream& err) {
  Context ctx(c);
  RunConfig run;
  run.max_turns = a.max_turns.value_or(ctx.config.get_int("run.max_turns", run.max_turns));
  run.length_violation_retries =
      ctx.config.get_int("run.length_violation_retries", run.length_violation_retries);
  run.terminate_on_leaving = ctx.config.get_bool("run.terminate_on_leaving", true);
  run.user_temperature = ctx.config.get_double("run.user_temperature", run.user_temperature);
  run.agent_temperature = ctx.config.get_double("run.agent_temperature", run.agent_temperature);
  run.validate();

  std::map<int, std::vector<UserProfile>> groups;
  std::size_t total = 0;
  for (const auto& file : json_files(a.profiles)) {
    auto profile = profile_from_json(read_json_file(file));
    groups[profile.uncertainty.percent()].push_back(std::move(profile));
    ++total;
  }
  if (total == 0) throw ValidationError(a.profiles + " holds no profile");
  if (a.user_backend.empty() || a.agent_backend.empty()) {
    throw ValidationError("--user-backend and --agent-backend are required");
  }
  const std::string model = a.model.empty() ? model_label(a.agent_backend) : a.model;

  if (c.dry_run) {
    out << "simulate: " << total << " dialogue(s), max_turns " << run.max_turns
        << ", share_profile " << (a.share ? "true" : "false") << "\n"
        << "  user backend: " << a.user_backend << "\n"
        << "  agent backend: " << a.agent_backend << "\n";
    for (const auto& [p, profiles] : groups) {
      out << "  condition " << condition_dir_name(model, p, a.share) << ": " << profiles.size()
          << " dialogue(s)\n";
    }
    return 0;
  }
  const auto root = require_out(c);

  RunOptions options;
  options.dialogue_id = "dialogue-";
  options.prompts = ctx.prompts;
  options.user_model = model_label(a.user_backend);
  options.agent_model = model;
  if (!a.start_time.empty()) {
    options.clock = stepping_clock(parse_start_time(a.start_time), std::chrono::seconds(1));
  }
  const KeyValueConfig& cfg = ctx.config;
  const BackendFactory factory = [&](const UserProfile&, std::size_t) {
    return BackendPair{make_backend(a.user_backend, BackendRole::generation, cfg),
                       make_backend(a.agent_backend, BackendRole::generation, cfg)};
  };

  std::size_t truncated = 0;
  for (const auto& [p, profiles] : groups) {
    const auto dir = root / condition_dir_name(model, p, a.share);
    const auto results = run_batch(profiles, factory, run, a.share, c.workers, options);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      save_record(make_record(r.transcript, profiles[i]), dir / (r.transcript.id + ".json"));
      write_json_file(log_path(dir, r.transcript.id), request_log_to_json(r.log));
      if (r.transcript.truncated) {
        ++truncated;
        err << "warning: " << r.transcript.id << " truncated: "
            << r.transcript.failure.value_or("") << "\n";
      }
      const auto findings = audit_asymmetry(profiles[i], r.transcript, r.log, a.share);
      if (!findings.empty()) {
        err << "warning: " << r.transcript.id << ": " << findings.size()
            << " asymmetry audit finding(s)\n";
      }
    }
    Manifest m;
    m.model_id = model;
    m.uncertainty_percent = p;
    m.share_profile = a.share;
    m.created_at = results.empty() ? "" : results.front().transcript.created_at;
    m = write_manifest(dir, m);
    err << "wrote " << m.dialogue_count << " dialogue(s) to " << dir.string() << "\n";
  }
  if (truncated) err << truncated << " dialogue(s) truncated\n";
  return 0;
}

struct JudgeArgs {
  std::string corpus;
  std::string judge_backend;
  std::vector<std::string> stages{"a1", "a2", "a3"};
  bool force = false;
};

int cmd_judge(const Common& c, const JudgeArgs& a, std::ostream& out, std::ostream& err) {
  Context ctx(c);
  const std::set<std::string> stages(a.stages.begin(), a.stages.end());
  for (const auto& s : stages) {
    if (s != "a1" && s != "a2" && s != "a3") throw ValidationError("unknown stage '" + s + "'");
  }
  const auto jobs = corpus_jobs(c, a.corpus);
  if (a.judge_backend.empty() && (stages.count("a2") || stages.count("a3"))) {
    throw ValidationError("--judge-backend is required for stages a2 and a3");
  }
  if (c.dry_run) {
    out << "judge: " << jobs.size() << " dialogue(s), stages";
    for (const auto& s : stages) out << " " << s;
    out << ", judge backend " << (a.judge_backend.empty() ? "(none)" : a.judge_backend)
        << (a.force ? ", forced" : "") << "\n";
    return 0;
  }

  SummaryOptions sopts;
  sopts.judge.prompts = ctx.prompts;
  sopts.judge.model_id = model_label(a.judge_backend);
  sopts.judge.max_retries = ctx.config.get_int("judge.max_retries", 2);
  sopts.statistics_tolerance = ctx.config.get_double("judge.statistics_tolerance", 0.01);

  struct Status {
    std::string id;
    std::string line;
    std::size_t failed_pairs = 0;
    bool inconsistent = false;
    bool summary_failed = false;
  };
  std::vector<Status> status(jobs.size());
  parallel_for(jobs.size(), c.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto record = load_record(job.file);
    const auto& id = record.transcript.id;
    Status& st = status[i];
    st.id = id;
    if (record.transcript.turns.empty()) {
      st.line = id + ": no turns, skipped";
      return;
    }
    const auto enhanced = a1_enhance(record.transcript, record.profile);
    std::vector<std::string> done;
    const auto epath = analysis_path(job.target, id, AnalysisKind::enhanced);
    const auto jpath = analysis_path(job.target, id, AnalysisKind::judgments);
    const auto spath = analysis_path(job.target, id, AnalysisKind::summary);
    if (stages.count("a1") && (a.force || !fs::exists(epath))) {
      write_json_file(epath, enhanced_to_json(enhanced));
      done.push_back("a1");
    }
    std::unique_ptr<TextBackend> judge;
    if (!a.judge_backend.empty()) judge = make_backend(a.judge_backend, BackendRole::judge, ctx.config);
    std::vector<TurnPairJudgment> judgments;
    if (stages.count("a2") && (a.force || !fs::exists(jpath))) {
      if (record.transcript.turns.size() >= 2) {
        judgments = a2_turn_analysis(enhanced, *judge, sopts.judge);
      }
      write_json_file(jpath, judgments_to_json(judgments));
      done.push_back("a2");
    } else if (fs::exists(jpath)) {
      judgments = judgments_from_json(read_json_file(jpath));
    }
    for (const auto& j : judgments) st.failed_pairs += j.failed ? 1 : 0;
    if (stages.count("a3") && (a.force || !fs::exists(spath))) {
      const auto summary = a3_summarize(enhanced, judgments, *judge, sopts);
      write_json_file(spath, summary_to_json(summary));
      st.inconsistent = summary.inconsistent;
      st.summary_failed = summary.failed;
      done.push_back("a3");
    }
    st.line = id + ": " + (done.empty() ? std::string("up to date") : "ran");
    for (const auto& d : done) st.line += " " + d;
  });

  std::sort(status.begin(), status.end(),
            [](const Status& x, const Status& y) { return x.id < y.id; });
  std::size_t failed_pairs = 0, inconsistent = 0, summary_failed = 0;
  for (const auto& st : status) {
    err << st.line << "\n";
    failed_pairs += st.failed_pairs;
    inconsistent += st.inconsistent ? 1 : 0;
    summary_failed += st.summary_failed ? 1 : 0;
  }
  if (failed_pairs) err << "warning: " << failed_pairs << " turn pair(s) failed judgment\n";
  if (inconsistent) err << "warning: " << inconsistent << " summary(ies) flagged inconsistent\n";
  if (summary_failed) err << "warning: " << summary_failed << " summary(ies) failed\n";
  return 0;
}

struct ReportArgs {
  std::string corpus;
  std::string ssa_mode = "appendix";
  std::optional<double> high_threshold;
  std::string format = "table";
};

int cmd_report(const Common& c, const ReportArgs& a, std::ostream& out, std::ostream& err) {
  Context ctx(c);
  MetricsConfig mc = metrics_config(ctx.config);
  mc.ssa_mode = ssa_mode_from_string(a.ssa_mode);
  if (a.high_threshold) mc.high_threshold = *a.high_threshold;
  mc.validate();

  const fs::path corpus = a.corpus;
  fs::path recorded;
  if (fs::is_regular_file(corpus)) {
    recorded = corpus;
  } else if (fs::exists(corpus / kRecordedMetricsFile)) {
    recorded = corpus / kRecordedMetricsFile;
  }
  if (c.dry_run) {
    out << "report: " << (recorded.empty() ? "corpus " + corpus.string() : "recorded " + recorded.string())
        << ", ssa mode " << a.ssa_mode << ", high threshold " << mc.high_threshold << "\n";
    return 0;
  }
  CorpusReport report;
  if (!recorded.empty()) {
    report = report_from_recorded(read_json_file(recorded), mc);
  } else {
    const auto entries = load_corpus_entries(corpus);
    if (entries.empty()) throw ValidationError(corpus.string() + " holds no dialogue");
    report = build_report(entries, mc);
  }
  if (a.format == "json") {
    out << canonical_dump(report.to_json());
  } else {
    out << report.to_table();
  }
  if (!c.out.empty()) {
    write_json_file(fs::path(c.out) / "report.json", report.to_json());
    err << "wrote " << (fs::path(c.out) / "report.json").string() << "\n";
  }
  return 0;
}

struct KbArgs {
  std::string corpus;
  std::string query;
  int k = 5;
};

int cmd_kb_build(const Common& c, const KbArgs& a, std::ostream& out, std::ostream& err) {
  const auto jobs = corpus_jobs(c, a.corpus);
  if (c.dry_run) {
    out << "kb-build: " << jobs.size() << " dialogue(s) scanned for summaries\n";
    return 0;
  }
  const auto records = summarized_records(jobs, err);
  if (records.empty()) throw ValidationError("no summarized dialogue; run judge --stages a3 first");
  const auto kb = KnowledgeBase::build(records);
  const fs::path path = (c.out.empty() ? fs::path(a.corpus) : fs::path(c.out)) / "knowledge_base.json";
  write_json_file(path, kb.to_json());
  err << "indexed " << kb.entries().size() << " record(s), " << kb.vocabulary().size()
      << " term(s) into " << path.string() << "\n";
  return 0;
}

int cmd_kb_query(const Common& c, const KbArgs& a, std::ostream& out, std::ostream&) {
  fs::path path = a.corpus;
  if (fs::is_directory(path)) path /= "knowledge_base.json";
  if (!fs::exists(path)) throw ValidationError(path.string() + " does not exist; run kb-build");
  if (a.query.empty()) throw ValidationError("--query is required");
  if (c.dry_run) {
    out << "kb-query: top " << a.k << " from " << path.string() << "\n";
    return 0;
  }
  const auto kb = KnowledgeBase::from_json(read_json_file(path));
  for (const auto& hit : kb.retrieve(a.query, static_cast<std::size_t>(a.k))) {
    char sim[32];
    std::snprintf(sim, sizeof sim, "%.6f", hit.similarity);
    out << hit.id << "\t" << sim << "\n";
  }
  return 0;
}

int cmd_refine(const Common& c, const std::string& corpus, const std::string& judge_spec,
               std::ostream& out, std::ostream& err) {
  Context ctx(c);
  const auto jobs = corpus_jobs(c, corpus);
  if (judge_spec.empty()) throw ValidationError("--judge-backend is required");
  const fs::path root = c.out.empty() ? fs::path(corpus) : fs::path(c.out);
  if (c.dry_run) {
    out << "refine-prompt: " << jobs.size() << " dialogue(s) scanned, judge backend " << judge_spec
        << ", next version v" << next_refined_version(root) << "\n";
    return 0;
  }
  const auto records = summarized_records(jobs, err);
  if (records.empty()) throw ValidationError("no summarized dialogue; run judge --stages a3 first");
  auto judge = make_backend(judge_spec, BackendRole::judge, ctx.config);
  RefineOptions options;
  options.judge.prompts = ctx.prompts;
  options.judge.model_id = model_label(judge_spec);
  const auto result = refine_prompt(records, *judge, root, options);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  if (!result.stored) return result.backend_failed ? 2 : 1;
  out << result.path.string() << "\n";
  return 0;
}

int cmd_validate(const Common&, const std::string& target, std::ostream& out, std::ostream& err) {
  const fs::path path = target;
  if (!fs::exists(path)) throw ValidationError(target + " does not exist");
  std::size_t files = 0;
  std::size_t problems = 0;
  auto report = [&](const fs::path& file, const std::string& where, const std::string& msg) {
    out << file.string() << ": " << where << ": " << msg << "\n";
    ++problems;
  };
  auto check_file = [&](const fs::path& file) {
    ++files;
    try {
      const auto doc = read_json_file(file);
      if (file.filename() == kManifestFile) {
        (void)manifest_from_json(doc);
        return;
      }
      for (const auto& issue : validate_record(doc).issues) report(file, issue.path, issue.message);
    } catch (const std::exception& e) {
      report(file, "$", e.what());
    }
  };
  auto check_condition = [&](const fs::path& dir) {
    check_file(dir / kManifestFile);
    for (const auto& f : dialogue_files(dir)) check_file(f);
    try {
      const auto m = read_manifest(dir);
      const auto count = dialogue_files(dir).size();
      if (m.dialogue_count != count) {
        report(dir / kManifestFile, "dialogue_count",
               std::to_string(m.dialogue_count) + " but the folder holds " +
                   std::to_string(count) + " dialogue file(s)");
      }
    } catch (const std::exception&) {
    }
  };

  if (fs::is_regular_file(path)) {
    check_file(path);
  } else if (fs::exists(path / kManifestFile)) {
    check_condition(path);
  } else {
    bool any = false;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_directory() && fs::exists(e.path() / kManifestFile)) {
        check_condition(e.path());
        any = true;
      }
    }
    if (!any) {
      for (const auto& f : json_files(path)) check_file(f);
    }
  }
  err << files << " file(s) checked, " << problems << " problem(s)\n";
  return problems ? 1 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Asymmetric user-agent dialogue simulation and evaluation", "asymdial"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Common common;

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-profiles", "Generate seeded user profiles");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--n", gen.n, "Number of profiles")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--task-category", gen.category, "Draw tasks from this category");
  gen_cmd->add_option("--task", gen.task, "Task name from the task library");
  gen_cmd->add_option("--difficulty", gen.difficulty, "Difficulty 1-5 (drawn when absent)")
      ->check(CLI::Range(1, 5));
  gen_cmd->add_option("--uncertainty", gen.uncertainty, "Masked share of attributes (percent)")
      ->check(CLI::IsMember({0, 40, 60, 80}));
  gen_cmd->add_option("--backend", gen.backend,
                      "Generation backend for task specifics and identity (scripted:<file> or "
                      "api:<model>)");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run dialogues over a profile folder");
  add_common(sim_cmd, common);
  sim_cmd->add_option("--profiles", sim.profiles, "Profile folder")
      ->required()
      ->check(CLI::ExistingDirectory);
  sim_cmd->add_option("--share-profile", sim.share, "Show the profile to the agent (true/false)");
  sim_cmd->add_option("--max-turns", sim.max_turns, "Turn cap")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--user-backend", sim.user_backend, "scripted:<file> or api:<model>");
  sim_cmd->add_option("--agent-backend", sim.agent_backend, "scripted:<file> or api:<model>");
  sim_cmd->add_option("--model", sim.model, "Agent model label for the condition folder");
  sim_cmd->add_option("--start-time", sim.start_time,
                      "Fixed start time, advancing 1 s per reading (2026-01-01T00:00:00Z)");

  JudgeArgs judge;
  auto* judge_cmd = app.add_subcommand("judge", "Enhance, judge and summarize a corpus");
  add_common(judge_cmd, common);
  judge_cmd->add_option("--corpus", judge.corpus, "Corpus folder")->required()->check(
      CLI::ExistingDirectory);
  judge_cmd->add_option("--judge-backend", judge.judge_backend, "scripted:<file> or api:<model>");
  judge_cmd->add_option("--stages", judge.stages, "Stages among a1,a2,a3")->delimiter(',');
  judge_cmd->add_flag("--force", judge.force, "Redo stages whose output exists");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Aggregate metrics per condition");
  add_common(rep_cmd, common);
  rep_cmd->add_option("--corpus", rep.corpus, "Corpus folder or recorded metrics file")
      ->required()
      ->check(CLI::ExistingPath);
  rep_cmd->add_option("--ssa-mode", rep.ssa_mode, "appendix or maintext")
      ->check(CLI::IsMember({"appendix", "maintext"}));
  rep_cmd->add_option("--high-threshold", rep.high_threshold, "High-satisfaction threshold")
      ->check(CLI::Range(0.0, 1.0));
  rep_cmd->add_option("--format", rep.format, "table or json")
      ->check(CLI::IsMember({"table", "json"}));

  KbArgs kb;
  auto* kb_build = app.add_subcommand("kb-build", "Index summarized dialogues");
  add_common(kb_build, common);
  kb_build->add_option("--corpus", kb.corpus, "Corpus folder")->required()->check(
      CLI::ExistingDirectory);
  auto* kb_query = app.add_subcommand("kb-query", "Retrieve similar dialogues");
  add_common(kb_query, common);
  kb_query->add_option("--corpus", kb.corpus, "Corpus folder or knowledge base file")
      ->required()
      ->check(CLI::ExistingPath);
  kb_query->add_option("--query", kb.query, "Query text")->required();
  kb_query->add_option("--k", kb.k, "Number of hits")->check(CLI::PositiveNumber);

  std::string refine_corpus;
  std::string refine_judge;
  auto* refine_cmd = app.add_subcommand("refine-prompt", "Propose a refined agent system prompt");
  add_common(refine_cmd, common);
  refine_cmd->add_option("--corpus", refine_corpus, "Corpus folder")->required()->check(
      CLI::ExistingDirectory);
  refine_cmd->add_option("--judge-backend", refine_judge, "scripted:<file> or api:<model>");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check files against the corpus schema");
  add_common(validate_cmd, common);
  validate_cmd->add_option("--path", validate_path, "File or folder")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, err, err);
    return 1;
  }

  try {
    if (*gen_cmd) return cmd_gen_profiles(common, gen, out, err);
    if (*sim_cmd) return cmd_simulate(common, sim, out, err);
    if (*judge_cmd) return cmd_judge(common, judge, out, err);
    if (*rep_cmd) return cmd_report(common, rep, out, err);
    if (*kb_build) return cmd_kb_build(common, kb, out, err);
    if (*kb_query) return cmd_kb_query(common, kb, out, err);
    if (*refine_cmd) return cmd_refine(common, refine_corpus, refine_judge, out, err);
    if (*validate_cmd) return cmd_validate(common, validate_path, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace asymdial
