#include "mumkit/pipeline.hpp"

#include <fcntl.h>
#include <cerrno>
#include <unistd.h>

#include <filesystem>
#include <iostream>
#include <set>

#include <json.hpp>

#include "mumkit/analysis.hpp"
#include "mumkit/corpus.hpp"
#include "mumkit/mockpop.hpp"
#include "mumkit/remote_evaluator.hpp"
#include "mumkit/report.hpp"
#include "mumkit/runner.hpp"

namespace mumkit {

namespace fs = std::filesystem;
using json = nlohmann::json;

OutputLock::OutputLock(const std::string& output_dir) : path_((fs::path(output_dir) / ".lock").string()) {
  fs::create_directories(output_dir);
  int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw Error(ErrorKind::kState, "output directory is locked by another command (" + path_ + "); remove it if that command died");
    throw Error(ErrorKind::kState, "cannot create lock file " + path_);
  }
  auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

std::ostream& logger(const CommandOptions& o) { return o.log ? *o.log : std::cout; }

std::vector<Task> tasks_of(const std::string& t) {
  if (t == "both") return {Task::kDetection, Task::kUnderstanding};
  auto task = parse_task(t);
  if (!task) throw Error(ErrorKind::kConfig, "--task must be detect, understand or both");
  return {*task};
}

void check_offline(const EvaluatorConfig& e, const CommandOptions& o) {
  if (o.offline && !e.is_mock())
    throw Error(ErrorKind::kConfig, "offline mode refuses evaluator '" + e.evaluator_id + "' with endpoint " + e.endpoint);
}

std::shared_ptr<const Lexicon> load_lexicon(const RunConfig& c) { return std::make_shared<const Lexicon>(Lexicon::load(c.lexicon)); }

/// Mock evaluators also know the corpus words, so rule inversion can prefer them.
EvaluatorConfig with_vocabulary(EvaluatorConfig e, const std::vector<BaseItem>& bases) {
  if (!e.is_mock()) return e;
  std::set<std::string> words(e.mock.vocabulary.begin(), e.mock.vocabulary.end());
  for (const auto& b : bases)
    for (const auto& t : b.tokens) words.insert(casefold(t.surface));
  e.mock.vocabulary.assign(words.begin(), words.end());
  return e;
}

std::string eval_dir(const RunConfig& c, const std::string& id) { return c.path(std::string(layout::kRuns) + "/" + safe_file_name(id)); }

std::string run_file(const RunConfig& c, const std::string& id, const std::string& stem, Task t, const std::string& ext) {
  return (fs::path(eval_dir(c, id)) / (stem + "_" + std::string(key(t)) + ext)).string();
}

ModulatedDataset load_built_dataset(const RunConfig& c) {
  auto path = c.path(layout::kDataset);
  if (!fs::exists(path)) throw Error(ErrorKind::kState, "dataset not built: " + path + " is missing (run `mumkit build`)");
  return load_dataset(path);
}

std::vector<const EvaluatorConfig*> selected(const RunConfig& c, const CommandOptions& o) {
  std::vector<const EvaluatorConfig*> out;
  if (o.evaluator) {
    out.push_back(&c.evaluator(*o.evaluator));
  } else {
    for (const auto& e : c.evaluators) out.push_back(&e);
  }
  for (const auto* e : out) check_offline(*e, o);
  return out;
}

std::string manifest_of(std::string_view csv) {
  for (const auto& line : split(csv, '\n'))
    if (line.starts_with("# manifest:")) return trim(std::string_view(line).substr(11));
  return "";
}

void check_manifest(const std::string& found, const std::string& expected, const std::string& what, const CommandOptions& o) {
  if (found == expected) return;
  if (o.force) {
    logger(o) << "warning: " << what << " belongs to manifest " << found << ", expected " << expected << " (forced)\n";
    return;
  }
  throw Error(ErrorKind::kInvariant, what + " belongs to manifest " + found + " but the current run manifest is " + expected +
                                         " (re-run, or pass --force)");
}

void write_combined_rates(const RunConfig& c, const std::string& hash) {
  std::vector<RateSeries> all;
  for (auto task : {Task::kDetection, Task::kUnderstanding})
    for (const auto& e : c.evaluators) {
      auto p = run_file(c, e.evaluator_id, "rates", task, ".csv");
      if (!fs::exists(p)) continue;
      std::string m;
      auto series = rates_from_csv(read_file(p), &m);
      if (m != hash) continue;
      all.insert(all.end(), series.begin(), series.end());
    }
  write_file_atomic(c.path(layout::kRates), rates_to_csv(all, hash));
}

ExitCode run_all(const RunConfig& c, const CommandOptions& o, bool replay) {
  auto& log = logger(o);
  auto dataset = load_built_dataset(c);
  auto lexicon = load_lexicon(c);
  if (lexicon->version() != dataset.lexicon_version)
    check_manifest(lexicon->version(), dataset.lexicon_version, "lexicon " + c.lexicon, o);
  auto [hash, manifest] = make_run_manifest(c, dataset);
  if (replay) {
    check_manifest(read_run_manifest_hash(c), hash, "stored run", o);
  } else {
    write_file_atomic(c.path(layout::kRunManifest), manifest);
  }
  auto cache = std::make_shared<ResponseCache>(c.cache_dir);
  RunOptions ro;
  ro.similarity_threshold = c.similarity_threshold;
  ro.audit_drop = c.audit_drop;
  ro.degraded_threshold = c.degraded_threshold;
  ro.max_parallel = c.max_parallel;

  ExitCode code = ExitCode::kOk;
  for (const auto* ec : selected(c, o)) {
    auto cfg = with_vocabulary(*ec, dataset.bases);
    for (auto task : tasks_of(o.task)) {
      auto trial_log = std::make_shared<TrialLog>();
      EvaluatorSession session(cfg, make_backend(cfg, lexicon), cache, trial_log);
      session.set_cache_only(replay);
      RunResult result;
      try {
        result = task == Task::kDetection ? run_detection(dataset, session, ro) : run_understanding(dataset, session, ro);
      } catch (const Error& e) {
        if (replay && e.kind() == ErrorKind::kState) throw Error(ErrorKind::kInvariant, std::string("replay: ") + e.what());
        if (e.kind() != ErrorKind::kTransport && e.kind() != ErrorKind::kState) throw;
        log << "evaluator " << cfg.evaluator_id << " failed on " << key(task) << ": " << e.what() << "\n";
        code = ExitCode::kPartialFailure;
        continue;
      }
      auto rates = rates_to_csv(result.series, hash);
      auto verdicts = verdicts_to_csv(result.verdicts, hash);
      auto rates_path = run_file(c, cfg.evaluator_id, "rates", task, ".csv");
      auto verdicts_path = run_file(c, cfg.evaluator_id, "verdicts", task, ".csv");
      if (replay) {
        if (!fs::exists(rates_path) || read_file(rates_path) != rates || read_file(verdicts_path) != verdicts)
          throw Error(ErrorKind::kInvariant, "replay of " + cfg.evaluator_id + "/" + std::string(key(task)) + " does not reproduce " + rates_path);
        log << cfg.evaluator_id << " " << key(task) << ": replay matches (" << session.backend_calls() << " backend calls)\n";
        continue;
      }
      write_file_atomic(run_file(c, cfg.evaluator_id, "trials", task, ".jsonl"), trial_log->to_jsonl(hash));
      write_file_atomic(verdicts_path, verdicts);
      write_file_atomic(rates_path, rates);
      std::size_t degraded = 0;
      for (const auto& s : result.series) degraded += s.degraded ? 1 : 0;
      log << cfg.evaluator_id << " " << key(task) << ": " << result.series.size() << " series, " << session.backend_calls()
          << " backend calls, cache hits " << cache->hits() << ", failures " << result.failures.size() << "\n";
      if (!result.failures.empty()) {
        code = ExitCode::kPartialFailure;
        if (degraded) log << "warning: " << degraded << " degraded series for " << cfg.evaluator_id << "\n";
      }
    }
  }
  if (!replay) write_combined_rates(c, hash);
  return code;
}

ExitCode fit_all(const RunConfig& c, const CommandOptions& o) {
  auto& log = logger(o);
  auto hash = read_run_manifest_hash(c);
  std::vector<RateSeries> series;
  std::vector<ItemVerdict> verdicts;
  std::vector<std::string> skipped;
  for (const auto& e : c.evaluators) {
    for (auto task : {Task::kDetection, Task::kUnderstanding}) {
      auto rp = run_file(c, e.evaluator_id, "rates", task, ".csv");
      auto vp = run_file(c, e.evaluator_id, "verdicts", task, ".csv");
      if (!fs::exists(rp)) {
        skipped.push_back(e.evaluator_id + "/" + std::string(key(task)));
        continue;
      }
      auto text = read_file(rp);
      check_manifest(manifest_of(text), hash, rp, o);
      auto s = rates_from_csv(text);
      series.insert(series.end(), s.begin(), s.end());
      if (fs::exists(vp)) {
        auto v = verdicts_from_csv(read_file(vp));
        verdicts.insert(verdicts.end(), v.begin(), v.end());
      }
    }
  }
  for (const auto& s : skipped) log << "warning: no rate series for " << s << " (skipped)\n";
  if (series.empty()) throw Error(ErrorKind::kState, "no rate series found under " + c.path(layout::kRuns) + " (run `mumkit run`)");
  AnalysisOptions ao;
  ao.tau = c.tau;
  ao.detection_bounds = c.detection_bounds;
  ao.understanding_bounds = c.understanding_bounds;
  ao.manifest_hash = hash;
  auto analysis = analyze(series, verdicts, ao);
  for (const auto& s : skipped) analysis.warnings.push_back("missing series: " + s);
  std::error_code ec;
  fs::remove_all(c.path(layout::kStats), ec);
  write_file_atomic(c.path(layout::kResults), analysis_to_json(analysis));
  for (const auto& [name, content] : analysis_tables(analysis))
    write_file_atomic(c.path(std::string(layout::kStats) + "/" + name), content);
  log << "fitted " << analysis.series.size() << " series, " << analysis.mums.size() << " MUM estimates, " << analysis.tradeoffs.size()
      << " trade-offs (tau " << fixed(c.tau, 2) << ")\n";
  for (const auto& w : analysis.warnings) log << "warning: " << w << "\n";
  return ExitCode::kOk;
}

ExitCode report_all(const RunConfig& c, const CommandOptions& o) {
  auto path = c.path(layout::kResults);
  if (!fs::exists(path)) throw Error(ErrorKind::kState, "statistics missing: " + path + " (run `mumkit fit`)");
  auto analysis = analysis_from_json(read_file(path));
  check_manifest(analysis.manifest_hash, read_run_manifest_hash(c), path, o);
  ReportOptions ro;
  ro.title = c.title;
  ro.zones = c.zones;
  auto artifacts = render_report(analysis, ro);
  std::error_code ec;
  fs::remove_all(c.path(layout::kReport), ec);
  write_artifacts(c.path(layout::kReport), artifacts);
  logger(o) << "report: " << artifacts.size() << " artifacts in " << c.path(layout::kReport) << "\n";
  return ExitCode::kOk;
}

ExitCode worst(ExitCode a, ExitCode b) { return static_cast<int>(a) >= static_cast<int>(b) ? a : b; }

}  // namespace

std::pair<std::string, std::string> make_run_manifest(const RunConfig& c, const ModulatedDataset& dataset) {
  json evals = json::array();
  for (const auto& e : c.evaluators) {
    json j = {{"id", e.evaluator_id},
              {"endpoint", e.endpoint},
              {"model", e.model},
              {"temperature", e.temperature},
              {"trials_per_query", e.trials_per_query},
              {"templates", e.templates.hash()}};
    if (e.is_mock()) {
      json fam = json::object();
      for (const auto& [s, f] : e.mock.familiarity) fam[std::string(key(s))] = f;
      j["mock"] = {{"familiarity", fam},
                   {"noise_seed", e.mock.noise_seed},
                   {"triggers", sha256_hex(read_file(e.mock.triggers_path))},
                   {"vocabulary", e.mock.vocabulary}};
    }
    evals.push_back(j);
  }
  json m = {{"format", "mumkit-run/1"},
            {"dataset_manifest", dataset.manifest_hash()},
            {"corpus_version", dataset.corpus_version},
            {"lexicon_version", dataset.lexicon_version},
            {"seed", dataset.seed},
            {"similarity_threshold", c.similarity_threshold},
            {"audit_drop", c.audit_drop},
            {"degraded_threshold", c.degraded_threshold},
            {"evaluators", evals}};
  auto hash = sha256_hex(m.dump());
  json out = {{"hash", hash}, {"manifest", m}};
  return {hash, out.dump(2) + "\n"};
}

std::string read_run_manifest_hash(const RunConfig& c) {
  auto path = c.path(layout::kRunManifest);
  if (!fs::exists(path)) throw Error(ErrorKind::kState, "run manifest missing: " + path + " (run `mumkit run`)");
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.contains("hash")) throw Error(ErrorKind::kParse, path + ": malformed run manifest");
  return j["hash"].get<std::string>();
}

ExitCode cmd_build(const RunConfig& c, const CommandOptions& o) {
  OutputLock lock(c.output_dir);
  auto& log = logger(o);
  auto corpus = load_corpus(c.corpus);
  auto lexicon = load_lexicon(c);
  auto base_cfg = with_vocabulary(c.baseline(), corpus.items());
  check_offline(base_cfg, o);
  auto cache = std::make_shared<ResponseCache>(c.cache_dir);
  auto trial_log = std::make_shared<TrialLog>();
  EvaluatorSession session(base_cfg, make_backend(base_cfg, lexicon), cache, trial_log);
  for (const auto& item : corpus.items())
    for (const auto& w : item.warnings) log << "warning: " << item.id << ": " << w << "\n";

  std::size_t passed = 0;
  for (auto& item : corpus.mutable_items()) {
    if (validate_baseline(item, session).passed) {
      ++passed;
      rank_importance(item, session);
    } else {
      log << "warning: " << item.id << " failed baseline validation and is excluded\n";
    }
  }
  save_rankings(c.path(layout::kRankings), corpus, base_cfg.evaluator_id);
  auto dataset = build_dataset(corpus.passed_only(), *lexicon, c.seed);
  if (!c.audit.empty()) log << "meaning audit: " << audit_meaning(dataset, c.audit) << " verdicts applied\n";
  save_dataset(c.path(layout::kDataset), dataset);
  write_file_atomic(c.path(layout::kBuildTrials), trial_log->to_jsonl(dataset.manifest_hash()));
  log << "validated " << passed << "/" << corpus.size() << " items; " << dataset.items.size() << " modulated items; manifest "
      << dataset.manifest_hash() << "\n";
  return ExitCode::kOk;
}

ExitCode cmd_run(const RunConfig& c, const CommandOptions& o) {
  OutputLock lock(c.output_dir);
  return run_all(c, o, false);
}

ExitCode cmd_fit(const RunConfig& c, const CommandOptions& o) {
  OutputLock lock(c.output_dir);
  return fit_all(c, o);
}

ExitCode cmd_report(const RunConfig& c, const CommandOptions& o) {
  OutputLock lock(c.output_dir);
  return report_all(c, o);
}

ExitCode cmd_replay(const RunConfig& c, const CommandOptions& o) {
  OutputLock lock(c.output_dir);
  auto code = run_all(c, o, true);
  code = worst(code, fit_all(c, o));
  return worst(code, report_all(c, o));
}

ExitCode cmd_sweep(const RunConfig& c, const CommandOptions& o) {
  OutputLock lock(c.output_dir);
  auto& log = logger(o);
  auto dataset = load_built_dataset(c);
  auto lexicon = load_lexicon(c);
  const EvaluatorConfig* mock = nullptr;
  for (const auto& e : c.evaluators)
    if (e.is_mock()) {
      mock = &e;
      break;
    }
  if (!mock) throw Error(ErrorKind::kConfig, "population simulation needs a mock evaluator for its triggers");
  auto profile = with_vocabulary(*mock, dataset.bases).mock;
  auto hash = dataset.manifest_hash();

  auto rates = simulate_population_understanding(dataset, lexicon, profile, c.population, c.similarity_threshold);
  auto det = simulate_population_detection(dataset, lexicon, profile, c.population);
  rates.insert(rates.end(), det.begin(), det.end());
  write_file_atomic(c.path(std::string(layout::kPopulation) + "/rates.csv"), rates_to_csv(rates, hash));

  auto sweep = sweep_common_ground(dataset, lexicon, profile, c.sweep);
  write_file_atomic(c.path(std::string(layout::kPopulation) + "/sweep.csv"), sweep_to_csv(sweep, hash));
  log << "common-ground sweep (" << key(sweep.strategy) << ", " << c.sweep.seeds.size() << " seeds)\n";
  for (const auto& p : sweep.points)
    log << "  mean " << fixed(p.mean, 2) << ": x0 " << fixed(p.x0_mean, 3) << " +/- " << fixed(p.x0_sd, 3) << "\n";
  log << (sweep.monotone ? "x0 increases with familiarity" : "finding: x0 is not monotone in familiarity")
      << (sweep.separated ? " (gaps exceed 3 combined SDs)" : "") << "\n";
  return ExitCode::kOk;
}

}  // namespace mumkit
