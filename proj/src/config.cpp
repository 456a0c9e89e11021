#include "mumkit/config.hpp"

#include <filesystem>
#include <set>

#include <json.hpp>

#include "mumkit/error.hpp"
#include "mumkit/remote_evaluator.hpp"
#include "mumkit/text.hpp"

namespace mumkit {

namespace fs = std::filesystem;
using json = nlohmann::json;

const EvaluatorConfig& RunConfig::evaluator(const std::string& id) const {
  for (const auto& e : evaluators)
    if (e.evaluator_id == id) return e;
  throw Error(ErrorKind::kConfig, "unknown evaluator '" + id + "'");
}

const EvaluatorConfig& RunConfig::baseline() const {
  if (evaluators.empty()) throw Error(ErrorKind::kConfig, "config defines no evaluators");
  return baseline_evaluator.empty() ? evaluators.front() : evaluator(baseline_evaluator);
}

std::string RunConfig::path(const std::string& name) const { return (fs::path(output_dir) / name).string(); }

namespace {

const std::set<std::string> kTopLevelKeys = {"corpus",        "lexicon",          "prompts",      "audit",
                                             "seed",          "output_dir",       "cache_dir",    "tau",
                                             "similarity_threshold", "trials_per_query", "audit_drop", "degraded_threshold",
                                             "max_parallel",  "fit_bounds",       "baseline_evaluator", "title",
                                             "zones",         "population",       "sweep",        "evaluators",
                                             "triggers"};

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  return (path.is_absolute() ? path : fs::path(base_dir) / path).lexically_normal().string();
}

std::string require_file(const std::string& base_dir, const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string()) throw Error(ErrorKind::kConfig, std::string("config: '") + field + "' is required");
  auto p = resolve(base_dir, j[field].get<std::string>());
  if (!fs::exists(p)) throw Error(ErrorKind::kConfig, std::string("config: ") + field + " file not found: " + p);
  return p;
}

FitBounds parse_bounds(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::kConfig, "config: fit_bounds." + what + " must be [lo, hi]");
  FitBounds b{j[0].get<double>(), j[1].get<double>()};
  if (!(b.lo < b.hi)) throw Error(ErrorKind::kConfig, "config: fit_bounds." + what + " must satisfy lo < hi");
  return b;
}

std::map<Strategy, double> parse_familiarity(const json& j) {
  std::map<Strategy, double> out;
  if (j.is_number()) {
    for (auto s : kAllStrategies) out[s] = j.get<double>();
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      auto s = parse_strategy(k);
      if (!s) throw Error(ErrorKind::kConfig, "config: unknown strategy '" + k + "' in familiarity");
      out[*s] = v.get<double>();
    }
  } else {
    throw Error(ErrorKind::kConfig, "config: familiarity must be a number or an object");
  }
  for (auto& [s, f] : out)
    if (f < 0.0 || f > 1.0) throw Error(ErrorKind::kConfig, "config: familiarity for " + std::string(key(s)) + " must lie in [0, 1]");
  return out;
}

FamiliarityDist parse_dist(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  return {j.value("mean", 0.5), j.value("spread", 0.0)};
}

EvaluatorConfig parse_evaluator(const json& j, const RunConfig& rc, const std::string& base_dir, const PromptTemplates& templates,
                                const std::string& default_triggers) {
  EvaluatorConfig e;
  e.evaluator_id = j.value("id", "");
  if (e.evaluator_id.empty()) throw Error(ErrorKind::kConfig, "config: every evaluator needs an 'id'");
  e.endpoint = j.value("endpoint", "mock");
  e.model = j.value("model", e.evaluator_id);
  e.api_key_env = j.value("api_key_env", "");
  e.temperature = j.value("temperature", 0.0);
  e.trials_per_query = j.value("trials_per_query", rc.trials_per_query);
  e.experiment_mode = j.value("experiment_mode", true);
  e.templates = templates;
  e.max_in_flight = j.value("max_in_flight", std::size_t{4});
  e.min_interval_ms = j.value("min_interval_ms", 0);
  e.max_retries = j.value("max_retries", 2);
  e.retry_backoff_ms = j.value("retry_backoff_ms", 200);
  e.timeout_s = j.value("timeout_s", 60);
  e.request_log = resolve(base_dir, j.value("request_log", ""));
  if (e.trials_per_query < 1 || e.trials_per_query % 2 == 0)
    throw Error(ErrorKind::kConfig, "config: evaluator '" + e.evaluator_id + "' needs an odd trials_per_query");
  if (e.experiment_mode && e.temperature != 0.0)
    throw Error(ErrorKind::kConfig, "config: evaluator '" + e.evaluator_id + "' must use temperature 0 in experiment mode");
  if (e.is_mock()) {
    if (j.contains("familiarity")) e.mock.familiarity = parse_familiarity(j["familiarity"]);
    e.mock.noise_seed = j.value("noise_seed", std::uint64_t{0});
    auto triggers = j.contains("triggers") ? resolve(base_dir, j["triggers"].get<std::string>()) : default_triggers;
    if (triggers.empty()) throw Error(ErrorKind::kConfig, "config: mock evaluator '" + e.evaluator_id + "' needs a triggers file");
    if (!fs::exists(triggers)) throw Error(ErrorKind::kConfig, "config: triggers file not found: " + triggers);
    e.mock.triggers_path = triggers;
    e.mock.triggers = load_triggers(triggers);
    if (j.contains("vocabulary")) e.mock.vocabulary = j["vocabulary"].get<std::vector<std::string>>();
  } else {
    parse_endpoint(e.endpoint);
  }
  return e;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& base_dir, const std::string& source_name) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorKind::kConfig, source_name + ": not a JSON object");
  for (const auto& [k, v] : j.items())
    if (!kTopLevelKeys.count(k)) throw Error(ErrorKind::kConfig, source_name + ": unknown field '" + k + "'");
  RunConfig rc;
  try {
    rc.corpus = require_file(base_dir, j, "corpus");
    rc.lexicon = require_file(base_dir, j, "lexicon");
    rc.prompts_dir = resolve(base_dir, j.value("prompts", ""));
    if (!rc.prompts_dir.empty() && !fs::is_directory(rc.prompts_dir))
      throw Error(ErrorKind::kConfig, "config: prompts directory not found: " + rc.prompts_dir);
    if (j.contains("audit")) rc.audit = require_file(base_dir, j, "audit");
    rc.seed = j.value("seed", std::uint64_t{0});
    rc.output_dir = resolve(base_dir, j.value("output_dir", "out"));
    rc.cache_dir = j.contains("cache_dir") ? resolve(base_dir, j["cache_dir"].get<std::string>()) : rc.path("cache");
    rc.tau = j.value("tau", 0.5);
    rc.similarity_threshold = j.value("similarity_threshold", 0.95);
    rc.trials_per_query = j.value("trials_per_query", 3);
    rc.audit_drop = j.value("audit_drop", false);
    rc.degraded_threshold = j.value("degraded_threshold", 0.20);
    rc.max_parallel = j.value("max_parallel", std::size_t{4});
    if (j.contains("fit_bounds")) {
      const auto& fb = j["fit_bounds"];
      if (fb.contains("detection")) rc.detection_bounds = parse_bounds(fb["detection"], "detection");
      if (fb.contains("understanding")) rc.understanding_bounds = parse_bounds(fb["understanding"], "understanding");
    }
    rc.baseline_evaluator = j.value("baseline_evaluator", "");
    rc.title = j.value("title", rc.title);
    if (j.contains("zones")) {
      if (j["zones"].is_string() && j["zones"].get<std::string>() == "default") {
        rc.zones = default_zones();
      } else {
        for (const auto& z : j["zones"])
          rc.zones.push_back({z.at("label").get<std::string>(), z.value("level_lo", 0.0), z.value("level_hi", 5.0), z.value("rate_lo", 0.0),
                              z.value("rate_hi", 1.0), z.value("color", "#dddddd")});
      }
    }
    if (j.contains("population")) {
      const auto& p = j["population"];
      rc.population.size = p.value("size", std::size_t{200});
      rc.population.seed = p.value("seed", rc.seed);
      rc.population.detector_sensitivity = p.value("detector_sensitivity", 1.0);
      if (p.contains("default")) rc.population.default_familiarity = parse_dist(p["default"]);
      if (p.contains("familiarity"))
        for (const auto& [k, v] : p["familiarity"].items()) {
          auto s = parse_strategy(k);
          if (!s) throw Error(ErrorKind::kConfig, "config: unknown strategy '" + k + "' in population");
          rc.population.familiarity[*s] = parse_dist(v);
        }
    }
    rc.sweep.size = rc.population.size;
    rc.sweep.bounds = rc.understanding_bounds;
    rc.sweep.similarity_threshold = rc.similarity_threshold;
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      if (s.contains("strategy")) {
        auto st = parse_strategy(s["strategy"].get<std::string>());
        if (!st) throw Error(ErrorKind::kConfig, "config: unknown sweep strategy");
        rc.sweep.strategy = *st;
      }
      if (s.contains("means")) rc.sweep.means = s["means"].get<std::vector<double>>();
      rc.sweep.spread = s.value("spread", rc.sweep.spread);
      rc.sweep.size = s.value("size", rc.sweep.size);
      if (s.contains("seeds") && s["seeds"].is_array()) rc.sweep.seeds = s["seeds"].get<std::vector<std::uint64_t>>();
      else {
        auto n = s.value("seeds", std::uint64_t{20});
        for (std::uint64_t i = 1; i <= n; ++i) rc.sweep.seeds.push_back(rc.seed + i);
      }
    } else {
      for (std::uint64_t i = 1; i <= 20; ++i) rc.sweep.seeds.push_back(rc.seed + i);
    }

    auto templates = rc.prompts_dir.empty() ? PromptTemplates::defaults() : PromptTemplates::load_dir(rc.prompts_dir);
    auto default_triggers = j.contains("triggers") ? resolve(base_dir, j["triggers"].get<std::string>()) : std::string();
    if (!j.contains("evaluators") || !j["evaluators"].is_array() || j["evaluators"].empty())
      throw Error(ErrorKind::kConfig, "config: 'evaluators' must list at least one evaluator");
    std::set<std::string> ids;
    for (const auto& e : j["evaluators"]) {
      rc.evaluators.push_back(parse_evaluator(e, rc, base_dir, templates, default_triggers));
      if (!ids.insert(rc.evaluators.back().evaluator_id).second)
        throw Error(ErrorKind::kConfig, "config: duplicate evaluator id '" + rc.evaluators.back().evaluator_id + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, source_name + ": " + e.what());
  }
  if (!(rc.tau > 0.0 && rc.tau < 1.0)) throw Error(ErrorKind::kConfig, "config: tau must lie in (0, 1)");
  if (rc.similarity_threshold < 0.0 || rc.similarity_threshold > 1.0)
    throw Error(ErrorKind::kConfig, "config: similarity_threshold must lie in [0, 1]");
  if (rc.trials_per_query < 1 || rc.trials_per_query % 2 == 0) throw Error(ErrorKind::kConfig, "config: trials_per_query must be odd");
  rc.baseline();
  return rc;
}

RunConfig load_config(const std::string& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::kConfig, "config file not found: " + path);
  auto base = fs::absolute(path).parent_path().string();
  auto rc = parse_config(read_file(path), base, path);
  rc.config_path = fs::absolute(path).lexically_normal().string();
  return rc;
}

void apply_overrides(RunConfig& config, const ConfigOverrides& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.tau) {
    if (!(*o.tau > 0.0 && *o.tau < 1.0)) throw Error(ErrorKind::kConfig, "--tau must lie in (0, 1)");
    config.tau = *o.tau;
  }
  if (o.output_dir) {
    bool default_cache = config.cache_dir == config.path("cache");
    config.output_dir = *o.output_dir;
    if (default_cache) config.cache_dir = config.path("cache");
  }
}

}  // namespace mumkit
