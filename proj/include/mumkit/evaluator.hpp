#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mumkit/cache.hpp"
#include "mumkit/modulation.hpp"
#include "mumkit/prompts.hpp"

namespace mumkit {

enum class QueryTask { kDetection, kImportance, kReconstruction };

std::string_view key(QueryTask t);

/// (base id, strategy, level). Unmodulated base sentences use strategy "base"
/// and level 0.
struct ItemKey {
  std::string base_id;
  std::string strategy = "base";
  int level = 0;

  static ItemKey of(const ModulatedItem& m) { return {m.base_id, std::string(key(m.strategy)), m.level}; }
  static ItemKey base(const std::string& id) { return {id, "base", 0}; }
  auto operator<=>(const ItemKey&) const = default;
};

/// Parameters of the offline keyword/lexicon evaluator. `familiarity` is the
/// per-strategy probability of seeing through a substitution (the shared
/// context with the speaker).
struct MockProfile {
  std::map<Strategy, double> familiarity;
  std::uint64_t noise_seed = 0;
  std::map<std::string, double> triggers;  // case-folded word -> weight
  std::string triggers_path;
  std::vector<std::string> vocabulary;     // extra known words for rule inversion

  double familiarity_for(Strategy s) const;
};

/// Parses "word weight" lines ('#' comments). Words are case-folded.
std::map<std::string, double> parse_triggers(std::string_view content, const std::string& source_name = "<triggers>");
std::map<std::string, double> load_triggers(const std::string& path);

struct EvaluatorConfig {
  std::string evaluator_id;
  std::string endpoint = "mock";  // "mock" or an http(s) chat-completions URL
  std::string model;              // remote model name; defaults to evaluator_id
  std::string api_key_env;        // environment variable holding the API key
  double temperature = 0.0;
  int trials_per_query = 3;
  bool experiment_mode = true;    // enforces temperature 0
  PromptTemplates templates = PromptTemplates::defaults();
  MockProfile mock;
  std::size_t max_in_flight = 4;
  int min_interval_ms = 0;
  int max_retries = 2;
  int retry_backoff_ms = 200;
  int timeout_s = 60;
  std::string request_log;  // optional JSONL log of request/response bodies

  bool is_mock() const { return endpoint == "mock"; }
};

struct Query {
  QueryTask task = QueryTask::kDetection;
  ItemKey key;
  int trial_index = 0;
  int attempt = 0;
  std::string prompt;
  std::string text;
  std::optional<ModulatedItem> modulated;  // context for offline evaluators

  /// Identity of the context an offline evaluator reads beyond the prompt.
  std::string context_digest() const;
};

/// Produces raw reply text for a query. Remote backends throw
/// Error(kTransport) once their retries are exhausted.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const Query& query) = 0;
  virtual bool offline() const = 0;
};

struct TrialRecord {
  ItemKey key;
  QueryTask task = QueryTask::kDetection;
  std::string evaluator_id;
  int trial_index = 0;
  int attempts = 1;
  std::string raw_response;
  std::vector<std::string> parsed;  // {"yes"|"no"|"abstain"} or a word list
  std::string timestamp;
  bool cache_hit = false;
};

/// Thread-safe trial sink. Records are emitted sorted by
/// (item key, task, evaluator, trial index); duplicates are rejected.
class TrialLog {
 public:
  void add(TrialRecord record);
  std::vector<TrialRecord> records() const;
  std::size_t size() const;
  std::string to_jsonl(const std::string& manifest_hash) const;

 private:
  mutable std::mutex mu_;
  std::vector<TrialRecord> records_;
  std::set<std::tuple<ItemKey, int, std::string, int>> seen_;
};

std::string now_utc_iso8601();

/// Executes detection, importance and reconstruction tasks against one
/// evaluator, through the response cache, logging every trial.
class EvaluatorSession {
 public:
  EvaluatorSession(EvaluatorConfig config, std::unique_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache = nullptr,
                   std::shared_ptr<TrialLog> log = nullptr);

  const EvaluatorConfig& config() const { return config_; }
  const std::string& id() const { return config_.evaluator_id; }

  /// One detection trial. An unparseable reply is retried once, then recorded
  /// as an abstain. Empty text is "not violating" without a query.
  DetectVerdict detect(std::string_view text, const ItemKey& key = {}, int trial_index = 0, const ModulatedItem* context = nullptr);

  /// trials_per_query detection trials; abstains count as not violating.
  bool majority_detect(std::string_view text, const ItemKey& key = {}, const ModulatedItem* context = nullptr,
                       std::vector<DetectVerdict>* trials = nullptr);

  /// One reconstructed word per substitution; missing answers are "".
  std::vector<std::string> reconstruct(const ModulatedItem& item, int trial_index = 0);

  /// Surface words named in one importance-elicitation trial.
  std::vector<std::string> elicit_importance(const BaseItem& item, int trial_index);

  /// Raise on cache misses instead of querying the backend (replays).
  void set_cache_only(bool on) { cache_only_ = on; }

  std::size_t backend_calls() const { return backend_calls_; }
  std::shared_ptr<TrialLog> log() const { return log_; }
  std::shared_ptr<ResponseCache> cache() const { return cache_; }

 private:
  std::string ask(Query& query, bool& cache_hit);
  void record(const Query& q, int attempts, const std::string& raw, std::vector<std::string> parsed, bool cache_hit);

  EvaluatorConfig config_;
  std::unique_ptr<Backend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<TrialLog> log_;
  std::atomic<std::size_t> backend_calls_{0};
  bool cache_only_ = false;
};

/// Reply text used for the reconstruction prompt's {tokens} placeholder.
std::string render_token_list(const ModulatedItem& item);

}  // namespace mumkit
