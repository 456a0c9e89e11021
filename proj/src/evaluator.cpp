#include "mumkit/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "mumkit/error.hpp"

namespace mumkit {

using json = nlohmann::json;

std::string_view key(QueryTask t) {
  switch (t) {
    case QueryTask::kDetection: return "detection";
    case QueryTask::kImportance: return "importance";
    case QueryTask::kReconstruction: return "reconstruction";
  }
  return "";
}

double MockProfile::familiarity_for(Strategy s) const {
  auto it = familiarity.find(s);
  return it == familiarity.end() ? 0.0 : it->second;
}

std::map<std::string, double> parse_triggers(std::string_view content, const std::string& source_name) {
  std::map<std::string, double> out;
  std::size_t line_no = 0;
  for (const auto& raw : split(content, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    std::string word;
    double weight = 1.0;
    in >> word;
    if (!(in >> weight)) weight = 1.0;
    if (word.empty()) throw Error(ErrorKind::kParse, source_name + ":" + std::to_string(line_no) + ": empty trigger");
    out[casefold(word)] = weight;
  }
  return out;
}

std::map<std::string, double> load_triggers(const std::string& path) { return parse_triggers(read_file(path), path); }

std::string Query::context_digest() const {
  std::string d = std::string(mumkit::key(task)) + "|" + key.base_id + "|" + key.strategy + "|" + std::to_string(key.level);
  if (modulated) {
    for (const auto& s : modulated->substitutions)
      d += "|" + std::to_string(s.token_index) + ":" + s.original + ">" + s.replacement + "@" + std::to_string(s.offset);
  }
  return sha256_hex(d);
}

void TrialLog::add(TrialRecord record) {
  std::lock_guard lock(mu_);
  if (!seen_.emplace(record.key, static_cast<int>(record.task), record.evaluator_id, record.trial_index).second)
    throw Error(ErrorKind::kInvariant, "duplicate trial " + record.key.base_id + "/" + record.key.strategy + "/" +
                                           std::to_string(record.key.level) + "/" + std::string(key(record.task)) + "#" +
                                           std::to_string(record.trial_index));
  records_.push_back(std::move(record));
}

std::vector<TrialRecord> TrialLog::records() const {
  std::lock_guard lock(mu_);
  auto out = records_;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.key, a.task, a.evaluator_id, a.trial_index) < std::tie(b.key, b.task, b.evaluator_id, b.trial_index);
  });
  return out;
}

std::size_t TrialLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::string TrialLog::to_jsonl(const std::string& manifest_hash) const {
  auto recs = records();
  std::ostringstream out;
  out << json{{"kind", "header"}, {"manifest", manifest_hash}, {"records", recs.size()}}.dump() << "\n";
  for (const auto& r : recs) {
    json j = {{"base_id", r.key.base_id},
              {"strategy", r.key.strategy},
              {"level", r.key.level},
              {"task", std::string(key(r.task))},
              {"evaluator_id", r.evaluator_id},
              {"trial_index", r.trial_index},
              {"attempts", r.attempts},
              {"raw_response", r.raw_response},
              {"parsed", r.parsed},
              {"timestamp", r.timestamp},
              {"cache_hit", r.cache_hit}};
    out << j.dump() << "\n";
  }
  return out.str();
}

std::string now_utc_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string render_token_list(const ModulatedItem& item) {
  std::string out;
  for (std::size_t i = 0; i < item.substitutions.size(); ++i)
    out += std::to_string(i + 1) + ". " + item.substitutions[i].replacement + "\n";
  return out;
}

EvaluatorSession::EvaluatorSession(EvaluatorConfig config, std::unique_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache,
                                   std::shared_ptr<TrialLog> log)
    : config_(std::move(config)), backend_(std::move(backend)), cache_(std::move(cache)), log_(std::move(log)) {
  if (!backend_) throw Error(ErrorKind::kConfig, "evaluator '" + config_.evaluator_id + "' has no backend");
  if (config_.experiment_mode && config_.temperature != 0.0)
    throw Error(ErrorKind::kConfig, "evaluator '" + config_.evaluator_id + "': temperature must be 0 in experiment mode");
  if (config_.trials_per_query < 1) throw Error(ErrorKind::kConfig, "trials_per_query must be positive");
}

std::string EvaluatorSession::ask(Query& q, bool& cache_hit) {
  std::string digest = backend_->offline() ? q.context_digest() : std::string();
  std::string cache_key = ResponseCache::make_key(config_.evaluator_id, q.prompt, config_.temperature, q.trial_index, q.attempt, digest);
  if (cache_) {
    if (auto hit = cache_->get(cache_key)) {
      cache_hit = true;
      return *hit;
    }
  }
  if (cache_only_)
    throw Error(ErrorKind::kState, "cache miss for evaluator '" + config_.evaluator_id + "' on " + q.key.base_id + "/" +
                                       q.key.strategy + "/" + std::to_string(q.key.level) + " (replay requires a warm cache)");
  cache_hit = false;
  ++backend_calls_;
  std::string response = backend_->complete(q);
  if (cache_) cache_->put(cache_key, config_.evaluator_id, q.trial_index, response);
  return response;
}

void EvaluatorSession::record(const Query& q, int attempts, const std::string& raw, std::vector<std::string> parsed, bool cache_hit) {
  if (!log_) return;
  TrialRecord r;
  r.key = q.key;
  r.task = q.task;
  r.evaluator_id = config_.evaluator_id;
  r.trial_index = q.trial_index;
  r.attempts = attempts;
  r.raw_response = raw;
  r.parsed = std::move(parsed);
  r.timestamp = now_utc_iso8601();
  r.cache_hit = cache_hit;
  log_->add(std::move(r));
}

DetectVerdict EvaluatorSession::detect(std::string_view text, const ItemKey& key, int trial_index, const ModulatedItem* context) {
  if (trim(text).empty()) return DetectVerdict::kNo;
  Query q;
  q.task = QueryTask::kDetection;
  q.key = key;
  q.trial_index = trial_index;
  q.text = std::string(text);
  q.prompt = render(config_.templates.detection, {{"text", q.text}});
  if (context) q.modulated = *context;
  std::string raw;
  bool all_hits = true;
  for (int attempt = 0; attempt < 2; ++attempt) {
    q.attempt = attempt;
    bool hit = false;
    raw = ask(q, hit);
    all_hits = all_hits && hit;
    if (auto v = parse_yes_no(raw)) {
      record(q, attempt + 1, raw, {*v ? "yes" : "no"}, all_hits);
      return *v ? DetectVerdict::kYes : DetectVerdict::kNo;
    }
  }
  record(q, 2, raw, {"abstain"}, all_hits);
  return DetectVerdict::kAbstain;
}

bool EvaluatorSession::majority_detect(std::string_view text, const ItemKey& key, const ModulatedItem* context,
                                       std::vector<DetectVerdict>* trials) {
  if (config_.trials_per_query % 2 == 0)
    throw Error(ErrorKind::kConfig, "trials_per_query must be odd for majority voting");
  int yes = 0;
  for (int t = 0; t < config_.trials_per_query; ++t) {
    auto v = detect(text, key, t, context);
    if (trials) trials->push_back(v);
    if (v == DetectVerdict::kYes) ++yes;
  }
  return 2 * yes > config_.trials_per_query;
}

std::vector<std::string> EvaluatorSession::reconstruct(const ModulatedItem& item, int trial_index) {
  if (item.substitutions.empty()) throw Error(ErrorKind::kState, "reconstruct needs at least one substitution");
  Query q;
  q.task = QueryTask::kReconstruction;
  q.key = ItemKey::of(item);
  q.trial_index = trial_index;
  q.text = item.text;
  q.modulated = item;
  q.prompt = render(config_.templates.reconstruction,
                    {{"text", item.text}, {"tokens", render_token_list(item)}, {"count", std::to_string(item.substitutions.size())}});
  bool hit = false;
  auto raw = ask(q, hit);
  auto words = parse_numbered_answers(raw, item.substitutions.size());
  record(q, 1, raw, words, hit);
  return words;
}

std::vector<std::string> EvaluatorSession::elicit_importance(const BaseItem& item, int trial_index) {
  Query q;
  q.task = QueryTask::kImportance;
  q.key = ItemKey::base(item.id);
  q.trial_index = trial_index;
  q.text = item.text;
  q.prompt = render(config_.templates.importance, {{"text", item.text}, {"count", std::to_string(kRankedWords)}});
  bool hit = false;
  auto raw = ask(q, hit);
  auto words = parse_word_list(raw);
  record(q, 1, raw, words, hit);
  return words;
}

}  // namespace mumkit
