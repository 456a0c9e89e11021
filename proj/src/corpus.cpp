#include "mumkit/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mumkit/error.hpp"
#include "mumkit/evaluator.hpp"

namespace mumkit {

using json = nlohmann::json;

std::string_view key(Label l) { return l == Label::kViolating ? "violating" : "benign"; }

std::string_view key(Validation v) {
  switch (v) {
    case Validation::kUnchecked: return "unchecked";
    case Validation::kPassed: return "passed";
    case Validation::kFailed: return "failed";
  }
  return "";
}

void BaseItem::set_text(std::string t) {
  text = std::move(t);
  tokens = tokenize(text);
}

Corpus::Corpus(std::vector<BaseItem> items) : items_(std::move(items)) {}

const BaseItem* Corpus::find(const std::string& id) const {
  for (const auto& it : items_)
    if (it.id == id) return &it;
  return nullptr;
}

BaseItem* Corpus::find(const std::string& id) {
  for (auto& it : items_)
    if (it.id == id) return &it;
  return nullptr;
}

std::string Corpus::version() const {
  json j = json::array();
  for (const auto& it : items_) {
    json words = json::array();
    for (const auto& w : it.important_words) words.push_back(json::array({w.token_index, w.surface}));
    j.push_back({{"id", it.id}, {"text", it.text}, {"label", std::string(key(it.label))}, {"topic", it.topic}, {"ranking", words}});
  }
  return sha256_hex(std::string(kTokenizerId) + "\n" + j.dump());
}

Corpus Corpus::passed_only() const {
  std::vector<BaseItem> kept;
  for (const auto& it : items_)
    if (it.validated == Validation::kPassed) kept.push_back(it);
  Corpus c(std::move(kept));
  c.source_version_ = source_version_;
  return c;
}

namespace {

Label parse_label(const json& v, const std::string& where) {
  if (v.is_boolean()) return v.get<bool>() ? Label::kViolating : Label::kBenign;
  if (v.is_number_integer()) return v.get<int>() != 0 ? Label::kViolating : Label::kBenign;
  if (v.is_string()) {
    auto s = casefold(v.get<std::string>());
    if (s == "violating" || s == "misinformation" || s == "true" || s == "1") return Label::kViolating;
    if (s == "benign" || s == "false" || s == "0") return Label::kBenign;
  }
  throw Error(ErrorKind::kParse, where + ": label must be violating/benign");
}

}  // namespace

Corpus parse_corpus(std::string_view content, const std::string& source_name) {
  std::vector<BaseItem> items;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (const auto& raw : split(content, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    auto where = source_name + ":" + std::to_string(line_no);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorKind::kParse, where + ": malformed record");
    BaseItem item;
    try {
      item.id = j.at("id").get<std::string>();
      item.set_text(j.at("text").get<std::string>());
      item.label = parse_label(j.at("label"), where);
      item.topic = j.value("topic", "");
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, where + ": " + e.what());
    }
    if (item.id.empty()) throw Error(ErrorKind::kParse, where + ": empty id");
    if (!ids.insert(item.id).second) throw Error(ErrorKind::kInvariant, where + ": duplicate id '" + item.id + "'");
    auto n = item.tokens.size();
    if (n < kMinSentenceTokens || n > kMaxSentenceTokens)
      item.warnings.push_back("sentence has " + std::to_string(n) + " tokens (expected 10-15)");
    items.push_back(std::move(item));
  }
  Corpus corpus(std::move(items));
  corpus.set_source_version(corpus.version());
  return corpus;
}

Corpus load_corpus(const std::string& path) { return parse_corpus(read_file(path), path); }

std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& it : corpus.items()) {
    json j = {{"id", it.id}, {"text", it.text}, {"label", std::string(key(it.label))}, {"topic", it.topic}};
    out << j.dump() << "\n";
  }
  return out.str();
}

void save_corpus(const std::string& path, const Corpus& corpus) { write_file_atomic(path, serialize_corpus(corpus)); }

bool is_stopword(std::string_view word) {
  static const std::set<std::string, std::less<>> kStop = {
      "a",    "an",   "the",  "and",  "or",   "but",  "if",    "of",   "to",   "in",   "on",    "at",   "by",   "for",
      "with", "from", "as",   "is",   "are",  "was",  "were",  "be",   "been", "it",   "its",   "this", "that", "these",
      "those", "you", "your", "we",   "our",  "they", "their", "he",   "she",  "his",  "her",   "i",    "me",   "my",
      "will", "can",  "do",   "does", "did",  "not",  "no",    "so",   "than", "then", "there", "when", "which", "who",
      "what", "all",  "any",  "into", "out",  "up",   "about", "has",  "have", "had",  "just",  "also", "every", "more"};
  return kStop.count(casefold(word)) > 0;
}

std::vector<std::size_t> resolve_positions(const std::vector<Token>& tokens, const std::vector<std::string>& words) {
  std::vector<bool> used(tokens.size(), false);
  std::vector<std::size_t> out;
  for (const auto& w : words) {
    auto fw = casefold(w);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!used[i] && casefold(tokens[i].surface) == fw) {
        used[i] = true;
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

RankingResult aggregate_importance(const std::vector<Token>& tokens, const std::vector<std::vector<std::size_t>>& trials,
                                   std::size_t want) {
  struct Tally {
    int votes = 0;
    double rank_sum = 0.0;
  };
  std::map<std::size_t, Tally> tally;
  for (const auto& trial : trials) {
    std::set<std::size_t> seen;
    std::size_t rank = 0;
    for (auto pos : trial) {
      if (pos >= tokens.size() || !seen.insert(pos).second) continue;
      auto& t = tally[pos];
      ++t.votes;
      t.rank_sum += static_cast<double>(rank++);
    }
  }
  std::vector<std::size_t> order;
  for (const auto& [pos, t] : tally) order.push_back(pos);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ta = tally[a];
    const auto& tb = tally[b];
    if (ta.votes != tb.votes) return ta.votes > tb.votes;
    double ma = ta.rank_sum / ta.votes, mb = tb.rank_sum / tb.votes;
    if (ma != mb) return ma < mb;
    return a < b;
  });

  RankingResult result;
  std::set<std::size_t> taken;
  for (auto pos : order) {
    if (result.words.size() >= want) break;
    result.words.push_back({pos, tokens[pos].surface});
    taken.insert(pos);
  }
  if (result.words.size() < want) {
    result.filled = true;
    for (int pass = 0; pass < 2 && result.words.size() < want; ++pass) {
      for (std::size_t i = 0; i < tokens.size() && result.words.size() < want; ++i) {
        if (taken.count(i)) continue;
        if (pass == 0 && is_stopword(tokens[i].surface)) continue;
        result.words.push_back({i, tokens[i].surface});
        taken.insert(i);
      }
    }
  }
  return result;
}

ValidationVerdict validate_baseline(BaseItem& item, EvaluatorSession& evaluator) {
  ValidationVerdict verdict;
  std::vector<DetectVerdict> trials;
  bool majority = false;
  try {
    majority = evaluator.majority_detect(item.text, ItemKey::base(item.id), nullptr, &trials);
  } catch (...) {
    item.validated = Validation::kUnchecked;
    throw;
  }
  for (auto t : trials) verdict.trial_verdicts.push_back(t == DetectVerdict::kYes ? 1 : t == DetectVerdict::kNo ? 0 : -1);
  verdict.passed = majority;
  item.validated = majority ? Validation::kPassed : Validation::kFailed;
  return verdict;
}

void rank_importance(BaseItem& item, EvaluatorSession& evaluator) {
  if (item.validated != Validation::kPassed)
    throw Error(ErrorKind::kState, "item '" + item.id + "' must pass baseline validation before ranking");
  std::vector<std::vector<std::size_t>> trials;
  for (int t = 0; t < 3; ++t) trials.push_back(resolve_positions(item.tokens, evaluator.elicit_importance(item, t)));
  auto result = aggregate_importance(item.tokens, trials);
  item.important_words = std::move(result.words);
  item.ranking_filled = result.filled;
  if (result.filled) item.warnings.push_back("importance ranking padded from content words");
}

void save_rankings(const std::string& path, const Corpus& corpus, const std::string& evaluator_id) {
  std::ostringstream out;
  out << json{{"kind", "header"}, {"corpus_version", corpus.source_version()}, {"evaluator_id", evaluator_id},
              {"tokenizer", std::string(kTokenizerId)}}
             .dump()
      << "\n";
  for (const auto& it : corpus.items()) {
    json words = json::array();
    for (const auto& w : it.important_words) words.push_back(json::array({w.token_index, w.surface}));
    out << json{{"item_id", it.id},
                {"corpus_version", corpus.source_version()},
                {"evaluator_id", evaluator_id},
                {"validated", std::string(key(it.validated))},
                {"important_words", words},
                {"ranking_filled", it.ranking_filled}}
               .dump()
        << "\n";
  }
  write_file_atomic(path, out.str());
}

std::size_t load_rankings(const std::string& path, Corpus& corpus, const std::string& evaluator_id) {
  std::size_t updated = 0;
  std::size_t line_no = 0;
  for (const auto& raw : split(read_file(path), '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": malformed record");
    if (j.value("kind", "") == "header") continue;
    if (j.value("corpus_version", "") != corpus.source_version() || j.value("evaluator_id", "") != evaluator_id) continue;
    auto* item = corpus.find(j.value("item_id", ""));
    if (!item) continue;
    auto v = j.value("validated", "unchecked");
    item->validated = v == "passed" ? Validation::kPassed : v == "failed" ? Validation::kFailed : Validation::kUnchecked;
    item->important_words.clear();
    for (const auto& w : j.at("important_words")) {
      auto idx = w.at(0).get<std::size_t>();
      if (idx >= item->tokens.size())
        throw Error(ErrorKind::kInvariant, path + ": ranking for '" + item->id + "' names token " + std::to_string(idx) + " out of range");
      item->important_words.push_back({idx, w.at(1).get<std::string>()});
    }
    item->ranking_filled = j.value("ranking_filled", false);
    ++updated;
  }
  return updated;
}

}  // namespace mumkit
