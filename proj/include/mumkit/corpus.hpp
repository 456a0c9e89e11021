#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mumkit/text.hpp"

namespace mumkit {

class EvaluatorSession;

enum class Label { kViolating, kBenign };
enum class Validation { kUnchecked, kPassed, kFailed };

std::string_view key(Label l);
std::string_view key(Validation v);

inline constexpr std::size_t kRankedWords = 6;
inline constexpr std::size_t kMinSentenceTokens = 10;
inline constexpr std::size_t kMaxSentenceTokens = 15;

struct RankedWord {
  std::size_t token_index = 0;
  std::string surface;

  friend bool operator==(const RankedWord&, const RankedWord&) = default;
};

struct BaseItem {
  std::string id;
  std::string text;
  Label label = Label::kViolating;
  std::string topic;
  std::vector<RankedWord> important_words;  // most important first
  Validation validated = Validation::kUnchecked;
  bool ranking_filled = false;  // ranking had to be padded from content words
  std::vector<std::string> warnings;

  /// Tokenization of `text`; computed on load and kept in sync by set_text().
  std::vector<Token> tokens;

  void set_text(std::string t);
  bool ranked() const { return important_words.size() >= std::min(kRankedWords, tokens.size()) && !tokens.empty(); }
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<BaseItem> items);

  const std::vector<BaseItem>& items() const { return items_; }
  std::vector<BaseItem>& mutable_items() { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  const BaseItem* find(const std::string& id) const;
  BaseItem* find(const std::string& id);

  std::string tokenizer_id() const { return std::string(kTokenizerId); }

  /// Content hash over ids, texts, labels, topics and rankings.
  std::string version() const;
  /// Hash of the corpus file contents as loaded (before rankings); keys the
  /// rankings sidecar.
  const std::string& source_version() const { return source_version_; }
  void set_source_version(std::string v) { source_version_ = std::move(v); }

  /// Subset containing only items that passed baseline validation.
  Corpus passed_only() const;

 private:
  std::vector<BaseItem> items_;
  std::string source_version_;
};

/// Parses line-delimited JSON records {id, text, label, topic}. Blank lines
/// are skipped. Malformed records raise a parse error with the line number;
/// duplicate ids raise an invariant error. Token-count violations are kept as
/// warnings on the item.
Corpus parse_corpus(std::string_view content, const std::string& source_name = "<corpus>");
Corpus load_corpus(const std::string& path);
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const std::string& path, const Corpus& corpus);

/// Resolves surface words to token positions: each word binds to the first
/// not-yet-used occurrence (case-folded) left to right. Unknown words are
/// dropped.
std::vector<std::size_t> resolve_positions(const std::vector<Token>& tokens, const std::vector<std::string>& words);

struct RankingResult {
  std::vector<RankedWord> words;
  bool filled = false;
};

/// Combines importance trials. Tokens are ordered by vote count, then by mean
/// rank inside the trial responses, then by sentence position. Out-of-range
/// positions are discarded. Short rankings are padded with content words left
/// to right (then any remaining tokens) and flagged.
RankingResult aggregate_importance(const std::vector<Token>& tokens,
                                   const std::vector<std::vector<std::size_t>>& trials,
                                   std::size_t want = kRankedWords);

bool is_stopword(std::string_view word);

struct ValidationVerdict {
  bool passed = false;
  std::vector<int> trial_verdicts;  // 1 violating, 0 not violating, -1 abstain
};

/// Three identical detection trials at temperature 0; passes on a majority of
/// "violating". Updates item.validated. Transport failures leave the item
/// unchecked and rethrow.
ValidationVerdict validate_baseline(BaseItem& item, EvaluatorSession& evaluator);

/// Three importance-elicitation trials aggregated by aggregate_importance().
void rank_importance(BaseItem& item, EvaluatorSession& evaluator);

/// Rankings sidecar: line-delimited records keyed by
/// (corpus source version, item id, evaluator id).
void save_rankings(const std::string& path, const Corpus& corpus, const std::string& evaluator_id);
/// Applies stored rankings and validation verdicts that match the corpus
/// source version and evaluator. Returns how many items were updated.
std::size_t load_rankings(const std::string& path, Corpus& corpus, const std::string& evaluator_id);

}  // namespace mumkit
