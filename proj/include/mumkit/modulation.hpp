#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mumkit/corpus.hpp"
#include "mumkit/error.hpp"
#include "mumkit/lexicon.hpp"
#include "mumkit/strategy.hpp"

namespace mumkit {

enum class MeaningAudit { kUnaudited, kPreserved, kBroken };

std::string_view key(MeaningAudit a);

struct Substitution {
  std::size_t token_index = 0;  // position in the base tokenization
  std::string original;
  std::string replacement;
  std::size_t offset = 0;  // byte offset of `replacement` in the modulated text

  friend bool operator==(const Substitution&, const Substitution&) = default;
};

struct ModulatedItem {
  std::string base_id;
  Strategy strategy = Strategy::kCodeWord;
  int level = 1;
  std::string text;
  std::vector<Substitution> substitutions;  // importance order
  std::uint64_t seed = 0;
  MeaningAudit meaning_audit = MeaningAudit::kUnaudited;

  friend bool operator==(const ModulatedItem&, const ModulatedItem&) = default;
};

/// Raised when dictionary lookups (and any rule fallback) leave words
/// unmodulated. Lists every uncovered word so lexicons can be extended.
class CoverageError : public Error {
 public:
  CoverageError(Strategy s, std::vector<std::string> words);
  Strategy strategy() const { return strategy_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  Strategy strategy_;
  std::vector<std::string> words_;
};

/// Replaces the top-`level` important words of `item` (most important first).
/// The replacement chosen for a token depends only on (lexicon, seed, item id,
/// strategy, token index), never on the level, so substitution sets nest.
ModulatedItem modulate(const BaseItem& item, Strategy strategy, int level, const Lexicon& lexicon, std::uint64_t seed);

/// Undoes every substitution using the recorded offsets. Throws an invariant
/// error if the modulated text does not contain a replacement where recorded.
std::string restore_text(const ModulatedItem& item);

struct ModulatedDataset {
  std::vector<BaseItem> bases;       // validated, ranked base items (level 0)
  std::vector<ModulatedItem> items;  // sorted by (base id, strategy, level)
  std::string corpus_version;
  std::string lexicon_version;
  std::uint64_t seed = 0;

  /// Hash over the identity of the dataset (versions, seed, tokenizer).
  std::string manifest_hash() const;
  const ModulatedItem* find(const std::string& base_id, Strategy s, int level) const;
  const BaseItem* base(const std::string& id) const;
};

/// |items| x 7 strategies x 5 levels. Every item must be validated as passed
/// and ranked. All modulate failures are collected and reported together.
ModulatedDataset build_dataset(const Corpus& corpus, const Lexicon& lexicon, std::uint64_t seed);

std::string serialize_dataset(const ModulatedDataset& dataset);
ModulatedDataset parse_dataset(std::string_view content, const std::string& source_name = "<dataset>");
void save_dataset(const std::string& path, const ModulatedDataset& dataset);
ModulatedDataset load_dataset(const std::string& path);

/// Audit file: CSV with header "base_id,strategy,level,verdict" where verdict
/// is "preserved" or "broken". Unknown items raise an error. Returns the
/// number of entries applied.
std::size_t audit_meaning(ModulatedDataset& dataset, const std::string& audit_path);
std::size_t apply_audit(ModulatedDataset& dataset, std::string_view audit_csv, const std::string& source_name = "<audit>");

}  // namespace mumkit
