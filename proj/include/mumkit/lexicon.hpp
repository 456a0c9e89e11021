#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mumkit/strategy.hpp"
#include "mumkit/text.hpp"

namespace mumkit {

/// One grapheme rewrite. `word_initial`/`word_final` anchor the pattern
/// (written "^ab" / "ab$" in lexicon files).
struct RewriteRule {
  std::string pattern;
  std::string replacement;
  bool word_initial = false;
  bool word_final = false;
};

enum class RuleMode {
  kAll,         // every match site is rewritten
  kSampleHalf,  // a seeded choice of up to ceil(len/2) match sites
};

struct DictEntry {
  std::vector<std::string> replacements;  // alternatives, picked by seed
  bool audited = false;
};

struct StrategySection {
  bool present = false;
  std::map<std::string, DictEntry> dictionary;  // case-folded original -> entry
  std::vector<RewriteRule> rules;
  RuleMode mode = RuleMode::kAll;
  bool rule_fallback = false;
};

/// Applies rules left to right; at each position the first matching rule in
/// list order wins. In kSampleHalf mode only a seeded subset of match sites is
/// rewritten. Input is case-folded; the output is lower case.
std::string apply_rules(const std::vector<RewriteRule>& rules, RuleMode mode, std::string_view word, DrawStream& draws);

/// Per-strategy substitution tables.
///
/// File format (UTF-8, '#' starts a comment line):
///
///     [code_word]
///     rain = confetti | sprinkles [audited]
///     [unknown_spelling.rules]
///     mode = sample-half
///     a -> @
///     [phonetic.rules]
///     d$ -> t
///     [fallback]
///     new_word_spelling = true
///
/// A strategy counts as covered when its dictionary section, its rule section,
/// or both appear. Rule fallback defaults to on for unknown_spelling and
/// phonetic and off for the rest.
class Lexicon {
 public:
  static Lexicon parse(std::string_view content, const std::string& source_name = "<lexicon>");
  static Lexicon load(const std::string& path);
  /// Leet and phonetic rule sets only; dictionary sections empty.
  static Lexicon default_rules();

  std::string serialize() const;
  void save(const std::string& path) const;
  /// Hash of the serialized content without the header line.
  std::string version() const;

  const StrategySection& section(Strategy s) const { return sections_[index_of(s)]; }
  StrategySection& mutable_section(Strategy s) { return sections_[index_of(s)]; }
  bool covers(Strategy s) const { return section(s).present; }
  std::vector<Strategy> missing_sections() const;

  /// Replacement for `word`, or nullopt when neither the dictionary nor the
  /// rule fallback produces a different surface form. Deterministic in
  /// (word, lexicon, draw_key).
  std::optional<std::string> substitute(Strategy s, std::string_view word, std::uint64_t draw_key) const;

  /// Candidate originals for a replacement: dictionary inverses first, then
  /// inverse rule rewrites (fully reversed candidate first).
  std::vector<std::string> invert(Strategy s, std::string_view replacement) const;

  /// Every case-folded dictionary original across all sections.
  std::set<std::string> originals() const;

  /// Replacements shared by more than one original within a section; these
  /// make dictionary inversion ambiguous.
  std::vector<std::string> ambiguous_replacements(Strategy s) const;

 private:
  std::array<StrategySection, 7> sections_{};
};

}  // namespace mumkit
