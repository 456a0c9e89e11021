#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "mumkit/evaluator.hpp"
#include "mumkit/lexicon.hpp"

namespace mumkit {

/// Uniform draw in [0, 1) deciding whether a substitution is seen through.
double recognition_draw(std::uint64_t noise_seed, std::string_view task, Strategy s, const std::string& base_id,
                        std::size_t token_index);

/// Deterministic offline evaluator.
///
/// Detection: a trigger word outside the substituted spans flags the text;
/// each substituted trigger is recognized with probability
/// familiarity[strategy]. Importance: the sentence's trigger words ordered by
/// weight. Reconstruction: each replacement is inverted through the lexicon
/// with probability familiarity[strategy], otherwise left blank.
///
/// Draws are keyed by (noise seed, task, strategy, base id, token index) and
/// never by level or trial, so outcomes nest across levels and repeat across
/// trials.
class MockEvaluator : public Backend {
 public:
  MockEvaluator(MockProfile profile, std::shared_ptr<const Lexicon> lexicon);

  std::string complete(const Query& query) override;
  bool offline() const override { return true; }

  /// Whether the keyword/recognition rule flags the text.
  bool detects(const std::string& text, const ModulatedItem* context) const;
  std::vector<std::string> important_words(const std::string& text) const;
  /// Reconstructed originals aligned with item.substitutions.
  std::vector<std::string> reconstruct(const ModulatedItem& item) const;

  /// Best inverse of `replacement` under `s`: a candidate in the known
  /// vocabulary if one exists, otherwise the first candidate, otherwise "".
  std::string invert(Strategy s, const std::string& replacement) const;

  bool recognizes(const std::string& task, const ModulatedItem& item, const Substitution& sub) const;

  const MockProfile& profile() const { return profile_; }

 private:
  MockProfile profile_;
  std::shared_ptr<const Lexicon> lexicon_;
  std::set<std::string> vocabulary_;
  mutable std::mutex memo_mu_;
  mutable std::map<std::pair<Strategy, std::string>, std::string> inverse_memo_;
};

}  // namespace mumkit
