#include "mumkit/mock_evaluator.hpp"

#include <algorithm>

namespace mumkit {

double recognition_draw(std::uint64_t noise_seed, std::string_view task, Strategy s, const std::string& base_id,
                        std::size_t token_index) {
  return unit_draw(hash_key(noise_seed, {std::string(task), std::string(key(s)), base_id, std::to_string(token_index)}));
}

MockEvaluator::MockEvaluator(MockProfile profile, std::shared_ptr<const Lexicon> lexicon)
    : profile_(std::move(profile)), lexicon_(std::move(lexicon)) {
  if (!lexicon_) lexicon_ = std::make_shared<Lexicon>(Lexicon::default_rules());
  vocabulary_ = lexicon_->originals();
  for (const auto& [word, weight] : profile_.triggers) vocabulary_.insert(word);
  for (const auto& w : profile_.vocabulary) vocabulary_.insert(casefold(w));
}

bool MockEvaluator::recognizes(const std::string& task, const ModulatedItem& item, const Substitution& sub) const {
  double f = profile_.familiarity_for(item.strategy);
  if (f <= 0.0) return false;
  if (f >= 1.0) return true;
  return recognition_draw(profile_.noise_seed, task, item.strategy, item.base_id, sub.token_index) < f;
}

bool MockEvaluator::detects(const std::string& text, const ModulatedItem* context) const {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  if (context && context->text == text)
    for (const auto& s : context->substitutions) spans.emplace_back(s.offset, s.offset + s.replacement.size());
  for (const auto& tok : tokenize(text)) {
    bool substituted = std::any_of(spans.begin(), spans.end(), [&](const auto& sp) { return tok.begin < sp.second && tok.end > sp.first; });
    if (!substituted && profile_.triggers.count(casefold(tok.surface))) return true;
  }
  if (context && context->text == text) {
    for (const auto& s : context->substitutions)
      if (profile_.triggers.count(casefold(s.original)) && recognizes("detect", *context, s)) return true;
  }
  return false;
}

std::vector<std::string> MockEvaluator::important_words(const std::string& text) const {
  struct Hit {
    double weight;
    std::size_t pos;
    std::string surface;
  };
  std::vector<Hit> hits;
  std::set<std::string> seen;
  auto tokens = tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto folded = casefold(tokens[i].surface);
    auto it = profile_.triggers.find(folded);
    if (it == profile_.triggers.end() || !seen.insert(folded).second) continue;
    hits.push_back({it->second, i, tokens[i].surface});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return a.weight != b.weight ? a.weight > b.weight : a.pos < b.pos;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < hits.size() && i < kRankedWords; ++i) out.push_back(hits[i].surface);
  return out;
}

std::string MockEvaluator::invert(Strategy s, const std::string& replacement) const {
  auto memo_key = std::make_pair(s, casefold(replacement));
  {
    std::lock_guard lock(memo_mu_);
    if (auto it = inverse_memo_.find(memo_key); it != inverse_memo_.end()) return it->second;
  }
  auto candidates = lexicon_->invert(s, replacement);
  std::string best;
  for (const auto& c : candidates) {
    if (vocabulary_.count(c)) {
      best = c;
      break;
    }
  }
  if (best.empty() && !candidates.empty()) best = candidates.front();
  std::lock_guard lock(memo_mu_);
  inverse_memo_.emplace(memo_key, best);
  return best;
}

std::vector<std::string> MockEvaluator::reconstruct(const ModulatedItem& item) const {
  std::vector<std::string> out;
  for (const auto& s : item.substitutions) out.push_back(recognizes("reconstruct", item, s) ? invert(item.strategy, s.replacement) : "");
  return out;
}

std::string MockEvaluator::complete(const Query& q) {
  switch (q.task) {
    case QueryTask::kDetection:
      return detects(q.text, q.modulated ? &*q.modulated : nullptr) ? "yes" : "no";
    case QueryTask::kImportance: {
      std::string out;
      for (const auto& w : important_words(q.text)) out += (out.empty() ? "" : ", ") + w;
      return out;
    }
    case QueryTask::kReconstruction: {
      if (!q.modulated) return "";
      std::string out;
      auto words = reconstruct(*q.modulated);
      for (std::size_t i = 0; i < words.size(); ++i) out += std::to_string(i + 1) + ". " + words[i] + "\n";
      return out;
    }
  }
  return "";
}

}  // namespace mumkit
