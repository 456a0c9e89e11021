#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <unistd.h>

#include "mumkit/corpus.hpp"
#include "mumkit/evaluator.hpp"
#include "mumkit/lexicon.hpp"
#include "mumkit/mock_evaluator.hpp"
#include "mumkit/modulation.hpp"

namespace testsupport {

inline std::string source_path(const std::string& rel) { return std::string(MUMKIT_SOURCE_DIR) + "/" + rel; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mumkit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& rel) const { return (path_ / rel).string(); }

 private:
  std::filesystem::path path_;
};

inline std::shared_ptr<const mumkit::Lexicon> sample_lexicon() {
  static auto lex = std::make_shared<const mumkit::Lexicon>(mumkit::Lexicon::load(source_path("data/sample_lexicon.txt")));
  return lex;
}

inline mumkit::MockProfile sample_profile(double familiarity, std::uint64_t noise_seed = 0) {
  mumkit::MockProfile p;
  for (auto s : mumkit::kAllStrategies) p.familiarity[s] = familiarity;
  p.noise_seed = noise_seed;
  p.triggers = mumkit::load_triggers(source_path("data/sample_triggers.txt"));
  return p;
}

inline void add_vocabulary(mumkit::MockProfile& p, const mumkit::Corpus& corpus) {
  std::set<std::string> words(p.vocabulary.begin(), p.vocabulary.end());
  for (const auto& item : corpus.items())
    for (const auto& t : item.tokens) words.insert(mumkit::casefold(t.surface));
  p.vocabulary.assign(words.begin(), words.end());
}

inline mumkit::EvaluatorConfig mock_config(const std::string& id, mumkit::MockProfile profile) {
  mumkit::EvaluatorConfig c;
  c.evaluator_id = id;
  c.mock = std::move(profile);
  return c;
}

inline std::unique_ptr<mumkit::EvaluatorSession> mock_session(const std::string& id, const mumkit::MockProfile& profile,
                                                              std::shared_ptr<mumkit::TrialLog> log = nullptr) {
  auto cfg = mock_config(id, profile);
  return std::make_unique<mumkit::EvaluatorSession>(cfg, std::make_unique<mumkit::MockEvaluator>(profile, sample_lexicon()),
                                                    std::make_shared<mumkit::ResponseCache>(), std::move(log));
}

/// Sample corpus validated and ranked by a familiarity-0 mock.
inline mumkit::Corpus ranked_sample_corpus() {
  auto corpus = mumkit::load_corpus(source_path("data/sample_corpus.jsonl"));
  auto profile = sample_profile(0.0);
  add_vocabulary(profile, corpus);
  auto session = mock_session("baseline", profile);
  for (auto& item : corpus.mutable_items())
    if (mumkit::validate_baseline(item, *session).passed) mumkit::rank_importance(item, *session);
  return corpus;
}

inline const mumkit::ModulatedDataset& sample_dataset() {
  static const mumkit::ModulatedDataset ds = mumkit::build_dataset(ranked_sample_corpus(), *sample_lexicon(), 20240607);
  return ds;
}

}  // namespace testsupport
