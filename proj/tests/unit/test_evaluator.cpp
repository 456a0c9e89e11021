#include <doctest.h>

#include <filesystem>
#include <functional>

#include "mumkit/cache.hpp"
#include "mumkit/error.hpp"
#include "mumkit/evaluator.hpp"
#include "mumkit/mock_evaluator.hpp"
#include "mumkit/prompts.hpp"
#include "mumkit/similarity.hpp"
#include "test_support.hpp"

using namespace mumkit;

namespace {

class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::function<std::string(const Query&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const Query& q) override { return fn_(q); }
  bool offline() const override { return true; }

 private:
  std::function<std::string(const Query&)> fn_;
};

EvaluatorSession scripted(std::function<std::string(const Query&)> fn, std::shared_ptr<TrialLog> log = nullptr) {
  EvaluatorConfig cfg;
  cfg.evaluator_id = "scripted";
  return EvaluatorSession(cfg, std::make_unique<ScriptedBackend>(std::move(fn)), std::make_shared<ResponseCache>(), std::move(log));
}

}  // namespace

TEST_CASE("yes/no parsing is strict on the first word") {
  CHECK(parse_yes_no("Yes") == true);
  CHECK(parse_yes_no("  no.") == false);
  CHECK(parse_yes_no("**YES**, it does") == true);
  CHECK(parse_yes_no("False") == false);
  CHECK_FALSE(parse_yes_no("Maybe yes").has_value());
  CHECK_FALSE(parse_yes_no("").has_value());
  CHECK_FALSE(parse_yes_no("yesterday").has_value());
}

TEST_CASE("word list and numbered answer parsing") {
  CHECK(parse_word_list("1. rain, \"floods\"\n- cause;  heavy.") == std::vector<std::string>{"rain", "floods", "cause", "heavy"});
  CHECK(parse_numbered_answers("2. flood\n1) rain\n", 3) == std::vector<std::string>{"rain", "flood", ""});
  CHECK(parse_numbered_answers("rain\nflood", 2) == std::vector<std::string>{"rain", "flood"});
  CHECK(parse_numbered_answers("1: rain\n7. extra\nsnow", 2) == std::vector<std::string>{"rain", "snow"});
}

TEST_CASE("template rendering") {
  CHECK(render("a {text} b {{x}}", {{"text", "T"}}) == "a T b {x}");
  CHECK_THROWS_AS(render("{missing}", {}), Error);
  CHECK(placeholders("{text} and {count}") == std::vector<std::string>{"text", "count"});
  auto d = PromptTemplates::defaults();
  CHECK(placeholders(d.detection) == std::vector<std::string>{"text"});
  auto loaded = PromptTemplates::load_dir(testsupport::source_path("data/prompts"));
  CHECK(loaded.hash() == d.hash());
}

TEST_CASE("cache persists entries on disk and keys separate every input") {
  testsupport::TempDir dir;
  auto k = ResponseCache::make_key("m", "p", 0.0, 0);
  CHECK(k != ResponseCache::make_key("m", "p", 0.0, 1));
  CHECK(k != ResponseCache::make_key("m2", "p", 0.0, 0));
  CHECK(k != ResponseCache::make_key("m", "p", 0.5, 0));
  CHECK(k != ResponseCache::make_key("m", "p", 0.0, 0, 1));
  CHECK(k != ResponseCache::make_key("m", "p", 0.0, 0, 0, "ctx"));
  {
    ResponseCache cache(dir.str());
    CHECK_FALSE(cache.get(k).has_value());
    cache.put(k, "m", 0, "yes");
  }
  CHECK(std::filesystem::exists(dir / (k.substr(0, 2) + "/" + k + ".json")));
  ResponseCache again(dir.str());
  CHECK(again.get(k) == std::optional<std::string>("yes"));
  CHECK(again.hits() == 1);
}

TEST_CASE("trial log sorts records and rejects duplicates") {
  TrialLog log;
  TrialRecord a;
  a.key = ItemKey::base("b");
  a.evaluator_id = "m";
  a.trial_index = 1;
  TrialRecord b = a;
  b.key = ItemKey::base("a");
  log.add(a);
  log.add(b);
  CHECK_THROWS_AS(log.add(a), Error);
  auto recs = log.records();
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].key.base_id == "a");
  auto jsonl = log.to_jsonl("hash");
  CHECK(jsonl.find("hash") != std::string::npos);
}

TEST_CASE("majority detection counts abstains as not violating") {
  SUBCASE("yes yes no") {
    std::vector<std::string> r = {"yes", "yes", "no"};
    auto s = scripted([&](const Query& q) { return r[static_cast<std::size_t>(q.trial_index)]; });
    CHECK(s.majority_detect("text", ItemKey::base("x")));
  }
  SUBCASE("abstain yes no") {
    std::vector<std::string> r = {"perhaps", "yes", "no"};
    auto log = std::make_shared<TrialLog>();
    auto s = scripted([&](const Query& q) { return r[static_cast<std::size_t>(q.trial_index)]; }, log);
    std::vector<DetectVerdict> trials;
    CHECK_FALSE(s.majority_detect("text", ItemKey::base("x"), nullptr, &trials));
    CHECK(trials == std::vector<DetectVerdict>{DetectVerdict::kAbstain, DetectVerdict::kYes, DetectVerdict::kNo});
    auto recs = log->records();
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].attempts == 2);
    CHECK(recs[0].parsed == std::vector<std::string>{"abstain"});
  }
  SUBCASE("unparseable then valid on retry") {
    auto s = scripted([](const Query& q) { return q.attempt == 0 ? "hmm" : "yes"; });
    CHECK(s.detect("text", ItemKey::base("x")) == DetectVerdict::kYes);
  }
  SUBCASE("empty text is not violating without a query") {
    auto s = scripted([](const Query&) -> std::string { throw Error(ErrorKind::kTransport, "no call expected"); });
    CHECK(s.detect("   ") == DetectVerdict::kNo);
  }
  SUBCASE("order of trials does not matter") {
    std::vector<std::vector<std::string>> orders = {{"yes", "no", "yes"}, {"no", "yes", "yes"}, {"yes", "yes", "no"}};
    for (const auto& r : orders) {
      auto s = scripted([&](const Query& q) { return r[static_cast<std::size_t>(q.trial_index)]; });
      CHECK(s.majority_detect("text", ItemKey::base("x")));
    }
  }
}

TEST_CASE("cached rerun gives identical verdicts with every trial a cache hit") {
  auto cache = std::make_shared<ResponseCache>();
  auto profile = testsupport::sample_profile(0.0);
  auto cfg = testsupport::mock_config("m", profile);
  const auto& ds = testsupport::sample_dataset();
  const auto& m = ds.items[10];
  auto first_log = std::make_shared<TrialLog>();
  EvaluatorSession first(cfg, std::make_unique<MockEvaluator>(profile, testsupport::sample_lexicon()), cache, first_log);
  bool v1 = first.majority_detect(m.text, ItemKey::of(m), &m);
  auto second_log = std::make_shared<TrialLog>();
  EvaluatorSession second(cfg, std::make_unique<MockEvaluator>(profile, testsupport::sample_lexicon()), cache, second_log);
  second.set_cache_only(true);
  CHECK(second.majority_detect(m.text, ItemKey::of(m), &m) == v1);
  CHECK(second.backend_calls() == 0);
  for (const auto& r : second_log->records()) CHECK(r.cache_hit);
  CHECK_THROWS_AS(second.majority_detect("uncached text", ItemKey::base("zz")), Error);
}

TEST_CASE("session enforces temperature 0 in experiment mode and odd trials") {
  auto profile = testsupport::sample_profile(0.0);
  auto cfg = testsupport::mock_config("m", profile);
  cfg.temperature = 0.7;
  CHECK_THROWS_AS(EvaluatorSession(cfg, std::make_unique<MockEvaluator>(profile, testsupport::sample_lexicon())), Error);
  cfg.temperature = 0.0;
  cfg.trials_per_query = 2;
  EvaluatorSession s(cfg, std::make_unique<MockEvaluator>(profile, testsupport::sample_lexicon()));
  CHECK_THROWS_AS(s.majority_detect("x"), Error);
}

TEST_CASE("mock detection: visible trigger flags; zero-familiarity code words hide it") {
  auto profile = testsupport::sample_profile(0.0);
  MockEvaluator mock(profile, testsupport::sample_lexicon());
  const auto& ds = testsupport::sample_dataset();
  for (const auto& base : ds.bases) CHECK(mock.detects(base.text, nullptr));
  std::size_t hidden_all = 0;
  for (const auto& m : ds.items) {
    if (m.strategy != Strategy::kCodeWord) continue;
    const auto* base = ds.base(m.base_id);
    std::size_t trigger_count = 0;
    for (const auto& t : base->tokens) trigger_count += profile.triggers.count(casefold(t.surface));
    bool all_replaced = trigger_count <= static_cast<std::size_t>(m.level);
    CHECK(mock.detects(m.text, &m) == !all_replaced);
    hidden_all += all_replaced;
  }
  CHECK(hidden_all > 0);
}

TEST_CASE("mock detection with full familiarity sees through every substitution") {
  MockEvaluator mock(testsupport::sample_profile(1.0), testsupport::sample_lexicon());
  for (const auto& m : testsupport::sample_dataset().items) CHECK(mock.detects(m.text, &m));
}

TEST_CASE("mock reconstruction at familiarity 1 returns the originals; at 0 blanks") {
  auto corpus = testsupport::ranked_sample_corpus();
  auto full = testsupport::sample_profile(1.0);
  testsupport::add_vocabulary(full, corpus);
  MockEvaluator knows(full, testsupport::sample_lexicon());
  MockEvaluator blank(testsupport::sample_profile(0.0), testsupport::sample_lexicon());
  for (const auto& m : testsupport::sample_dataset().items) {
    auto words = knows.reconstruct(m);
    REQUIRE(words.size() == m.substitutions.size());
    for (std::size_t i = 0; i < words.size(); ++i) CHECK(casefold(words[i]) == casefold(m.substitutions[i].original));
    CHECK(understanding_verdict(m, words));
    for (const auto& w : blank.reconstruct(m)) CHECK(w.empty());
  }
}

TEST_CASE("rule-aware mock inverts r@1n to rain") {
  auto profile = testsupport::sample_profile(1.0);
  auto lex = std::make_shared<const Lexicon>(Lexicon::default_rules());
  MockEvaluator mock(profile, lex);
  CHECK(mock.invert(Strategy::kUnknownSpelling, "r@1n") == "rain");
}

TEST_CASE("mock reconstruction through a session parses numbered replies") {
  auto corpus = testsupport::ranked_sample_corpus();
  auto full = testsupport::sample_profile(1.0);
  testsupport::add_vocabulary(full, corpus);
  auto session = testsupport::mock_session("m", full);
  const auto& m = *testsupport::sample_dataset().find("myth-04", Strategy::kCodeWord, 3);
  auto words = session->reconstruct(m);
  REQUIRE(words.size() == 3);
  CHECK(words[0] == "lightning");
}

TEST_CASE("mock recognition draws ignore level and trial") {
  const auto& ds = testsupport::sample_dataset();
  auto profile = testsupport::sample_profile(0.5, 77);
  MockEvaluator mock(profile, testsupport::sample_lexicon());
  for (const auto& m : ds.items) {
    if (m.level != 5) continue;
    for (int level = 1; level < 5; ++level) {
      const auto* lower = ds.find(m.base_id, m.strategy, level);
      for (std::size_t i = 0; i < lower->substitutions.size(); ++i)
        CHECK(mock.recognizes("reconstruct", *lower, lower->substitutions[i]) == mock.recognizes("reconstruct", m, m.substitutions[i]));
    }
  }
}

TEST_CASE("mock importance lists triggers by weight") {
  MockEvaluator mock(testsupport::sample_profile(0.0), testsupport::sample_lexicon());
  CHECK(mock.important_words("Bulls become furious at red capes because the color enrages their eyes.") ==
        std::vector<std::string>{"Bulls", "furious", "red", "capes", "color", "enrages"});
  CHECK(mock.important_words("nothing to see here").empty());
}

TEST_CASE("trigger file parsing") {
  auto t = parse_triggers("# c\nRain 2.5\nflood\n");
  CHECK(t.at("rain") == 2.5);
  CHECK(t.at("flood") == 1.0);
}
