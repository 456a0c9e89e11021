#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mumkit/config.hpp"
#include "mumkit/pipeline.hpp"
#include "mumkit/text.hpp"
#include "test_support.hpp"

using namespace mumkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json sample_json() { return json::parse(read_file(testsupport::source_path("data/sample_config.json"))); }

RunConfig config_from(json j, const std::string& output_dir) {
  j["output_dir"] = output_dir;
  j["sweep"]["seeds"] = 2;
  j["sweep"]["size"] = 40;
  j["population"]["size"] = 40;
  return parse_config(j.dump(), testsupport::source_path("data"), "test-config");
}

void expect_config_error(json j, const std::string& fragment) {
  try {
    parse_config(j.dump(), testsupport::source_path("data"), "cfg");
    FAIL("expected config error mentioning " << fragment);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

struct Quiet {
  std::ostringstream sink;
  CommandOptions options() {
    CommandOptions o;
    o.log = &sink;
    return o;
  }
};

std::map<std::string, std::string> snapshot(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), dir).string();
    out[rel] = read_file(e.path().string());
  }
  return out;
}

/// Blanks "timestamp" values so trial logs compare across runs.
std::string normalize_timestamps(std::string text) {
  const std::string key = "\"timestamp\":\"";
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + 1)) {
    auto start = pos + key.size();
    auto end = text.find('"', start);
    text.replace(start, end - start, "T");
  }
  return text;
}

}  // namespace

TEST_CASE("sample config parses") {
  auto c = load_config(testsupport::source_path("data/sample_config.json"));
  CHECK(c.evaluators.size() == 3);
  CHECK(c.baseline().evaluator_id == "mock-moderator");
  CHECK(c.detection_bounds.hi == 5.1);
  CHECK(c.understanding_bounds.hi == 6.0);
  CHECK(c.evaluator("mock-insider").mock.familiarity_for(Strategy::kCodeWord) == 0.95);
  CHECK(c.sweep.seeds.size() == 20);
  CHECK(c.population.for_strategy(Strategy::kCodeWord).spread == 0.0);
  CHECK(fs::path(c.corpus).is_absolute());
  CHECK_THROWS_AS(c.evaluator("nobody"), Error);
}

TEST_CASE("config errors") {
  auto j = sample_json();
  {
    auto k = j;
    k["surprise"] = 1;
    expect_config_error(k, "unknown field 'surprise'");
  }
  {
    auto k = j;
    k.erase("corpus");
    expect_config_error(k, "corpus");
  }
  {
    auto k = j;
    k["corpus"] = "no_such_file.jsonl";
    expect_config_error(k, "not found");
  }
  {
    auto k = j;
    k["trials_per_query"] = 2;
    expect_config_error(k, "odd");
  }
  {
    auto k = j;
    k["evaluators"][0]["temperature"] = 0.7;
    expect_config_error(k, "temperature 0");
  }
  {
    auto k = j;
    k["evaluators"][1]["id"] = "mock-moderator";
    expect_config_error(k, "duplicate evaluator id");
  }
  {
    auto k = j;
    k["tau"] = 1.0;
    expect_config_error(k, "tau");
  }
  {
    auto k = j;
    k["evaluators"][0]["familiarity"]["code_word"] = 1.5;
    expect_config_error(k, "[0, 1]");
  }
  {
    auto k = j;
    k["fit_bounds"]["detection"] = json::array({5, 1});
    expect_config_error(k, "lo < hi");
  }
  {
    auto k = j;
    k["baseline_evaluator"] = "ghost";
    expect_config_error(k, "ghost");
  }
  CHECK_THROWS_AS(parse_config("[1,2]", "."), Error);
}

TEST_CASE("overrides") {
  auto c = load_config(testsupport::source_path("data/sample_config.json"));
  apply_overrides(c, {42, 0.25, std::string("/tmp/elsewhere")});
  CHECK(c.seed == 42);
  CHECK(c.tau == 0.25);
  CHECK(c.output_dir == "/tmp/elsewhere");
  ConfigOverrides bad;
  bad.tau = 1.5;
  CHECK_THROWS_AS(apply_overrides(c, bad), Error);
}

TEST_CASE("full pipeline writes the documented layout and is reproducible") {
  testsupport::TempDir a, b;
  Quiet q;
  for (const auto* dir : {&a, &b}) {
    auto c = config_from(sample_json(), dir->str());
    CHECK(cmd_build(c, q.options()) == ExitCode::kOk);
    CHECK(cmd_run(c, q.options()) == ExitCode::kOk);
    CHECK(cmd_fit(c, q.options()) == ExitCode::kOk);
    CHECK(cmd_report(c, q.options()) == ExitCode::kOk);
    CHECK(cmd_sweep(c, q.options()) == ExitCode::kOk);
  }
  for (auto rel : {"rankings.jsonl", "dataset.jsonl", "build_trials.jsonl", "run_manifest.json", "rates.csv",
                   "runs/mock-moderator/rates_detection.csv", "runs/mock-insider/verdicts_understanding.csv",
                   "runs/mock-outsider/trials_detection.jsonl", "stats/results.json", "stats/fits.csv", "report/report.md",
                   "report/tables/cross_model.txt", "population/rates.csv", "population/sweep.csv"})
    CHECK_MESSAGE(fs::exists(a / rel), rel);
  CHECK_FALSE(fs::exists(a / ".lock"));

  auto sa = snapshot(a.str()), sb = snapshot(b.str());
  REQUIRE(sa.size() == sb.size());
  for (const auto& [rel, content] : sa) {
    REQUIRE(sb.count(rel));
    CHECK_MESSAGE(normalize_timestamps(content) == normalize_timestamps(sb[rel]), rel);
  }
  CHECK(load_dataset(a / "dataset.jsonl").items.size() == 700);
}

TEST_CASE("replay reproduces stored rates from the cache and detects tampering") {
  testsupport::TempDir dir;
  Quiet q;
  auto c = config_from(sample_json(), dir.str());
  cmd_build(c, q.options());
  cmd_run(c, q.options());
  cmd_fit(c, q.options());
  CHECK(cmd_replay(c, q.options()) == ExitCode::kOk);

  auto rates = dir / "runs/mock-insider/rates_detection.csv";
  auto text = read_file(rates);
  auto pos = text.find(",0.");
  REQUIRE(pos != std::string::npos);
  text[pos + 3] = text[pos + 3] == '9' ? '8' : '9';
  write_file_atomic(rates, text);
  try {
    cmd_replay(c, q.options());
    FAIL("tampered rates must fail replay");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvariant);
  }

  fs::remove_all(dir / "cache");
  try {
    cmd_replay(c, q.options());
    FAIL("replay without a cache must fail");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvariant);
  }
}

TEST_CASE("artifacts from another manifest are refused unless forced") {
  testsupport::TempDir dir;
  Quiet q;
  auto j = sample_json();
  auto c = config_from(j, dir.str());
  cmd_build(c, q.options());
  cmd_run(c, q.options());

  j["evaluators"][1]["familiarity"]["code_word"] = 0.3;
  auto changed = config_from(j, dir.str());
  auto o = q.options();
  o.evaluator = "mock-insider";
  CHECK(cmd_run(changed, o) == ExitCode::kOk);
  try {
    cmd_fit(changed, q.options());
    FAIL("stale rates must be refused");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvariant);
    CHECK(std::string(e.what()).find("--force") != std::string::npos);
  }
  auto forced = q.options();
  forced.force = true;
  CHECK(cmd_fit(changed, forced) == ExitCode::kOk);
  CHECK(q.sink.str().find("(forced)") != std::string::npos);
}

TEST_CASE("commands check their preconditions") {
  testsupport::TempDir dir;
  Quiet q;
  auto c = config_from(sample_json(), dir.str());
  auto expect_state = [&](auto&& fn) {
    try {
      fn();
      FAIL("expected a state error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kState);
    }
  };
  expect_state([&] { cmd_run(c, q.options()); });
  expect_state([&] { cmd_fit(c, q.options()); });
  expect_state([&] { cmd_report(c, q.options()); });

  cmd_build(c, q.options());
  {
    OutputLock held(c.output_dir);
    expect_state([&] { cmd_run(c, q.options()); });
  }
  CHECK(cmd_run(c, q.options()) == ExitCode::kOk);
  auto bad_task = q.options();
  bad_task.task = "sideways";
  CHECK_THROWS_AS(cmd_run(c, bad_task), Error);
}

TEST_CASE("offline mode refuses remote evaluators; unreachable ones fail per item") {
  testsupport::TempDir dir;
  Quiet q;
  auto j = sample_json();
  j["evaluators"].push_back({{"id", "remote"}, {"endpoint", "http://127.0.0.1:9/v1/chat/completions"}, {"max_retries", 0},
                             {"retry_backoff_ms", 1}, {"timeout_s", 1}});
  auto c = config_from(j, dir.str());
  cmd_build(c, q.options());
  auto offline = q.options();
  offline.offline = true;
  try {
    cmd_run(c, offline);
    FAIL("offline run must refuse the remote evaluator");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
  }
  auto only_remote = q.options();
  only_remote.evaluator = "remote";
  only_remote.task = "detect";
  CHECK(cmd_run(c, only_remote) == ExitCode::kPartialFailure);
  auto rates = rates_from_csv(read_file(dir / "runs/remote/rates_detection.csv"));
  REQUIRE_FALSE(rates.empty());
  CHECK(rates[0].degraded == false);  // degradation is not persisted in the CSV
  CHECK(rates[0].points[1].n == 0);
}
