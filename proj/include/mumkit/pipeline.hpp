#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "mumkit/config.hpp"
#include "mumkit/error.hpp"
#include "mumkit/modulation.hpp"

namespace mumkit {

struct CommandOptions {
  std::optional<std::string> evaluator;  // restrict run/replay to one evaluator
  std::string task = "both";             // detect | understand | both
  bool offline = false;                  // refuse non-mock evaluators
  bool force = false;                    // accept artifacts from another manifest
  std::ostream* log = nullptr;           // progress and summaries; defaults to std::cout
};

/// Exclusive lock on an output directory: "<dir>/.lock" created with O_EXCL
/// and removed on destruction. A leftover lock from a crashed command must be
/// deleted by hand.
class OutputLock {
 public:
  explicit OutputLock(const std::string& output_dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
};

/// Output layout under the configured output directory.
namespace layout {
inline constexpr const char* kRankings = "rankings.jsonl";
inline constexpr const char* kDataset = "dataset.jsonl";
inline constexpr const char* kBuildTrials = "build_trials.jsonl";
inline constexpr const char* kRunManifest = "run_manifest.json";
inline constexpr const char* kRates = "rates.csv";
inline constexpr const char* kRuns = "runs";
inline constexpr const char* kStats = "stats";
inline constexpr const char* kResults = "stats/results.json";
inline constexpr const char* kReport = "report";
inline constexpr const char* kPopulation = "population";
}  // namespace layout

/// Manifest describing a run: dataset identity plus every setting that
/// changes evaluator answers. Returns {hash, pretty JSON}.
std::pair<std::string, std::string> make_run_manifest(const RunConfig& config, const ModulatedDataset& dataset);
std::string read_run_manifest_hash(const RunConfig& config);

ExitCode cmd_build(const RunConfig& config, const CommandOptions& options = {});
ExitCode cmd_run(const RunConfig& config, const CommandOptions& options = {});
ExitCode cmd_fit(const RunConfig& config, const CommandOptions& options = {});
ExitCode cmd_report(const RunConfig& config, const CommandOptions& options = {});
/// Re-runs every query from the cache only and checks the stored rates are
/// reproduced exactly, then fits and reports. Mismatch or cache miss exits 3.
ExitCode cmd_replay(const RunConfig& config, const CommandOptions& options = {});
/// Mock population rates at the configured population settings and the common-ground sweep.
ExitCode cmd_sweep(const RunConfig& config, const CommandOptions& options = {});

}  // namespace mumkit
