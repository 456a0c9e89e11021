#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mumkit/evaluator.hpp"
#include "mumkit/mockpop.hpp"
#include "mumkit/report.hpp"
#include "mumkit/stats.hpp"

namespace mumkit {

/// One structured document describing a whole experiment. Relative paths are
/// resolved against the directory holding the config file.
struct RunConfig {
  std::string config_path;
  std::string corpus;
  std::string lexicon;
  std::string prompts_dir;  // optional template overrides
  std::string audit;        // optional meaning-audit CSV
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::string cache_dir;    // defaults to <output_dir>/cache
  double tau = 0.5;
  double similarity_threshold = 0.95;
  int trials_per_query = 3;
  bool audit_drop = false;
  double degraded_threshold = 0.20;
  std::size_t max_parallel = 4;
  FitBounds detection_bounds{-1.0, 6.0};
  FitBounds understanding_bounds{-1.0, 6.0};
  std::string baseline_evaluator;  // validates and ranks the corpus; defaults to the first evaluator
  std::string title = "Modulation report";
  std::vector<Zone> zones;
  PopulationSpec population;
  SweepOptions sweep;
  std::vector<EvaluatorConfig> evaluators;

  const EvaluatorConfig& evaluator(const std::string& id) const;
  const EvaluatorConfig& baseline() const;
  std::string path(const std::string& name) const;  // output-relative file
};

/// Parses the JSON config. `base_dir` anchors relative paths.
RunConfig parse_config(std::string_view text, const std::string& base_dir, const std::string& source_name = "<config>");
RunConfig load_config(const std::string& path);

/// Command-line overrides applied on top of the file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<std::string> output_dir;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

}  // namespace mumkit
