#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "mumkit/evaluator.hpp"
#include "mumkit/lexicon.hpp"
#include "mumkit/modulation.hpp"
#include "mumkit/runner.hpp"
#include "mumkit/stats.hpp"

namespace mumkit {

struct FamiliarityDist {
  double mean = 0.5;
  double spread = 0.0;  // standard deviation before clamping to [0, 1]
};

/// A simulated reader population. Each agent draws its own per-strategy
/// familiarity and its own noise seed.
struct PopulationSpec {
  std::size_t size = 200;
  std::uint64_t seed = 0;
  std::map<Strategy, FamiliarityDist> familiarity;  // missing strategies use the default
  FamiliarityDist default_familiarity;
  double detector_sensitivity = 1.0;  // scales familiarity for detection

  FamiliarityDist for_strategy(Strategy s) const;
};

double agent_familiarity(const PopulationSpec& spec, Strategy s, std::size_t agent);
std::uint64_t agent_noise_seed(const PopulationSpec& spec, std::size_t agent);

/// Understanding rate per (strategy, level): the fraction of (agent, item)
/// pairs whose reconstruction passes the similarity threshold. `profile`
/// supplies triggers and vocabulary; its familiarity is ignored.
std::vector<RateSeries> simulate_population_understanding(const ModulatedDataset& dataset, std::shared_ptr<const Lexicon> lexicon,
                                                          const MockProfile& profile, const PopulationSpec& spec,
                                                          double similarity_threshold = 0.95);

/// Detection rate per (strategy, level) for a population of moderators whose
/// recognition probability is familiarity x detector_sensitivity.
std::vector<RateSeries> simulate_population_detection(const ModulatedDataset& dataset, std::shared_ptr<const Lexicon> lexicon,
                                                      const MockProfile& profile, const PopulationSpec& spec);

struct SweepPoint {
  double mean = 0.0;
  std::vector<double> x0;  // one per seed
  double x0_mean = 0.0;
  double x0_sd = 0.0;
  std::size_t censored = 0;
};

struct SweepResult {
  Strategy strategy = Strategy::kCodeWord;
  std::vector<SweepPoint> points;
  bool monotone = false;   // mean x0 strictly increasing with familiarity
  bool separated = false;  // each adjacent gap exceeds 3 combined seed-to-seed SDs
};

struct SweepOptions {
  Strategy strategy = Strategy::kCodeWord;
  std::vector<double> means = {0.2, 0.5, 0.8};
  double spread = 0.1;
  std::size_t size = 200;
  std::vector<std::uint64_t> seeds;
  FitBounds bounds;
  double similarity_threshold = 0.95;
};

/// Understanding x0 as a function of the population's mean familiarity.
/// A non-monotone result is reported through the flags, not thrown.
SweepResult sweep_common_ground(const ModulatedDataset& dataset, std::shared_ptr<const Lexicon> lexicon, const MockProfile& profile,
                                const SweepOptions& options);

/// "# manifest" line, then mean,seeds,x0_mean,x0_sd,censored and a summary line.
std::string sweep_to_csv(const SweepResult& result, const std::string& manifest_hash);

}  // namespace mumkit
