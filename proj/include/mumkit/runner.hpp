#pragma once

#include <map>
#include <string>
#include <vector>

#include "mumkit/evaluator.hpp"
#include "mumkit/modulation.hpp"
#include "mumkit/strategy.hpp"

namespace mumkit {

struct RatePoint {
  int level = 0;
  double rate = 0.0;
  std::size_t n = 0;
  std::size_t count = 0;  // successes; rate == count / n
};

struct RateSeries {
  Task task = Task::kDetection;
  std::string evaluator_id;
  Strategy strategy = Strategy::kCodeWord;
  std::vector<RatePoint> points;  // levels 0..5
  bool degraded = false;

  std::vector<double> levels() const;
  std::vector<double> rates() const;
};

/// Outcome for one (item, strategy, level) cell, kept for per-item analysis.
struct ItemVerdict {
  Task task = Task::kDetection;
  std::string evaluator_id;
  Strategy strategy = Strategy::kCodeWord;
  std::string base_id;
  int level = 0;
  int verdict = 0;  // 1 detected/understood, 0 not, -1 failed (transport)
};

struct RunOptions {
  double similarity_threshold = 0.95;
  bool audit_drop = false;           // drop items audited as broken (understanding only)
  double degraded_threshold = 0.20;  // failed fraction above which a cell is degraded
  std::size_t max_parallel = 4;
};

struct RunResult {
  std::vector<RateSeries> series;  // one per strategy
  std::vector<ItemVerdict> verdicts;
  std::vector<std::string> failures;
};

/// Majority-vote detection for every (strategy, level) cell. Level 0 is
/// measured once on the base sentences and shared by all strategies.
RunResult run_detection(const ModulatedDataset& dataset, EvaluatorSession& evaluator, const RunOptions& options = {});

/// Reconstruction + understanding verdict for every modulated item. Level 0
/// is 1.0 by definition.
RunResult run_understanding(const ModulatedDataset& dataset, EvaluatorSession& evaluator, const RunOptions& options = {});

/// CSV with columns task,evaluator,strategy,level,rate,n preceded by a
/// "# manifest: <hash>" line.
std::string rates_to_csv(const std::vector<RateSeries>& series, const std::string& manifest_hash);
std::vector<RateSeries> rates_from_csv(std::string_view csv, std::string* manifest_hash = nullptr);

std::string verdicts_to_csv(const std::vector<ItemVerdict>& verdicts, const std::string& manifest_hash);
std::vector<ItemVerdict> verdicts_from_csv(std::string_view csv);

/// Builds a rate series from per-item 0/1 verdicts (used for population runs).
RateSeries make_series(Task task, const std::string& evaluator_id, Strategy s, const std::vector<std::size_t>& successes,
                       const std::vector<std::size_t>& totals);

}  // namespace mumkit
