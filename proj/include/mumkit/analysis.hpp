#pragma once

#include <map>
#include <string>
#include <vector>

#include "mumkit/runner.hpp"
#include "mumkit/stats.hpp"

namespace mumkit {

struct AnalysisOptions {
  double tau = 0.5;
  FitBounds detection_bounds{-1.0, 6.0};
  FitBounds understanding_bounds{-1.0, 6.0};
  std::string manifest_hash;

  const FitBounds& bounds(Task t) const { return t == Task::kDetection ? detection_bounds : understanding_bounds; }
};

struct SeriesAnalysis {
  RateSeries series;
  LogisticFit fit;
  SpearmanResult spearman;
  ImumEstimate imum;
};

struct ItemImumRow {
  Task task = Task::kDetection;
  std::string evaluator_id;
  Strategy strategy = Strategy::kCodeWord;
  std::string base_id;
  double imum = 0.0;
  bool censored = false;
  double step_crossing = 0.0;
  bool step_censored = false;
  FitClass fit_class = FitClass::kPoor;
};

struct TradeoffRow {
  std::string evaluator_id;
  Strategy strategy = Strategy::kCodeWord;
  double d_star = 0.0;
  double objective = 0.0;
  bool from_fits = true;
};

struct Analysis {
  std::string manifest_hash;
  double tau = 0.5;
  FitBounds detection_bounds;
  FitBounds understanding_bounds;
  std::vector<SeriesAnalysis> series;  // sorted by (task, evaluator, strategy)
  std::vector<MumEstimate> mums;       // across models, then across items
  std::vector<ItemImumRow> items;
  std::vector<std::string> excluded;   // per-item rows skipped, with reason
  std::vector<TradeoffRow> tradeoffs;
  std::vector<std::string> warnings;

  std::vector<std::string> evaluators() const;
  const SeriesAnalysis* find(Task task, const std::string& evaluator_id, Strategy s) const;
  const MumEstimate* find_mum(Task task, Strategy s, Aggregation a, const std::string& evaluator_id = "") const;
  FitClass majority_label(Task task, Strategy s) const;
};

/// Fits every series, tests monotonicity, derives IMUMs, MUMs across models
/// and across items, and the understanding/detection trade-off per model.
Analysis analyze(const std::vector<RateSeries>& series, const std::vector<ItemVerdict>& verdicts, const AnalysisOptions& options);

std::string analysis_to_json(const Analysis& a);
Analysis analysis_from_json(std::string_view text);

/// CSV tables under stats/: fits, imum, mum, per-item, tradeoff.
std::map<std::string, std::string> analysis_tables(const Analysis& a);

}  // namespace mumkit
