#pragma once

#include <map>
#include <string>
#include <vector>

#include "mumkit/analysis.hpp"

namespace mumkit {

/// Display-only band over (level, rate) space used to shade curve plots.
struct Zone {
  std::string label;
  double level_lo = 0.0;
  double level_hi = 5.0;
  double rate_lo = 0.0;
  double rate_hi = 1.0;
  std::string color = "#dddddd";
};

/// Typical / opaque / Algospeak / coded quadrants split at level 2.5 and rate 0.5.
std::vector<Zone> default_zones();

struct ReportOptions {
  std::string title = "Modulation report";
  std::vector<Zone> zones;
};

/// Relative path -> file content.
using Artifacts = std::map<std::string, std::string>;

/// Formats an IMUM with the censoring marker (">=6.00" / "<=-1.00").
std::string format_imum(const ImumEstimate& e, const FitBounds& bounds, int precision = 2);

/// Per-strategy fit table for one model (both tasks). Understanding k is
/// shown with its sign flipped so both tasks read the same way.
std::string render_model_table_csv(const Analysis& a, const std::string& evaluator_id);
std::string render_model_table_text(const Analysis& a, const std::string& evaluator_id);

/// Strategies x models grid of adj R2 ("*" = significant Spearman), majority
/// fit label and significance counts with a totals row.
std::string render_cross_model_table_csv(const Analysis& a);
std::string render_cross_model_table_text(const Analysis& a);

std::string render_imum_table_csv(const Analysis& a);
std::string render_imum_table_text(const Analysis& a);

std::string render_mum_table_csv(const Analysis& a);
std::string render_mum_table_text(const Analysis& a);

/// Small multiples: one panel per strategy with observed rates, the fitted
/// sigmoid, the tau line, the IMUM marker and optional zone shading.
std::string render_curves(const Analysis& a, Task task, const std::string& evaluator_id, const ReportOptions& options);
std::string render_heatmap(const Analysis& a, Task task);
std::string render_imum_chart(const Analysis& a, Task task, Strategy s);

/// Every table, figure and report.md. Pure function of its inputs.
Artifacts render_report(const Analysis& a, const ReportOptions& options);

void write_artifacts(const std::string& dir, const Artifacts& artifacts);

std::string safe_file_name(std::string_view s);

}  // namespace mumkit
