#include "mumkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "mumkit/error.hpp"
#include "mumkit/svg.hpp"
#include "mumkit/text.hpp"

namespace mumkit {

namespace {

constexpr Task kTasks[] = {Task::kDetection, Task::kUnderstanding};

std::string task_title(Task t) { return t == Task::kDetection ? "Detection" : "Understanding"; }

std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto measure = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  };
  measure(header);
  for (const auto& r : rows) measure(r);
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& r) {
    std::string line;
    for (std::size_t i = 0; i < width.size(); ++i) {
      std::string cell = i < r.size() ? r[i] : "";
      std::string pad(width[i] - cell.size(), ' ');
      line += i == 0 ? cell + pad : "  " + pad + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << "\n";
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  out << std::string(total > 2 ? total - 2 : 0, '-') << "\n";
  for (const auto& r : rows) emit(r);
  return out.str();
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto c = cells[i];
    if (c.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char ch : c) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      c = q + "\"";
    }
    out += (i ? "," : "") + c;
  }
  return out + "\n";
}

const FitBounds& bounds_for(const Analysis& a, Task t) { return t == Task::kDetection ? a.detection_bounds : a.understanding_bounds; }

double display_k(const SeriesAnalysis& s) { return s.series.task == Task::kUnderstanding ? -s.fit.k : s.fit.k; }

std::vector<std::string> model_row(const Analysis& a, Task task, const std::string& evaluator_id, Strategy s, bool text) {
  std::vector<std::string> row{std::string(key(task)), text ? std::string(display_name(s)) : std::string(key(s))};
  const auto* sa = a.find(task, evaluator_id, s);
  if (!sa) {
    for (int i = 0; i < (text ? 8 : 9); ++i) row.push_back("missing");
    return row;
  }
  row.push_back(fixed(display_k(*sa), 4));
  row.push_back(text ? format_imum(sa->imum, bounds_for(a, task), 4) : fixed(sa->imum.value, 4));
  if (!text) row.push_back(sa->imum.censored ? "1" : "0");
  row.push_back(fixed(sa->fit.r2, 4));
  row.push_back(fixed(sa->fit.adj_r2, 4));
  row.push_back(fixed(sa->fit.rmse, 4));
  row.push_back(std::string(key(sa->fit.fit_class)));
  row.push_back(fixed(sa->spearman.rho, 3));
  row.push_back(fixed(sa->spearman.p_value, 4));
  return row;
}

std::string header_line(const Analysis& a) { return "manifest: " + a.manifest_hash + "\n"; }

}  // namespace

std::vector<Zone> default_zones() {
  return {{"typical", 0.0, 2.5, 0.5, 1.0, "#e5f5e0"},
          {"opaque", 0.0, 2.5, 0.0, 0.5, "#f0f0f0"},
          {"Algospeak", 2.5, 5.0, 0.5, 1.0, "#fee6ce"},
          {"coded", 2.5, 5.0, 0.0, 0.5, "#deebf7"}};
}

std::string format_imum(const ImumEstimate& e, const FitBounds& bounds, int precision) {
  auto v = fixed(e.value, precision);
  if (!e.censored) return v;
  return (std::abs(e.value - bounds.lo) < std::abs(e.value - bounds.hi) ? "<=" : ">=") + v;
}

std::string safe_file_name(std::string_view s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out.empty() ? "_" : out;
}

std::string render_model_table_csv(const Analysis& a, const std::string& evaluator_id) {
  std::string out = "# " + header_line(a);
  out += "task,strategy,k,imum,imum_censored,r2,adj_r2,rmse,fit_class,rho,p\n";
  for (auto t : kTasks)
    for (auto s : kAllStrategies) out += csv_join(model_row(a, t, evaluator_id, s, false));
  return out;
}

std::string render_model_table_text(const Analysis& a, const std::string& evaluator_id) {
  std::ostringstream out;
  out << "Model " << evaluator_id << ": 2-parameter logistic fit and Spearman rank correlation\n" << header_line(a);
  for (auto t : kTasks) {
    std::vector<std::vector<std::string>> rows;
    for (auto s : kAllStrategies) {
      auto r = model_row(a, t, evaluator_id, s, true);
      rows.emplace_back(r.begin() + 1, r.end());
    }
    out << "\n" << task_title(t) << (t == Task::kUnderstanding ? " (k sign flipped for display)" : "") << "\n";
    out << text_table({"Strategy", "k", "IMUM", "R2", "adj R2", "RMSE", "Fit", "rho", "p"}, rows);
  }
  out << "\n>= / <= marks an IMUM censored at the fit bound.\n";
  return out.str();
}

namespace {

std::vector<std::vector<std::string>> cross_model_rows(const Analysis& a, Task t, bool text) {
  auto evals = a.evaluators();
  std::vector<std::vector<std::string>> rows;
  std::vector<int> per_model(evals.size(), 0);
  std::vector<int> per_model_n(evals.size(), 0);
  int total_sig = 0, total = 0;
  for (auto s : kAllStrategies) {
    int sig = 0, present = 0;
    std::vector<std::string> cells;
    for (std::size_t i = 0; i < evals.size(); ++i) {
      const auto* sa = a.find(t, evals[i], s);
      if (!sa) {
        cells.push_back("missing");
        continue;
      }
      ++present;
      ++per_model_n[i];
      if (sa->spearman.significant) {
        ++sig;
        ++per_model[i];
      }
      cells.push_back(fixed(sa->fit.adj_r2, 4) + (sa->spearman.significant ? "*" : ""));
    }
    total_sig += sig;
    total += present;
    std::vector<std::string> row;
    if (!text) row.push_back(std::string(key(t)));
    row.push_back(text ? std::string(display_name(s)) : std::string(key(s)));
    row.insert(row.end(), cells.begin(), cells.end());
    row.push_back(present ? std::string(key(a.majority_label(t, s))) : "missing");
    row.push_back(std::to_string(sig) + "/" + std::to_string(present));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> totals;
  if (!text) totals.push_back(std::string(key(t)));
  totals.push_back("Total");
  for (std::size_t i = 0; i < evals.size(); ++i) totals.push_back(std::to_string(per_model[i]) + "/" + std::to_string(per_model_n[i]));
  totals.push_back("");
  totals.push_back(std::to_string(total_sig) + "/" + std::to_string(total));
  rows.push_back(std::move(totals));
  return rows;
}

}  // namespace

std::string render_cross_model_table_csv(const Analysis& a) {
  std::string out = "# " + header_line(a);
  std::vector<std::string> head{"task", "strategy"};
  for (const auto& e : a.evaluators()) head.push_back(e);
  head.push_back("majority_fit");
  head.push_back("significant");
  out += csv_join(head);
  for (auto t : kTasks)
    for (const auto& r : cross_model_rows(a, t, false)) out += csv_join(r);
  return out;
}

std::string render_cross_model_table_text(const Analysis& a) {
  std::ostringstream out;
  out << "Adjusted R2 with majority fit estimation and Spearman rank correlation significance\n" << header_line(a);
  auto evals = a.evaluators();
  if (evals.size() < 2) out << "note: fewer than two models; majority labels reflect a single model\n";
  std::vector<std::string> head{"Strategy"};
  head.insert(head.end(), evals.begin(), evals.end());
  head.push_back("Majority");
  head.push_back("Sig.");
  for (auto t : kTasks) out << "\n" << task_title(t) << "\n" << text_table(head, cross_model_rows(a, t, true));
  out << "\n* Spearman p < 0.05. Majority ties resolve to the weaker class.\n";
  return out.str();
}

std::string render_imum_table_csv(const Analysis& a) {
  std::string out = "# " + header_line(a);
  out += "task,strategy,evaluator,tau,imum,censored\n";
  for (auto t : kTasks)
    for (auto s : kAllStrategies)
      for (const auto& e : a.evaluators()) {
        const auto* sa = a.find(t, e, s);
        if (!sa) {
          out += csv_join({std::string(key(t)), std::string(key(s)), e, fixed(a.tau, 2), "missing", "missing"});
          continue;
        }
        out += csv_join({std::string(key(t)), std::string(key(s)), e, fixed(sa->imum.tau, 2), fixed(sa->imum.value, 4),
                         sa->imum.censored ? "1" : "0"});
      }
  return out;
}

std::string render_imum_table_text(const Analysis& a) {
  std::ostringstream out;
  out << "IMUM per model (tau = " << fixed(a.tau, 2) << ")\n" << header_line(a);
  auto evals = a.evaluators();
  std::vector<std::string> head{"Strategy"};
  head.insert(head.end(), evals.begin(), evals.end());
  head.push_back("MUM");
  for (auto t : kTasks) {
    std::vector<std::vector<std::string>> rows;
    for (auto s : kAllStrategies) {
      std::vector<std::string> row{std::string(display_name(s))};
      for (const auto& e : evals) {
        const auto* sa = a.find(t, e, s);
        row.push_back(sa ? format_imum(sa->imum, bounds_for(a, t)) : "missing");
      }
      const auto* m = a.find_mum(t, s, Aggregation::kAcrossModels);
      row.push_back(m ? (m->censored ? format_imum({t, "", s, "", a.tau, m->value, true}, bounds_for(a, t)) : fixed(m->value, 2))
                      : "missing");
      rows.push_back(std::move(row));
    }
    out << "\n" << task_title(t) << "\n" << text_table(head, rows);
  }
  out << "\n>= / <= marks an IMUM censored at the fit bound. MUM is the median across models.\n";
  return out.str();
}

std::string render_mum_table_csv(const Analysis& a) {
  std::string out = "# " + header_line(a);
  out += "task,strategy,aggregation,evaluator,mum,censored,censored_count,inputs\n";
  for (const auto& m : a.mums) {
    auto ev = m.aggregation == Aggregation::kAcrossItems && !m.inputs.empty() ? m.inputs[0].evaluator_id : std::string("*");
    out += csv_join({std::string(key(m.task)), std::string(key(m.strategy)), std::string(key(m.aggregation)), ev, fixed(m.value, 4),
                     m.censored ? "1" : "0", std::to_string(m.censored_count), std::to_string(m.inputs.size())});
  }
  return out;
}

std::string render_mum_table_text(const Analysis& a) {
  std::ostringstream out;
  out << "MUM across models (median) and across items (mean), tau = " << fixed(a.tau, 2) << "\n" << header_line(a);
  auto evals = a.evaluators();
  std::vector<std::string> head{"Strategy", "Across models", "Censored"};
  for (const auto& e : evals) head.push_back(e + " items");
  for (auto t : kTasks) {
    std::vector<std::vector<std::string>> rows;
    for (auto s : kAllStrategies) {
      std::vector<std::string> row{std::string(display_name(s))};
      const auto* m = a.find_mum(t, s, Aggregation::kAcrossModels);
      auto show = [&](const MumEstimate* mm) {
        if (!mm) return std::string("missing");
        return mm->censored ? format_imum({t, "", s, "", a.tau, mm->value, true}, bounds_for(a, t)) : fixed(mm->value, 2);
      };
      row.push_back(show(m));
      row.push_back(m ? std::to_string(m->censored_count) + "/" + std::to_string(m->inputs.size()) : "missing");
      for (const auto& e : evals) row.push_back(show(a.find_mum(t, s, Aggregation::kAcrossItems, e)));
      rows.push_back(std::move(row));
    }
    out << "\n" << task_title(t) << "\n" << text_table(head, rows);
  }
  if (!a.excluded.empty()) out << "\n" << a.excluded.size() << " per-item series excluded (see stats/results.json).\n";
  return out.str();
}

std::string render_curves(const Analysis& a, Task task, const std::string& evaluator_id, const ReportOptions& options) {
  const double pw = 230, ph = 180, cols = 4;
  const double ml = 36, mr = 10, mt = 24, mb = 28;
  Svg svg(pw * cols, ph * 2 + 30);
  svg.comment("manifest " + a.manifest_hash);
  svg.text(8, 18, task_title(task) + " rate vs modulation level, model " + evaluator_id, 13);
  const auto& b = bounds_for(a, task);
  const double xlo = std::min(b.lo, 0.0), xhi = std::max(b.hi, static_cast<double>(kMaxLevel));
  for (std::size_t i = 0; i < kAllStrategies.size(); ++i) {
    auto s = kAllStrategies[i];
    const double ox = pw * static_cast<double>(i % 4), oy = 30 + ph * static_cast<double>(i / 4);
    const double left = ox + ml, top = oy + mt, w = pw - ml - mr, h = ph - mt - mb;
    auto X = [&](double lv) { return left + (lv - xlo) / (xhi - xlo) * w; };
    auto Y = [&](double r) { return top + (1.0 - r) * h; };
    for (const auto& z : options.zones) {
      double zl = std::clamp(z.level_lo, xlo, xhi), zh = std::clamp(z.level_hi, xlo, xhi);
      if (zh <= zl) continue;
      svg.rect(X(zl), Y(z.rate_hi), X(zh) - X(zl), Y(z.rate_lo) - Y(z.rate_hi), z.color, 0.6);
      svg.text(X(zl) + 2, Y(z.rate_hi) + 9, z.label, 7, "start", "#777777");
    }
    svg.rect(left, top, w, h, "none", 1.0, "#888888");
    svg.text(ox + pw / 2, oy + 16, std::string(display_name(s)), 11, "middle");
    for (int lv = 0; lv <= kMaxLevel; ++lv) svg.text(X(lv), top + h + 12, std::to_string(lv), 8, "middle");
    for (double r : {0.0, 0.5, 1.0}) svg.text(left - 4, Y(r) + 3, fixed(r, 1), 8, "end");
    svg.line(left, Y(a.tau), left + w, Y(a.tau), "#555555", 0.8, "4,3");
    const auto* sa = a.find(task, evaluator_id, s);
    if (!sa) {
      svg.text(left + w / 2, top + h / 2, "missing", 11, "middle", "#aa0000");
      continue;
    }
    auto color = palette(i);
    bool poor = sa->fit.fit_class == FitClass::kPoor;
    if (!poor && !sa->fit.degenerate) {
      std::vector<Xy> curve;
      for (int step = 0; step <= kMaxLevel * 20; ++step) {
        double lv = step * 0.05;
        curve.push_back({X(lv), Y(logistic(lv, sa->fit.k, sa->fit.x0))});
      }
      svg.polyline(curve, color);
    } else {
      svg.text(left + w - 4, top + 12, "poor fit", 9, "end", "#aa0000");
    }
    for (const auto& p : sa->series.points) svg.circle(X(p.level), Y(p.rate), 3, std::string(color));
    if (sa->imum.censored) {
      svg.text(left + 4, top + h - 4, "IMUM censored " + format_imum(sa->imum, b), 8, "start", "#aa0000");
    } else {
      svg.line(X(sa->imum.value), Y(a.tau), X(sa->imum.value), top + h, "#333333", 0.8, "2,2");
      svg.circle(X(sa->imum.value), Y(a.tau), 4, "none", "#000000");
      svg.text(X(sa->imum.value) + 4, Y(a.tau) - 4, "IMUM " + fixed(sa->imum.value, 2), 8);
    }
    svg.text(left + w - 4, top + h - 4, "adj R2 " + fixed(sa->fit.adj_r2, 3), 8, "end", "#555555");
  }
  return svg.str();
}

std::string render_heatmap(const Analysis& a, Task task) {
  auto evals = a.evaluators();
  const double cw = 90, chh = 26, left = 120, top = 50;
  Svg svg(left + cw * static_cast<double>(kAllStrategies.size()) + 20, top + chh * static_cast<double>(std::max<std::size_t>(evals.size(), 1)) + 40);
  svg.comment("manifest " + a.manifest_hash);
  svg.text(8, 18, task_title(task) + ": adjusted R2 per model and strategy", 13);
  for (std::size_t j = 0; j < kAllStrategies.size(); ++j)
    svg.text(left + cw * (static_cast<double>(j) + 0.5), top - 8, std::string(display_name(kAllStrategies[j])), 10, "middle");
  for (std::size_t i = 0; i < evals.size(); ++i) {
    double y = top + chh * static_cast<double>(i);
    svg.text(left - 6, y + chh / 2 + 4, evals[i], 10, "end");
    for (std::size_t j = 0; j < kAllStrategies.size(); ++j) {
      double x = left + cw * static_cast<double>(j);
      const auto* sa = a.find(task, evals[i], kAllStrategies[j]);
      if (!sa) {
        svg.rect(x, y, cw, chh, "#ffffff", 1.0, "#cccccc");
        svg.text(x + cw / 2, y + chh / 2 + 4, "missing", 9, "middle", "#aa0000");
        continue;
      }
      double v = sa->fit.adj_r2;
      svg.rect(x, y, cw, chh, heat_color(v), 1.0, "#ffffff");
      svg.text(x + cw / 2, y + chh / 2 + 4, fixed(v, 2) + (sa->spearman.significant ? "*" : ""), 10, "middle",
               v > 0.6 ? "#ffffff" : "#222222");
    }
  }
  svg.text(8, top + chh * static_cast<double>(evals.size()) + 24, "* Spearman p < 0.05; color scale 0 (light) to 1 (dark)", 9);
  return svg.str();
}

std::string render_imum_chart(const Analysis& a, Task task, Strategy s) {
  const auto* m = a.find_mum(task, s, Aggregation::kAcrossModels);
  std::vector<ImumEstimate> inputs = m ? m->inputs : std::vector<ImumEstimate>{};
  const auto& b = bounds_for(a, task);
  const double left = 50, top = 40, h = 200, slot = 70;
  const double w = slot * static_cast<double>(std::max<std::size_t>(inputs.size(), 1));
  Svg svg(left + w + 30, top + h + 70);
  svg.comment("manifest " + a.manifest_hash);
  svg.text(8, 18, task_title(task) + " IMUM per model, " + std::string(display_name(s)), 13);
  auto Y = [&](double lv) { return top + (b.hi - lv) / (b.hi - b.lo) * h; };
  svg.rect(left, top, w, h, "none", 1.0, "#888888");
  for (int lv = static_cast<int>(std::ceil(b.lo)); lv <= static_cast<int>(std::floor(b.hi)); ++lv) {
    svg.line(left, Y(lv), left + w, Y(lv), "#eeeeee", 0.5);
    svg.text(left - 4, Y(lv) + 3, std::to_string(lv), 8, "end");
  }
  if (!m) {
    svg.text(left + w / 2, top + h / 2, "missing", 11, "middle", "#aa0000");
    return svg.str();
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& e = inputs[i];
    double x = left + slot * (static_cast<double>(i) + 0.5);
    svg.line(x, top + h, x, Y(e.value), "#9ecae1", 10);
    if (e.censored)
      svg.circle(x, Y(e.value), 5, "#ffffff", "#d62728");
    else
      svg.circle(x, Y(e.value), 5, "#1f77b4");
    svg.text(x, top + h + 14, e.evaluator_id, 9, "middle");
    svg.text(x, Y(e.value) - 8, format_imum(e, b), 8, "middle");
  }
  svg.line(left, Y(m->value), left + w, Y(m->value), "#d62728", 1.5, "6,3");
  svg.text(left + w + 2, Y(m->value) + 3, "MUM", 9, "start", "#d62728");
  std::string legend = "line: MUM (median across models) = " + fixed(m->value, 2);
  if (m->censored_count) legend += "; hollow marker: censored at bound (" + std::to_string(m->censored_count) + ")";
  if (m->censored) legend += "; all inputs censored";
  svg.text(8, top + h + 34, legend, 9);
  return svg.str();
}

Artifacts render_report(const Analysis& a, const ReportOptions& options) {
  Artifacts out;
  auto evals = a.evaluators();
  for (const auto& e : evals) {
    out["tables/model_" + safe_file_name(e) + ".csv"] = render_model_table_csv(a, e);
    out["tables/model_" + safe_file_name(e) + ".txt"] = render_model_table_text(a, e);
  }
  out["tables/cross_model.csv"] = render_cross_model_table_csv(a);
  out["tables/cross_model.txt"] = render_cross_model_table_text(a);
  out["tables/imum.csv"] = render_imum_table_csv(a);
  out["tables/imum.txt"] = render_imum_table_text(a);
  out["tables/mum.csv"] = render_mum_table_csv(a);
  out["tables/mum.txt"] = render_mum_table_text(a);
  for (auto t : kTasks) {
    out["figures/heatmap_" + std::string(key(t)) + ".svg"] = render_heatmap(a, t);
    for (const auto& e : evals)
      out["figures/curves_" + std::string(key(t)) + "_" + safe_file_name(e) + ".svg"] = render_curves(a, t, e, options);
    for (auto s : kAllStrategies) out["figures/imum_" + std::string(key(t)) + "_" + std::string(key(s)) + ".svg"] = render_imum_chart(a, t, s);
  }

  std::ostringstream md;
  md << "# " << options.title << "\n\n";
  md << "Run manifest: `" << a.manifest_hash << "`\n\n";
  md << "Threshold tau = " << fixed(a.tau, 2) << ". Fit bounds: detection [" << fixed(a.detection_bounds.lo, 2) << ", "
     << fixed(a.detection_bounds.hi, 2) << "], understanding [" << fixed(a.understanding_bounds.lo, 2) << ", "
     << fixed(a.understanding_bounds.hi, 2) << "].\n\n";
  md << "Models: " << evals.size() << " (";
  for (std::size_t i = 0; i < evals.size(); ++i) md << (i ? ", " : "") << evals[i];
  md << ")\n\n## Tables\n\n";
  for (const auto& [path, content] : out)
    if (path.starts_with("tables/") && path.ends_with(".txt")) md << "- [" << path << "](" << path << ")\n";
  md << "\n## MUM across models\n\n| Strategy | Detection | Understanding |\n|---|---|---|\n";
  for (auto s : kAllStrategies) {
    md << "| " << display_name(s);
    for (auto t : kTasks) {
      const auto* m = a.find_mum(t, s, Aggregation::kAcrossModels);
      md << " | " << (m ? (m->censored ? format_imum({t, "", s, "", a.tau, m->value, true}, bounds_for(a, t)) : fixed(m->value, 2)) : "missing");
    }
    md << " |\n";
  }
  md << "\n## Understanding/detection trade-off\n\n| Model | Strategy | d* | U(1-D) | Source |\n|---|---|---|---|---|\n";
  for (const auto& t : a.tradeoffs)
    md << "| " << t.evaluator_id << " | " << display_name(t.strategy) << " | " << fixed(t.d_star, 2) << " | " << fixed(t.objective, 4)
       << " | " << (t.from_fits ? "fit" : "raw") << " |\n";
  if (a.tradeoffs.empty()) md << "| missing | | | | |\n";
  md << "\n## Figures\n\n";
  for (const auto& [path, content] : out)
    if (path.starts_with("figures/")) md << "- [" << path << "](" << path << ")\n";
  md << "\n## Notes\n\n";
  md << "- IMUM values marked >= or <= are censored: the curve did not cross tau within the tested range.\n";
  md << "- Understanding k is displayed with its sign flipped; stored fits use y = 1/(1+exp(k(x-x0))).\n";
  if (!a.excluded.empty()) md << "- " << a.excluded.size() << " per-item series excluded from across-items MUMs.\n";
  for (const auto& w : a.warnings) md << "- warning: " << w << "\n";
  out["report.md"] = md.str();
  return out;
}

void write_artifacts(const std::string& dir, const Artifacts& artifacts) {
  for (const auto& [path, content] : artifacts) write_file_atomic((std::filesystem::path(dir) / path).string(), content);
}

}  // namespace mumkit
