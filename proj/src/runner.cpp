#include "mumkit/runner.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <tuple>

#include "mumkit/error.hpp"
#include "mumkit/parallel.hpp"
#include "mumkit/similarity.hpp"

namespace mumkit {

std::vector<double> RateSeries::levels() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.level);
  return out;
}

std::vector<double> RateSeries::rates() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.rate);
  return out;
}

namespace {

struct Cell {
  std::size_t ok = 0;
  std::size_t success = 0;
  std::size_t failed = 0;
};

RatePoint to_point(int level, const Cell& c) {
  RatePoint p;
  p.level = level;
  p.n = c.ok;
  p.count = c.success;
  p.rate = c.ok ? static_cast<double>(c.success) / static_cast<double>(c.ok) : 0.0;
  return p;
}

bool is_degraded(const Cell& c, double threshold) {
  auto total = c.ok + c.failed;
  return total == 0 || static_cast<double>(c.failed) / static_cast<double>(total) > threshold;
}

std::size_t parallelism(const RunOptions& options, const EvaluatorSession& evaluator) {
  return std::max<std::size_t>(1, std::min(options.max_parallel, evaluator.config().max_in_flight));
}

void sort_verdicts(std::vector<ItemVerdict>& v) {
  std::sort(v.begin(), v.end(), [](const ItemVerdict& a, const ItemVerdict& b) {
    return std::tie(a.task, a.evaluator_id, a.strategy, a.base_id, a.level) <
           std::tie(b.task, b.evaluator_id, b.strategy, b.base_id, b.level);
  });
}

}  // namespace

RunResult run_detection(const ModulatedDataset& dataset, EvaluatorSession& evaluator, const RunOptions& options) {
  if (dataset.bases.empty() || dataset.items.empty()) throw Error(ErrorKind::kState, "dataset is empty");
  const std::size_t nb = dataset.bases.size();
  const std::size_t total = nb + dataset.items.size();
  std::vector<int> outcome(total, -1);
  std::vector<std::string> errors(total);

  parallel_for(total, parallelism(options, evaluator), [&](std::size_t i) {
    try {
      if (i < nb) {
        const auto& b = dataset.bases[i];
        outcome[i] = evaluator.majority_detect(b.text, ItemKey::base(b.id)) ? 1 : 0;
      } else {
        const auto& m = dataset.items[i - nb];
        outcome[i] = evaluator.majority_detect(m.text, ItemKey::of(m), &m) ? 1 : 0;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kTransport) throw;
      errors[i] = e.what();
    }
  });

  RunResult result;
  Cell base_cell;
  for (std::size_t i = 0; i < nb; ++i) {
    if (outcome[i] < 0) {
      ++base_cell.failed;
      result.failures.push_back(dataset.bases[i].id + "/base/0: " + errors[i]);
    } else {
      ++base_cell.ok;
      base_cell.success += static_cast<std::size_t>(outcome[i]);
    }
  }
  std::map<std::pair<Strategy, int>, Cell> cells;
  for (std::size_t j = 0; j < dataset.items.size(); ++j) {
    const auto& m = dataset.items[j];
    auto& c = cells[{m.strategy, m.level}];
    int v = outcome[nb + j];
    if (v < 0) {
      ++c.failed;
      result.failures.push_back(m.base_id + "/" + std::string(key(m.strategy)) + "/" + std::to_string(m.level) + ": " + errors[nb + j]);
    } else {
      ++c.ok;
      c.success += static_cast<std::size_t>(v);
    }
    result.verdicts.push_back({Task::kDetection, evaluator.id(), m.strategy, m.base_id, m.level, v});
  }
  for (auto s : kAllStrategies) {
    RateSeries series;
    series.task = Task::kDetection;
    series.evaluator_id = evaluator.id();
    series.strategy = s;
    series.points.push_back(to_point(0, base_cell));
    series.degraded = is_degraded(base_cell, options.degraded_threshold);
    for (int level = kMinLevel; level <= kMaxLevel; ++level) {
      const auto& c = cells[{s, level}];
      series.points.push_back(to_point(level, c));
      series.degraded = series.degraded || is_degraded(c, options.degraded_threshold);
    }
    result.series.push_back(std::move(series));
    for (std::size_t i = 0; i < nb; ++i)
      result.verdicts.push_back({Task::kDetection, evaluator.id(), s, dataset.bases[i].id, 0, outcome[i]});
  }
  sort_verdicts(result.verdicts);
  return result;
}

RunResult run_understanding(const ModulatedDataset& dataset, EvaluatorSession& evaluator, const RunOptions& options) {
  if (dataset.bases.empty() || dataset.items.empty()) throw Error(ErrorKind::kState, "dataset is empty");
  const std::size_t total = dataset.items.size();
  std::vector<int> outcome(total, -1);
  std::vector<bool> dropped(total, false);
  std::vector<std::string> errors(total);

  parallel_for(total, parallelism(options, evaluator), [&](std::size_t i) {
    const auto& m = dataset.items[i];
    if (options.audit_drop && m.meaning_audit == MeaningAudit::kBroken) {
      dropped[i] = true;
      return;
    }
    try {
      auto words = evaluator.reconstruct(m);
      outcome[i] = understanding_verdict(m, words, options.similarity_threshold) ? 1 : 0;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kTransport) throw;
      errors[i] = e.what();
    }
  });

  RunResult result;
  std::map<std::pair<Strategy, int>, Cell> cells;
  for (std::size_t i = 0; i < total; ++i) {
    if (dropped[i]) continue;
    const auto& m = dataset.items[i];
    auto& c = cells[{m.strategy, m.level}];
    if (outcome[i] < 0) {
      ++c.failed;
      result.failures.push_back(m.base_id + "/" + std::string(key(m.strategy)) + "/" + std::to_string(m.level) + ": " + errors[i]);
    } else {
      ++c.ok;
      c.success += static_cast<std::size_t>(outcome[i]);
    }
    result.verdicts.push_back({Task::kUnderstanding, evaluator.id(), m.strategy, m.base_id, m.level, outcome[i]});
  }
  Cell base_cell{dataset.bases.size(), dataset.bases.size(), 0};
  for (auto s : kAllStrategies) {
    RateSeries series;
    series.task = Task::kUnderstanding;
    series.evaluator_id = evaluator.id();
    series.strategy = s;
    series.points.push_back(to_point(0, base_cell));
    for (int level = kMinLevel; level <= kMaxLevel; ++level) {
      const auto& c = cells[{s, level}];
      series.points.push_back(to_point(level, c));
      series.degraded = series.degraded || is_degraded(c, options.degraded_threshold);
    }
    result.series.push_back(std::move(series));
    for (const auto& b : dataset.bases) result.verdicts.push_back({Task::kUnderstanding, evaluator.id(), s, b.id, 0, 1});
  }
  sort_verdicts(result.verdicts);
  return result;
}

RateSeries make_series(Task task, const std::string& evaluator_id, Strategy s, const std::vector<std::size_t>& successes,
                       const std::vector<std::size_t>& totals) {
  RateSeries series;
  series.task = task;
  series.evaluator_id = evaluator_id;
  series.strategy = s;
  for (std::size_t level = 0; level < successes.size(); ++level)
    series.points.push_back(to_point(static_cast<int>(level), Cell{totals[level], successes[level], 0}));
  return series;
}

std::string rates_to_csv(const std::vector<RateSeries>& series, const std::string& manifest_hash) {
  std::ostringstream out;
  out << "# manifest: " << manifest_hash << "\n";
  out << "task,evaluator,strategy,level,rate,n\n";
  for (const auto& s : series)
    for (const auto& p : s.points)
      out << key(s.task) << "," << s.evaluator_id << "," << key(s.strategy) << "," << p.level << "," << fixed(p.rate, 6) << "," << p.n
          << "\n";
  return out.str();
}

std::vector<RateSeries> rates_from_csv(std::string_view csv, std::string* manifest_hash) {
  std::vector<RateSeries> out;
  std::size_t line_no = 0;
  for (const auto& raw : split(csv, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    if (line.starts_with("# manifest:")) {
      if (manifest_hash) *manifest_hash = trim(std::string_view(line).substr(11));
      continue;
    }
    if (line[0] == '#' || line.starts_with("task,")) continue;
    auto cols = split(line, ',');
    auto where = "rates:" + std::to_string(line_no);
    if (cols.size() != 6) throw Error(ErrorKind::kParse, where + ": expected 6 columns");
    auto task = parse_task(cols[0]);
    auto strategy = parse_strategy(cols[2]);
    if (!task || !strategy) throw Error(ErrorKind::kParse, where + ": bad task or strategy");
    RatePoint p;
    try {
      p.level = std::stoi(cols[3]);
      p.n = std::stoul(cols[5]);
      double rate = std::stod(cols[4]);
      p.count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(p.n)));
      p.rate = p.n ? static_cast<double>(p.count) / static_cast<double>(p.n) : rate;
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse, where + ": bad number");
    }
    if (out.empty() || out.back().task != *task || out.back().evaluator_id != cols[1] || out.back().strategy != *strategy) {
      RateSeries s;
      s.task = *task;
      s.evaluator_id = cols[1];
      s.strategy = *strategy;
      out.push_back(std::move(s));
    }
    out.back().points.push_back(p);
  }
  return out;
}

std::string verdicts_to_csv(const std::vector<ItemVerdict>& verdicts, const std::string& manifest_hash) {
  std::ostringstream out;
  out << "# manifest: " << manifest_hash << "\n";
  out << "task,evaluator,strategy,base_id,level,verdict\n";
  for (const auto& v : verdicts)
    out << key(v.task) << "," << v.evaluator_id << "," << key(v.strategy) << "," << v.base_id << "," << v.level << "," << v.verdict << "\n";
  return out.str();
}

std::vector<ItemVerdict> verdicts_from_csv(std::string_view csv) {
  std::vector<ItemVerdict> out;
  for (const auto& raw : split(csv, '\n')) {
    auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line.starts_with("task,")) continue;
    auto cols = split(line, ',');
    if (cols.size() != 6) throw Error(ErrorKind::kParse, "verdicts: expected 6 columns");
    auto task = parse_task(cols[0]);
    auto strategy = parse_strategy(cols[2]);
    if (!task || !strategy) throw Error(ErrorKind::kParse, "verdicts: bad task or strategy");
    out.push_back({*task, cols[1], *strategy, cols[3], std::stoi(cols[4]), std::stoi(cols[5])});
  }
  return out;
}

}  // namespace mumkit
