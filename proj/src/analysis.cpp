#include "mumkit/analysis.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "mumkit/error.hpp"
#include "mumkit/text.hpp"

namespace mumkit {

using json = nlohmann::json;

std::vector<std::string> Analysis::evaluators() const {
  std::set<std::string> ids;
  for (const auto& s : series) ids.insert(s.series.evaluator_id);
  return {ids.begin(), ids.end()};
}

const SeriesAnalysis* Analysis::find(Task task, const std::string& evaluator_id, Strategy s) const {
  for (const auto& a : series)
    if (a.series.task == task && a.series.evaluator_id == evaluator_id && a.series.strategy == s) return &a;
  return nullptr;
}

const MumEstimate* Analysis::find_mum(Task task, Strategy s, Aggregation agg, const std::string& evaluator_id) const {
  for (const auto& m : mums) {
    if (m.task != task || m.strategy != s || m.aggregation != agg) continue;
    if (agg == Aggregation::kAcrossItems && (m.inputs.empty() || m.inputs[0].evaluator_id != evaluator_id)) continue;
    return &m;
  }
  return nullptr;
}

FitClass Analysis::majority_label(Task task, Strategy s) const {
  std::vector<FitClass> labels;
  for (const auto& a : series)
    if (a.series.task == task && a.series.strategy == s) labels.push_back(a.fit.fit_class);
  return majority_fit_class(labels);
}

namespace {

std::vector<Point> to_points(const RateSeries& s) {
  std::vector<Point> pts;
  for (const auto& p : s.points) pts.push_back({static_cast<double>(p.level), p.rate});
  return pts;
}

RateCurve curve_for(const SeriesAnalysis& a, double domain_hi) {
  if (a.fit.degenerate) return RateCurve::raw(to_points(a.series));
  return RateCurve::from_fit(a.fit, domain_hi);
}

}  // namespace

Analysis analyze(const std::vector<RateSeries>& input, const std::vector<ItemVerdict>& verdicts, const AnalysisOptions& options) {
  if (input.empty()) throw Error(ErrorKind::kState, "no rate series to analyze");
  Analysis out;
  out.manifest_hash = options.manifest_hash;
  out.tau = options.tau;
  out.detection_bounds = options.detection_bounds;
  out.understanding_bounds = options.understanding_bounds;

  auto sorted = input;
  std::sort(sorted.begin(), sorted.end(), [](const RateSeries& a, const RateSeries& b) {
    return std::tie(a.task, a.evaluator_id, a.strategy) < std::tie(b.task, b.evaluator_id, b.strategy);
  });
  for (const auto& s : sorted) {
    SeriesAnalysis a;
    a.series = s;
    auto pts = to_points(s);
    a.fit = fit_logistic(pts, options.bounds(s.task));
    a.spearman = spearman(pts);
    a.imum = imum(a.fit, options.tau);
    a.imum.task = s.task;
    a.imum.evaluator_id = s.evaluator_id;
    a.imum.strategy = s.strategy;
    if (s.degraded) out.warnings.push_back(std::string(key(s.task)) + "/" + s.evaluator_id + "/" + std::string(key(s.strategy)) +
                                           ": degraded (too many failed queries)");
    if (a.fit.degenerate)
      out.warnings.push_back(std::string(key(s.task)) + "/" + s.evaluator_id + "/" + std::string(key(s.strategy)) +
                             ": constant series, fit is degenerate");
    out.series.push_back(std::move(a));
  }

  for (auto task : {Task::kDetection, Task::kUnderstanding}) {
    for (auto s : kAllStrategies) {
      std::vector<ImumEstimate> imums;
      for (const auto& a : out.series)
        if (a.series.task == task && a.series.strategy == s) imums.push_back(a.imum);
      if (imums.empty()) continue;
      auto m = mum(imums, Aggregation::kAcrossModels);
      m.task = task;
      m.strategy = s;
      out.mums.push_back(std::move(m));
    }
  }

  // Per-item IMUMs from 0/1 verdicts at every level.
  std::map<std::tuple<Task, std::string, Strategy, std::string>, std::vector<int>> by_item;
  for (const auto& v : verdicts) {
    auto& levels = by_item[{v.task, v.evaluator_id, v.strategy, v.base_id}];
    if (levels.size() < static_cast<std::size_t>(kMaxLevel + 1)) levels.assign(kMaxLevel + 1, -2);
    if (v.level < 0 || v.level > kMaxLevel) throw Error(ErrorKind::kInvariant, "verdict level out of range for '" + v.base_id + "'");
    levels[static_cast<std::size_t>(v.level)] = v.verdict;
  }
  std::map<std::tuple<Task, std::string, Strategy>, std::vector<ImumEstimate>> per_series;
  for (const auto& [k, levels] : by_item) {
    const auto& [task, evaluator_id, strategy, base_id] = k;
    auto where = std::string(key(task)) + "/" + evaluator_id + "/" + std::string(key(strategy)) + "/" + base_id;
    if (std::any_of(levels.begin(), levels.end(), [](int v) { return v < 0; })) {
      out.excluded.push_back(where + ": missing or failed verdicts");
      continue;
    }
    if (levels[0] != 1) {
      out.excluded.push_back(where + ": not positive at level 0");
      continue;
    }
    auto r = per_item_imum(levels, options.bounds(task), options.tau);
    ItemImumRow row{task, evaluator_id, strategy, base_id, r.estimate.value, r.estimate.censored, r.step_crossing, r.step_censored,
                    r.fit.fit_class};
    out.items.push_back(row);
    auto e = r.estimate;
    e.task = task;
    e.evaluator_id = evaluator_id;
    e.strategy = strategy;
    e.item_id = base_id;
    per_series[{task, evaluator_id, strategy}].push_back(e);
  }
  for (const auto& [k, imums] : per_series) {
    auto m = mum(imums, Aggregation::kAcrossItems);
    m.task = std::get<0>(k);
    m.strategy = std::get<2>(k);
    out.mums.push_back(std::move(m));
  }

  for (const auto& id : out.evaluators()) {
    for (auto s : kAllStrategies) {
      const auto* u = out.find(Task::kUnderstanding, id, s);
      const auto* d = out.find(Task::kDetection, id, s);
      if (!u || !d) continue;
      const double hi = static_cast<double>(kMaxLevel);
      auto uc = curve_for(*u, hi);
      auto dc = curve_for(*d, hi);
      if (uc.is_raw() != dc.is_raw()) {
        uc = RateCurve::raw(to_points(u->series));
        dc = RateCurve::raw(to_points(d->series));
      }
      auto t = tradeoff(uc, dc);
      out.tradeoffs.push_back({id, s, t.d_star, t.objective, !uc.is_raw()});
    }
  }
  return out;
}

namespace {

json bounds_json(const FitBounds& b) { return json::array({b.lo, b.hi}); }
FitBounds bounds_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json imum_json(const ImumEstimate& e) {
  return {{"task", std::string(key(e.task))}, {"evaluator", e.evaluator_id}, {"strategy", std::string(key(e.strategy))},
          {"item", e.item_id},                 {"tau", e.tau},               {"value", e.value},
          {"censored", e.censored}};
}

ImumEstimate imum_from(const json& j) {
  ImumEstimate e;
  e.task = *parse_task(j.at("task").get<std::string>());
  e.evaluator_id = j.at("evaluator").get<std::string>();
  e.strategy = *parse_strategy(j.at("strategy").get<std::string>());
  e.item_id = j.value("item", "");
  e.tau = j.at("tau").get<double>();
  e.value = j.at("value").get<double>();
  e.censored = j.at("censored").get<bool>();
  return e;
}

FitClass fit_class_from(const std::string& s) {
  if (s == "Strong") return FitClass::kStrong;
  if (s == "Moderate") return FitClass::kModerate;
  return FitClass::kPoor;
}

}  // namespace

std::string analysis_to_json(const Analysis& a) {
  json j;
  j["format"] = "mumkit-analysis/1";
  j["manifest"] = a.manifest_hash;
  j["tau"] = a.tau;
  j["bounds"] = {{"detection", bounds_json(a.detection_bounds)}, {"understanding", bounds_json(a.understanding_bounds)}};
  json series = json::array();
  for (const auto& s : a.series) {
    json pts = json::array();
    for (const auto& p : s.series.points) pts.push_back({{"level", p.level}, {"rate", p.rate}, {"n", p.n}, {"count", p.count}});
    const auto& f = s.fit;
    json fj = {{"k", f.k},
               {"x0", f.x0},
               {"ssr", f.ssr},
               {"r2", f.r2},
               {"adj_r2", f.adj_r2},
               {"rmse", f.rmse},
               {"class", std::string(key(f.fit_class))},
               {"censored", f.censored},
               {"degenerate", f.degenerate},
               {"converged", f.converged},
               {"gradient_norm", f.gradient_norm}};
    const auto& sp = s.spearman;
    json sj = {{"rho", sp.rho}, {"p", sp.p_value}, {"significant", sp.significant}, {"exact", sp.exact}, {"degenerate", sp.degenerate}};
    series.push_back({{"task", std::string(key(s.series.task))},
                      {"evaluator", s.series.evaluator_id},
                      {"strategy", std::string(key(s.series.strategy))},
                      {"degraded", s.series.degraded},
                      {"points", pts},
                      {"fit", fj},
                      {"spearman", sj},
                      {"imum", imum_json(s.imum)}});
  }
  j["series"] = series;
  json mums = json::array();
  for (const auto& m : a.mums) {
    json inputs = json::array();
    for (const auto& e : m.inputs) inputs.push_back(imum_json(e));
    mums.push_back({{"task", std::string(key(m.task))},
                    {"strategy", std::string(key(m.strategy))},
                    {"aggregation", std::string(key(m.aggregation))},
                    {"value", m.value},
                    {"censored", m.censored},
                    {"censored_count", m.censored_count},
                    {"inputs", inputs}});
  }
  j["mums"] = mums;
  json items = json::array();
  for (const auto& r : a.items)
    items.push_back({{"task", std::string(key(r.task))},
                     {"evaluator", r.evaluator_id},
                     {"strategy", std::string(key(r.strategy))},
                     {"item", r.base_id},
                     {"imum", r.imum},
                     {"censored", r.censored},
                     {"step", r.step_crossing},
                     {"step_censored", r.step_censored},
                     {"class", std::string(key(r.fit_class))}});
  j["items"] = items;
  j["excluded"] = a.excluded;
  json trade = json::array();
  for (const auto& t : a.tradeoffs)
    trade.push_back({{"evaluator", t.evaluator_id},
                     {"strategy", std::string(key(t.strategy))},
                     {"d_star", t.d_star},
                     {"objective", t.objective},
                     {"from_fits", t.from_fits}});
  j["tradeoffs"] = trade;
  j["warnings"] = a.warnings;
  return j.dump(1) + "\n";
}

Analysis analysis_from_json(std::string_view text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "mumkit-analysis/1") throw Error(ErrorKind::kParse, "results: not a mumkit analysis file");
  Analysis a;
  try {
    a.manifest_hash = j.at("manifest").get<std::string>();
    a.tau = j.at("tau").get<double>();
    a.detection_bounds = bounds_from(j.at("bounds").at("detection"));
    a.understanding_bounds = bounds_from(j.at("bounds").at("understanding"));
    for (const auto& sj : j.at("series")) {
      SeriesAnalysis s;
      s.series.task = *parse_task(sj.at("task").get<std::string>());
      s.series.evaluator_id = sj.at("evaluator").get<std::string>();
      s.series.strategy = *parse_strategy(sj.at("strategy").get<std::string>());
      s.series.degraded = sj.at("degraded").get<bool>();
      for (const auto& p : sj.at("points"))
        s.series.points.push_back({p.at("level").get<int>(), p.at("rate").get<double>(), p.at("n").get<std::size_t>(),
                                   p.at("count").get<std::size_t>()});
      const auto& f = sj.at("fit");
      s.fit.k = f.at("k").get<double>();
      s.fit.x0 = f.at("x0").get<double>();
      s.fit.ssr = f.at("ssr").get<double>();
      s.fit.r2 = f.at("r2").get<double>();
      s.fit.adj_r2 = f.at("adj_r2").get<double>();
      s.fit.rmse = f.at("rmse").get<double>();
      s.fit.fit_class = fit_class_from(f.at("class").get<std::string>());
      s.fit.censored = f.at("censored").get<bool>();
      s.fit.degenerate = f.at("degenerate").get<bool>();
      s.fit.converged = f.at("converged").get<bool>();
      s.fit.gradient_norm = f.at("gradient_norm").get<double>();
      s.fit.bounds = s.series.task == Task::kDetection ? a.detection_bounds : a.understanding_bounds;
      for (const auto& p : s.series.points) s.fit.points.push_back({static_cast<double>(p.level), p.rate});
      const auto& sp = sj.at("spearman");
      s.spearman.rho = sp.at("rho").get<double>();
      s.spearman.p_value = sp.at("p").get<double>();
      s.spearman.significant = sp.at("significant").get<bool>();
      s.spearman.exact = sp.at("exact").get<bool>();
      s.spearman.degenerate = sp.at("degenerate").get<bool>();
      s.spearman.n = s.series.points.size();
      s.imum = imum_from(sj.at("imum"));
      a.series.push_back(std::move(s));
    }
    for (const auto& mj : j.at("mums")) {
      MumEstimate m;
      m.task = *parse_task(mj.at("task").get<std::string>());
      m.strategy = *parse_strategy(mj.at("strategy").get<std::string>());
      m.aggregation = mj.at("aggregation").get<std::string>() == "across-items" ? Aggregation::kAcrossItems : Aggregation::kAcrossModels;
      m.value = mj.at("value").get<double>();
      m.censored = mj.at("censored").get<bool>();
      m.censored_count = mj.at("censored_count").get<std::size_t>();
      for (const auto& e : mj.at("inputs")) m.inputs.push_back(imum_from(e));
      a.mums.push_back(std::move(m));
    }
    for (const auto& r : j.at("items"))
      a.items.push_back({*parse_task(r.at("task").get<std::string>()), r.at("evaluator").get<std::string>(),
                         *parse_strategy(r.at("strategy").get<std::string>()), r.at("item").get<std::string>(), r.at("imum").get<double>(),
                         r.at("censored").get<bool>(), r.at("step").get<double>(), r.at("step_censored").get<bool>(),
                         fit_class_from(r.at("class").get<std::string>())});
    a.excluded = j.at("excluded").get<std::vector<std::string>>();
    for (const auto& t : j.at("tradeoffs"))
      a.tradeoffs.push_back({t.at("evaluator").get<std::string>(), *parse_strategy(t.at("strategy").get<std::string>()),
                             t.at("d_star").get<double>(), t.at("objective").get<double>(), t.at("from_fits").get<bool>()});
    a.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("results: ") + e.what());
  }
  return a;
}

std::map<std::string, std::string> analysis_tables(const Analysis& a) {
  std::map<std::string, std::string> out;
  const std::string head = "# manifest: " + a.manifest_hash + "\n";
  {
    std::ostringstream o;
    o << head << "task,evaluator,strategy,k,x0,r2,adj_r2,rmse,fit_class,censored,degenerate,converged,rho,p,significant\n";
    for (const auto& s : a.series) {
      const auto& f = s.fit;
      o << key(s.series.task) << "," << s.series.evaluator_id << "," << key(s.series.strategy) << "," << fixed(f.k, 6) << ","
        << fixed(f.x0, 6) << "," << fixed(f.r2, 6) << "," << fixed(f.adj_r2, 6) << "," << fixed(f.rmse, 6) << "," << key(f.fit_class)
        << "," << f.censored << "," << f.degenerate << "," << f.converged << "," << fixed(s.spearman.rho, 6) << ","
        << fixed(s.spearman.p_value, 6) << "," << s.spearman.significant << "\n";
    }
    out["fits.csv"] = o.str();
  }
  {
    std::ostringstream o;
    o << head << "task,evaluator,strategy,tau,imum,censored\n";
    for (const auto& s : a.series)
      o << key(s.series.task) << "," << s.series.evaluator_id << "," << key(s.series.strategy) << "," << fixed(s.imum.tau, 4) << ","
        << fixed(s.imum.value, 6) << "," << s.imum.censored << "\n";
    out["imum.csv"] = o.str();
  }
  {
    std::ostringstream o;
    o << head << "task,strategy,aggregation,evaluator,mum,censored,censored_count,inputs\n";
    for (const auto& m : a.mums) {
      auto ev = m.aggregation == Aggregation::kAcrossItems && !m.inputs.empty() ? m.inputs[0].evaluator_id : std::string("*");
      o << key(m.task) << "," << key(m.strategy) << "," << key(m.aggregation) << "," << ev << "," << fixed(m.value, 6) << ","
        << m.censored << "," << m.censored_count << "," << m.inputs.size() << "\n";
    }
    out["mum.csv"] = o.str();
  }
  {
    std::ostringstream o;
    o << head << "task,evaluator,strategy,item,imum,censored,step_crossing,step_censored,fit_class\n";
    for (const auto& r : a.items)
      o << key(r.task) << "," << r.evaluator_id << "," << key(r.strategy) << "," << r.base_id << "," << fixed(r.imum, 6) << ","
        << r.censored << "," << fixed(r.step_crossing, 2) << "," << r.step_censored << "," << key(r.fit_class) << "\n";
    out["per_item.csv"] = o.str();
  }
  {
    std::ostringstream o;
    o << head << "evaluator,strategy,d_star,objective,source\n";
    for (const auto& t : a.tradeoffs)
      o << t.evaluator_id << "," << key(t.strategy) << "," << fixed(t.d_star, 2) << "," << fixed(t.objective, 6) << ","
        << (t.from_fits ? "fit" : "raw") << "\n";
    out["tradeoff.csv"] = o.str();
  }
  return out;
}

}  // namespace mumkit
