#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mumkit/analysis.hpp"
#include "mumkit/config.hpp"
#include "mumkit/error.hpp"
#include "mumkit/lexicon.hpp"
#include "mumkit/pipeline.hpp"
#include "mumkit/report.hpp"
#include "mumkit/similarity.hpp"
#include "mumkit/stats.hpp"
#include "mumkit/text.hpp"

namespace py = pybind11;
using namespace mumkit;

namespace {

Strategy strategy_from(const std::string& name) {
  auto s = parse_strategy(name);
  if (!s) throw Error(ErrorKind::kConfig, "unknown strategy '" + name + "'");
  return *s;
}

std::vector<Point> points_from(const std::vector<double>& levels, const std::vector<double>& rates) {
  if (levels.size() != rates.size()) throw Error(ErrorKind::kConfig, "levels and rates differ in length");
  std::vector<Point> pts;
  for (std::size_t i = 0; i < levels.size(); ++i) pts.push_back({levels[i], rates[i]});
  return pts;
}

py::dict fit_dict(const LogisticFit& f) {
  py::dict d;
  d["k"] = f.k;
  d["x0"] = f.x0;
  d["ssr"] = f.ssr;
  d["r2"] = f.r2;
  d["adj_r2"] = f.adj_r2;
  d["rmse"] = f.rmse;
  d["fit_class"] = std::string(key(f.fit_class));
  d["censored"] = f.censored;
  d["degenerate"] = f.degenerate;
  d["converged"] = f.converged;
  return d;
}

using Command = ExitCode (*)(const RunConfig&, const CommandOptions&);

int run_command(Command cmd, const std::string& config_path, std::optional<std::string> output_dir, bool offline, bool force,
                std::optional<std::string> evaluator, const std::string& task) {
  auto config = load_config(config_path);
  apply_overrides(config, {std::nullopt, std::nullopt, std::move(output_dir)});
  CommandOptions o;
  o.offline = offline;
  o.force = force;
  o.evaluator = std::move(evaluator);
  o.task = task;
  py::gil_scoped_release release;
  return static_cast<int>(cmd(config, o));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Modulation toolkit core: tokenizer, lexicon, statistics and pipeline commands";

  static py::exception<Error> error_type(m, "MumkitError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type)(e.what());
      exc.attr("kind") = py::str(std::string(to_string(e.kind())));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def(
      "tokenize",
      [](const std::string& text) {
        std::vector<std::tuple<std::string, std::size_t, std::size_t>> out;
        for (const auto& t : tokenize(text)) out.emplace_back(t.surface, t.begin, t.end);
        return out;
      },
      py::arg("text"), "Tokens as (surface, begin, end) byte offsets.");
  m.def("sha256_hex", [](const std::string& s) { return sha256_hex(s); });
  m.def("levenshtein", &levenshtein, py::arg("a"), py::arg("b"));
  m.def("similarity", &similarity, py::arg("a"), py::arg("b"));
  m.def("strategies", [] {
    std::vector<std::string> out;
    for (auto s : kAllStrategies) out.emplace_back(key(s));
    return out;
  });

  py::class_<Lexicon>(m, "Lexicon")
      .def_static("load", &Lexicon::load, py::arg("path"))
      .def_static("parse", [](const std::string& text) { return Lexicon::parse(text); }, py::arg("text"))
      .def_static("default_rules", &Lexicon::default_rules)
      .def_property_readonly("version", &Lexicon::version)
      .def(
          "substitute",
          [](const Lexicon& l, const std::string& strategy, const std::string& word, std::uint64_t draw_key) {
            return l.substitute(strategy_from(strategy), word, draw_key);
          },
          py::arg("strategy"), py::arg("word"), py::arg("draw_key") = 0)
      .def(
          "invert", [](const Lexicon& l, const std::string& strategy, const std::string& r) { return l.invert(strategy_from(strategy), r); },
          py::arg("strategy"), py::arg("replacement"));

  m.def("logistic", &logistic, py::arg("x"), py::arg("k"), py::arg("x0"));
  m.def("adjusted_r2", &adjusted_r2, py::arg("r2"), py::arg("n"), py::arg("p") = 2);
  m.def("classify_fit", [](double adj) { return std::string(key(classify_fit(adj))); }, py::arg("adj_r2"));
  m.def(
      "fit_logistic",
      [](const std::vector<double>& levels, const std::vector<double>& rates, std::pair<double, double> bounds) {
        return fit_dict(fit_logistic(points_from(levels, rates), {bounds.first, bounds.second}));
      },
      py::arg("levels"), py::arg("rates"), py::arg("bounds") = std::make_pair(-1.0, 6.0));
  m.def(
      "spearman",
      [](const std::vector<double>& levels, const std::vector<double>& rates) {
        auto r = spearman(points_from(levels, rates));
        py::dict d;
        d["rho"] = r.rho;
        d["p_value"] = r.p_value;
        d["significant"] = r.significant;
        d["exact"] = r.exact;
        d["degenerate"] = r.degenerate;
        return d;
      },
      py::arg("levels"), py::arg("rates"));
  m.def(
      "imum",
      [](double k, double x0, double tau, std::pair<double, double> bounds) {
        LogisticFit f;
        f.k = k;
        f.x0 = x0;
        f.bounds = {bounds.first, bounds.second};
        auto e = imum(f, tau);
        return std::make_pair(e.value, e.censored);
      },
      py::arg("k"), py::arg("x0"), py::arg("tau") = 0.5, py::arg("bounds") = std::make_pair(-1.0, 6.0),
      "Level where the curve crosses tau, and whether it was censored at a bound.");
  m.def(
      "format_imum",
      [](double value, bool censored, std::pair<double, double> bounds, int precision) {
        ImumEstimate e;
        e.value = value;
        e.censored = censored;
        return format_imum(e, {bounds.first, bounds.second}, precision);
      },
      py::arg("value"), py::arg("censored"), py::arg("bounds") = std::make_pair(-1.0, 6.0), py::arg("precision") = 2);
  m.def(
      "tradeoff",
      [](std::pair<double, double> understanding, std::pair<double, double> detection, double max_level, double grid_step) {
        auto r = tradeoff(RateCurve::logistic(understanding.first, understanding.second, max_level),
                          RateCurve::logistic(detection.first, detection.second, max_level), grid_step);
        return std::make_pair(r.d_star, r.objective);
      },
      py::arg("understanding"), py::arg("detection"), py::arg("max_level") = 5.0, py::arg("grid_step") = 0.01,
      "Maximize U(d)(1 - D(d)) for logistic (k, x0) curves; returns (d*, objective).");

  auto bind_command = [&m](const char* name, Command cmd, const char* doc) {
    m.def(name, [cmd](const std::string& config, std::optional<std::string> output_dir, bool offline, bool force,
                      std::optional<std::string> evaluator, const std::string& task) {
      return run_command(cmd, config, std::move(output_dir), offline, force, std::move(evaluator), task);
    }, py::arg("config"), py::arg("output_dir") = py::none(), py::arg("offline") = false, py::arg("force") = false,
          py::arg("evaluator") = py::none(), py::arg("task") = "both", doc);
  };
  bind_command("build", &cmd_build, "Validate, rank and modulate the corpus. Returns the exit code.");
  bind_command("run", &cmd_run, "Query evaluators and store rate series. Returns the exit code.");
  bind_command("fit", &cmd_fit, "Fit curves and derive IMUM/MUM. Returns the exit code.");
  bind_command("report", &cmd_report, "Render tables and figures. Returns the exit code.");
  bind_command("replay", &cmd_replay, "Re-run from the cache and verify. Returns the exit code.");
  bind_command("sweep", &cmd_sweep, "Population simulation and familiarity sweep. Returns the exit code.");
}
