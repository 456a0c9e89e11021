#include "mumkit/mockpop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mumkit/error.hpp"
#include "mumkit/mock_evaluator.hpp"
#include "mumkit/similarity.hpp"

namespace mumkit {

FamiliarityDist PopulationSpec::for_strategy(Strategy s) const {
  auto it = familiarity.find(s);
  return it == familiarity.end() ? default_familiarity : it->second;
}

double agent_familiarity(const PopulationSpec& spec, Strategy s, std::size_t agent) {
  auto dist = spec.for_strategy(s);
  if (dist.spread <= 0.0) return std::clamp(dist.mean, 0.0, 1.0);
  DrawStream draws(hash_key(spec.seed, {"agent", key(s), std::to_string(agent)}));
  return std::clamp(dist.mean + dist.spread * draws.normal(), 0.0, 1.0);
}

std::uint64_t agent_noise_seed(const PopulationSpec& spec, std::size_t agent) {
  return hash_key(spec.seed, {"agent-noise", std::to_string(agent)});
}

namespace {

void check(const ModulatedDataset& dataset, const PopulationSpec& spec) {
  if (spec.size == 0) throw Error(ErrorKind::kConfig, "population size must be positive");
  if (dataset.bases.empty() || dataset.items.empty()) throw Error(ErrorKind::kState, "dataset is empty");
}

bool seen_through(double f, double draw) { return f >= 1.0 || (f > 0.0 && draw < f); }

struct Tally {
  std::map<std::pair<Strategy, int>, std::pair<std::size_t, std::size_t>> cells;  // successes, totals

  std::vector<RateSeries> series(Task task, const std::string& id, std::size_t level0_success, std::size_t level0_total) {
    std::vector<RateSeries> out;
    for (auto s : kAllStrategies) {
      std::vector<std::size_t> succ{level0_success}, tot{level0_total};
      for (int level = kMinLevel; level <= kMaxLevel; ++level) {
        auto c = cells[{s, level}];
        succ.push_back(c.first);
        tot.push_back(c.second);
      }
      out.push_back(make_series(task, id, s, succ, tot));
    }
    return out;
  }
};

MockProfile without_familiarity(const MockProfile& profile, double value) {
  MockProfile p = profile;
  p.familiarity.clear();
  for (auto s : kAllStrategies) p.familiarity[s] = value;
  return p;
}

}  // namespace

std::vector<RateSeries> simulate_population_understanding(const ModulatedDataset& dataset, std::shared_ptr<const Lexicon> lexicon,
                                                          const MockProfile& profile, const PopulationSpec& spec,
                                                          double similarity_threshold) {
  check(dataset, spec);
  MockEvaluator reference(without_familiarity(profile, 1.0), std::move(lexicon));

  // Per substitution: similarity when seen through and when left blank.
  struct Prepared {
    std::vector<double> hit, miss;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(dataset.items.size());
  for (const auto& m : dataset.items) {
    Prepared p;
    auto words = reference.reconstruct(m);
    for (std::size_t i = 0; i < m.substitutions.size(); ++i) {
      p.hit.push_back(similarity(m.substitutions[i].original, words[i]));
      p.miss.push_back(similarity(m.substitutions[i].original, ""));
    }
    prepared.push_back(std::move(p));
  }

  Tally tally;
  for (std::size_t agent = 0; agent < spec.size; ++agent) {
    auto noise = agent_noise_seed(spec, agent);
    std::map<Strategy, double> fam;
    for (auto s : kAllStrategies) fam[s] = agent_familiarity(spec, s, agent);
    for (std::size_t j = 0; j < dataset.items.size(); ++j) {
      const auto& m = dataset.items[j];
      const auto& p = prepared[j];
      double total = 0.0;
      for (std::size_t i = 0; i < m.substitutions.size(); ++i) {
        double d = recognition_draw(noise, "reconstruct", m.strategy, m.base_id, m.substitutions[i].token_index);
        total += seen_through(fam[m.strategy], d) ? p.hit[i] : p.miss[i];
      }
      double mean = m.substitutions.empty() ? 1.0 : total / static_cast<double>(m.substitutions.size());
      auto& c = tally.cells[{m.strategy, m.level}];
      c.first += mean >= similarity_threshold ? 1 : 0;
      ++c.second;
    }
  }
  auto n0 = spec.size * dataset.bases.size();
  return tally.series(Task::kUnderstanding, "population", n0, n0);
}

std::vector<RateSeries> simulate_population_detection(const ModulatedDataset& dataset, std::shared_ptr<const Lexicon> lexicon,
                                                      const MockProfile& profile, const PopulationSpec& spec) {
  check(dataset, spec);
  if (spec.detector_sensitivity < 0.0) throw Error(ErrorKind::kConfig, "detector sensitivity must be non-negative");
  MockEvaluator blind(without_familiarity(profile, 0.0), std::move(lexicon));

  std::size_t base_hits = 0;
  for (const auto& b : dataset.bases) base_hits += blind.detects(b.text, nullptr) ? 1 : 0;

  struct Prepared {
    bool visible = false;
    std::vector<std::size_t> hidden;  // token indices of substituted triggers
  };
  std::vector<Prepared> prepared;
  for (const auto& m : dataset.items) {
    Prepared p;
    p.visible = blind.detects(m.text, &m);
    for (const auto& s : m.substitutions)
      if (profile.triggers.count(casefold(s.original))) p.hidden.push_back(s.token_index);
    prepared.push_back(std::move(p));
  }

  Tally tally;
  for (std::size_t agent = 0; agent < spec.size; ++agent) {
    auto noise = agent_noise_seed(spec, agent);
    std::map<Strategy, double> fam;
    for (auto s : kAllStrategies) fam[s] = std::clamp(agent_familiarity(spec, s, agent) * spec.detector_sensitivity, 0.0, 1.0);
    for (std::size_t j = 0; j < dataset.items.size(); ++j) {
      const auto& m = dataset.items[j];
      const auto& p = prepared[j];
      bool hit = p.visible;
      for (std::size_t i = 0; !hit && i < p.hidden.size(); ++i)
        hit = seen_through(fam[m.strategy], recognition_draw(noise, "detect", m.strategy, m.base_id, p.hidden[i]));
      auto& c = tally.cells[{m.strategy, m.level}];
      c.first += hit ? 1 : 0;
      ++c.second;
    }
  }
  return tally.series(Task::kDetection, "population", spec.size * base_hits, spec.size * dataset.bases.size());
}

SweepResult sweep_common_ground(const ModulatedDataset& dataset, std::shared_ptr<const Lexicon> lexicon, const MockProfile& profile,
                                const SweepOptions& options) {
  if (options.means.empty()) throw Error(ErrorKind::kConfig, "sweep needs at least one familiarity mean");
  if (options.seeds.empty()) throw Error(ErrorKind::kConfig, "sweep needs at least one seed");
  SweepResult result;
  result.strategy = options.strategy;
  for (double mean : options.means) {
    SweepPoint point;
    point.mean = mean;
    for (auto seed : options.seeds) {
      PopulationSpec spec;
      spec.size = options.size;
      spec.seed = seed;
      spec.familiarity[options.strategy] = {mean, options.spread};
      auto series = simulate_population_understanding(dataset, lexicon, profile, spec, options.similarity_threshold);
      const auto& s = series[index_of(options.strategy)];
      std::vector<Point> pts;
      for (const auto& p : s.points) pts.push_back({static_cast<double>(p.level), p.rate});
      auto fit = fit_logistic(pts, options.bounds);
      point.x0.push_back(fit.x0);
      if (fit.censored) ++point.censored;
    }
    const double n = static_cast<double>(point.x0.size());
    point.x0_mean = std::accumulate(point.x0.begin(), point.x0.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : point.x0) ss += (v - point.x0_mean) * (v - point.x0_mean);
    point.x0_sd = point.x0.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    result.points.push_back(std::move(point));
  }
  // A single grid point is trivially ordered.
  result.monotone = true;
  result.separated = true;
  for (std::size_t i = 1; i < result.points.size(); ++i) {
    const auto& a = result.points[i - 1];
    const auto& b = result.points[i];
    double gap = b.x0_mean - a.x0_mean;
    // Seed-to-seed spread is the uncertainty of a single fitted x0.
    double sigma = std::sqrt(a.x0_sd * a.x0_sd + b.x0_sd * b.x0_sd);
    if (!(gap > 0.0)) result.monotone = false;
    if (!(gap > 3.0 * sigma)) result.separated = false;
  }
  return result;
}

std::string sweep_to_csv(const SweepResult& result, const std::string& manifest_hash) {
  std::string out = "# manifest: " + manifest_hash + "\n";
  out += "# strategy: " + std::string(key(result.strategy)) + "; monotone: " + (result.monotone ? "yes" : "no") +
         "; separated_3sd: " + (result.separated ? "yes" : "no") + "\n";
  out += "mean,seeds,x0_mean,x0_sd,censored\n";
  for (const auto& p : result.points)
    out += fixed(p.mean, 4) + "," + std::to_string(p.x0.size()) + "," + fixed(p.x0_mean, 6) + "," + fixed(p.x0_sd, 6) + "," +
           std::to_string(p.censored) + "\n";
  return out;
}

}  // namespace mumkit
