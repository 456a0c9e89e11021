#include "mumkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "mumkit/error.hpp"

namespace mumkit {

std::string_view key(FitClass c) {
  switch (c) {
    case FitClass::kStrong: return "Strong";
    case FitClass::kModerate: return "Moderate";
    case FitClass::kPoor: return "Poor";
  }
  return "";
}

std::string_view short_label(FitClass c) { return key(c).substr(0, 1); }

std::string_view key(Aggregation a) { return a == Aggregation::kAcrossModels ? "across-models" : "across-items"; }

double logistic(double x, double k, double x0) {
  double z = k * (x - x0);
  if (z > 0) {
    double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double adjusted_r2(double r2, std::size_t n, std::size_t p) {
  if (n <= p + 1) throw Error(ErrorKind::kInvariant, "adjusted R2 needs n > p + 1");
  return 1.0 - (1.0 - r2) * static_cast<double>(n - 1) / static_cast<double>(n - p - 1);
}

FitClass classify_fit(double adj_r2) {
  if (adj_r2 > 0.90) return FitClass::kStrong;
  if (adj_r2 >= 0.40) return FitClass::kModerate;
  return FitClass::kPoor;
}

FitClass majority_fit_class(std::span<const FitClass> labels) {
  int counts[3] = {0, 0, 0};
  for (auto l : labels) ++counts[static_cast<int>(l)];
  // Walk from weakest to strongest so equal counts keep the weaker class.
  FitClass best = FitClass::kPoor;
  int best_count = -1;
  for (int c = 2; c >= 0; --c) {
    if (counts[c] > best_count) {
      best_count = counts[c];
      best = static_cast<FitClass>(c);
    }
  }
  return best;
}

double sum_squared_residuals(std::span<const Point> points, double k, double x0) {
  double s = 0.0;
  for (const auto& p : points) {
    double r = p.y - logistic(p.x, k, x0);
    s += r * r;
  }
  return s;
}

namespace {

constexpr double kBoundEps = 1e-6;

struct Gradient {
  double gk = 0.0, gx = 0.0;           // d SSR / d(k, x0)
  double a = 0.0, b = 0.0, c = 0.0;    // J^T J = [[a, b], [b, c]]
  double jr_k = 0.0, jr_x = 0.0;       // J^T r
};

Gradient gradient(std::span<const Point> pts, double k, double x0) {
  Gradient g;
  for (const auto& p : pts) {
    double f = logistic(p.x, k, x0);
    double s = f * (1.0 - f);
    double r = p.y - f;
    // residual derivatives: dr/dk = s (x - x0), dr/dx0 = -s k
    double jk = s * (p.x - x0);
    double jx = -s * k;
    g.a += jk * jk;
    g.b += jk * jx;
    g.c += jx * jx;
    g.jr_k += jk * r;
    g.jr_x += jx * r;
  }
  g.gk = 2.0 * g.jr_k;
  g.gx = 2.0 * g.jr_x;
  return g;
}

struct Box {
  double k_lo, k_hi, x_lo, x_hi;
};

// Components that would push an at-bound coordinate outward are inactive.
void active_set(const Box& box, double k, double x0, const Gradient& g, bool& fix_k, bool& fix_x) {
  fix_x = (x0 <= box.x_lo + 1e-12 && g.gx > 0) || (x0 >= box.x_hi - 1e-12 && g.gx < 0);
  fix_k = (k <= box.k_lo + 1e-12 && g.gk > 0) || (k >= box.k_hi - 1e-12 && g.gk < 0);
}

double projected_norm(const Box& box, double k, double x0, const Gradient& g) {
  bool fix_k = false, fix_x = false;
  active_set(box, k, x0, g, fix_k, fix_x);
  double gk = fix_k ? 0.0 : g.gk;
  double gx = fix_x ? 0.0 : g.gx;
  return std::hypot(gk, gx);
}

struct Refined {
  double k, x0, ssr, gnorm;
  bool converged;
};

Refined refine(std::span<const Point> pts, const Box& box, double k, double x0, const FitOptions& opt) {
  double ssr = sum_squared_residuals(pts, k, x0);
  double lambda = 1e-3;
  bool converged = false;
  Gradient g = gradient(pts, k, x0);
  for (int it = 0; it < opt.max_iterations; ++it) {
    double gnorm = projected_norm(box, k, x0, g);
    if (gnorm <= opt.gradient_tolerance) {
      converged = true;
      break;
    }
    bool fix_k = false, fix_x = false;
    active_set(box, k, x0, g, fix_k, fix_x);
    bool improved = false;
    while (lambda < 1e14) {
      double a = g.a + lambda * std::max(g.a, 1e-12);
      double c = g.c + lambda * std::max(g.c, 1e-12);
      double dk = 0.0, dx = 0.0;
      // Gauss-Newton step solves (J^T J) delta = -J^T r for residual r = y - f.
      if (fix_k && fix_x) break;
      if (fix_x) {
        dk = -g.jr_k / a;
      } else if (fix_k) {
        dx = -g.jr_x / c;
      } else {
        double det = a * c - g.b * g.b;
        if (std::abs(det) < 1e-300) {
          lambda *= 4;
          continue;
        }
        dk = (-g.jr_k * c + g.jr_x * g.b) / det;
        dx = (-g.jr_x * a + g.jr_k * g.b) / det;
      }
      double nk = std::clamp(k + dk, box.k_lo, box.k_hi);
      double nx = std::clamp(x0 + dx, box.x_lo, box.x_hi);
      double nssr = sum_squared_residuals(pts, nk, nx);
      if (nssr < ssr) {
        k = nk;
        x0 = nx;
        ssr = nssr;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        break;
      }
      lambda *= 4.0;
    }
    g = gradient(pts, k, x0);
    if (!improved) {
      // No representable descent step remains: stationary to machine precision.
      converged = projected_norm(box, k, x0, g) <= std::max(opt.gradient_tolerance, 1e-7 * std::max(1.0, ssr));
      break;
    }
  }
  return {k, x0, ssr, projected_norm(box, k, x0, g), converged};
}

}  // namespace

LogisticFit fit_logistic(std::span<const Point> points, FitBounds bounds, const FitOptions& opt) {
  if (points.size() < 4) throw Error(ErrorKind::kInvariant, "logistic fit needs at least 4 points");
  if (!(bounds.lo < bounds.hi)) throw Error(ErrorKind::kConfig, "fit bounds must satisfy lo < hi");
  for (const auto& p : points)
    if (!(p.y >= 0.0 && p.y <= 1.0) || !std::isfinite(p.x)) throw Error(ErrorKind::kInvariant, "rates must lie in [0, 1]");

  LogisticFit fit;
  fit.bounds = bounds;
  fit.points.assign(points.begin(), points.end());
  const double n = static_cast<double>(points.size());
  double mean = 0.0;
  for (const auto& p : points) mean += p.y;
  mean /= n;
  double sst = 0.0;
  for (const auto& p : points) sst += (p.y - mean) * (p.y - mean);

  if (sst == 0.0) {
    fit.degenerate = true;
    fit.k = 0.0;
    fit.x0 = mean >= 0.5 ? bounds.hi : bounds.lo;
    fit.ssr = sum_squared_residuals(points, fit.k, fit.x0);
    fit.r2 = 0.0;
    fit.adj_r2 = adjusted_r2(fit.r2, points.size());
    fit.rmse = std::sqrt(fit.ssr / n);
    fit.fit_class = classify_fit(fit.adj_r2);
    fit.censored = true;
    fit.converged = false;
    return fit;
  }

  struct Cell {
    double ssr, k, x0;
  };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>((opt.k_grid_steps + 1) * (opt.x0_grid_steps + 1)));
  for (int i = 0; i <= opt.k_grid_steps; ++i) {
    double k = opt.k_grid_lo + (opt.k_grid_hi - opt.k_grid_lo) * i / opt.k_grid_steps;
    for (int j = 0; j <= opt.x0_grid_steps; ++j) {
      double x0 = bounds.lo + (bounds.hi - bounds.lo) * j / opt.x0_grid_steps;
      cells.push_back({sum_squared_residuals(points, k, x0), k, x0});
    }
  }
  auto starts = std::min<std::size_t>(static_cast<std::size_t>(std::max(opt.starts, 1)), cells.size());
  std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(starts), cells.end(),
                    [](const Cell& a, const Cell& b) { return a.ssr < b.ssr; });

  Box box{-opt.k_limit, opt.k_limit, bounds.lo, bounds.hi};
  Refined best{0, 0, std::numeric_limits<double>::infinity(), 0, false};
  for (std::size_t s = 0; s < starts; ++s) {
    auto r = refine(points, box, cells[s].k, cells[s].x0, opt);
    if (r.ssr < best.ssr) best = r;
  }

  fit.k = best.k;
  fit.x0 = best.x0;
  fit.ssr = best.ssr;
  fit.converged = best.converged;
  fit.gradient_norm = best.gnorm;
  fit.r2 = 1.0 - fit.ssr / sst;
  fit.adj_r2 = adjusted_r2(fit.r2, points.size());
  fit.rmse = std::sqrt(fit.ssr / n);
  fit.fit_class = classify_fit(fit.adj_r2);
  fit.censored = std::abs(fit.x0 - bounds.lo) < kBoundEps || std::abs(fit.x0 - bounds.hi) < kBoundEps;
  return fit;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

SpearmanResult spearman(std::span<const Point> points, double alpha) {
  if (points.size() < 4) throw Error(ErrorKind::kInvariant, "Spearman test needs at least 4 points");
  SpearmanResult res;
  res.n = points.size();
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  auto rx = average_ranks(xs);
  auto ry = average_ranks(ys);
  auto constant = [](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), [&](double d) { return d == v[0]; }); };
  if (constant(rx) || constant(ry)) {
    res.degenerate = true;
    res.rho = 0.0;
    res.p_value = 1.0;
    res.significant = false;
    return res;
  }
  res.rho = pearson(rx, ry);

  if (res.n <= kExactSpearmanMaxN) {
    res.exact = true;
    std::vector<std::size_t> perm(res.n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> permuted(res.n);
    std::size_t extreme = 0, total = 0;
    const double target = std::abs(res.rho) - 1e-12;
    do {
      for (std::size_t i = 0; i < res.n; ++i) permuted[i] = ry[perm[i]];
      if (std::abs(pearson(rx, permuted)) >= target) ++extreme;
      ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));
    res.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  } else {
    double df = static_cast<double>(res.n) - 2.0;
    double r2 = res.rho * res.rho;
    if (r2 >= 1.0) {
      res.p_value = std::numeric_limits<double>::min();
    } else {
      double t = std::abs(res.rho) * std::sqrt(df / (1.0 - r2));
      boost::math::students_t dist(df);
      res.p_value = std::max(2.0 * boost::math::cdf(boost::math::complement(dist, t)), std::numeric_limits<double>::min());
    }
  }
  res.p_value = std::min(res.p_value, 1.0);
  res.significant = res.p_value < alpha;
  return res;
}

ImumEstimate imum(const LogisticFit& fit, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorKind::kConfig, "tau must lie in (0, 1)");
  ImumEstimate est;
  est.tau = tau;
  const auto& b = fit.bounds;
  if (!fit.points.empty()) {
    bool crossed = std::any_of(fit.points.begin(), fit.points.end(), [&](const Point& p) { return p.y < tau; });
    if (!crossed) {
      est.value = b.hi;
      est.censored = true;
      return est;
    }
  }
  if (std::abs(fit.k) < 1e-6) {
    est.value = b.hi;
    est.censored = true;
    return est;
  }
  double crossing = tau == 0.5 ? fit.x0 : fit.x0 + std::log(1.0 / tau - 1.0) / fit.k;
  est.value = std::clamp(crossing, b.lo, b.hi);
  est.censored = crossing <= b.lo + kBoundEps || crossing >= b.hi - kBoundEps;
  return est;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::kInvariant, "median of an empty set");
  std::sort(values.begin(), values.end());
  auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MumEstimate mum(std::span<const ImumEstimate> imums, Aggregation aggregation) {
  if (imums.empty()) throw Error(ErrorKind::kInvariant, "MUM needs at least one IMUM");
  MumEstimate m;
  m.aggregation = aggregation;
  m.task = imums[0].task;
  m.strategy = imums[0].strategy;
  m.inputs.assign(imums.begin(), imums.end());
  std::vector<double> values;
  for (const auto& e : imums) {
    values.push_back(e.value);
    if (e.censored) ++m.censored_count;
  }
  if (aggregation == Aggregation::kAcrossModels) {
    m.value = median(values);
  } else {
    m.value = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  m.censored = m.censored_count == imums.size();
  return m;
}

RateCurve RateCurve::logistic(double k, double x0, double domain_hi) {
  RateCurve c;
  c.k_ = k;
  c.x0_ = x0;
  c.domain_hi_ = domain_hi;
  return c;
}

RateCurve RateCurve::from_fit(const LogisticFit& fit, double domain_hi) { return logistic(fit.k, fit.x0, domain_hi); }

RateCurve RateCurve::raw(std::vector<Point> points) {
  if (points.empty()) throw Error(ErrorKind::kInvariant, "raw curve needs points");
  std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
  RateCurve c;
  c.raw_ = true;
  c.domain_hi_ = points.back().x;
  c.points_ = std::move(points);
  return c;
}

RateCurve RateCurve::constant(double value, double domain_hi) {
  RateCurve c;
  c.constant_ = value;
  c.domain_hi_ = domain_hi;
  return c;
}

double RateCurve::operator()(double d) const {
  if (constant_ >= 0.0) return constant_;
  if (!raw_) return mumkit::logistic(d, k_, x0_);
  if (d <= points_.front().x) return points_.front().y;
  if (d >= points_.back().x) return points_.back().y;
  auto it = std::upper_bound(points_.begin(), points_.end(), d, [](double v, const Point& p) { return v < p.x; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  double t = (d - lo.x) / (hi.x - lo.x);
  return lo.y + t * (hi.y - lo.y);
}

TradeoffResult tradeoff(const RateCurve& understanding, const RateCurve& detection, double grid_step) {
  if (!(grid_step > 0)) throw Error(ErrorKind::kConfig, "grid step must be positive");
  if (std::abs(understanding.domain_hi() - detection.domain_hi()) > 1e-9)
    throw Error(ErrorKind::kInvariant, "understanding and detection curves cover different level ranges");
  if (understanding.is_raw() && detection.is_raw()) {
    const auto& a = understanding.points();
    const auto& b = detection.points();
    bool same = a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](const Point& p, const Point& q) { return p.x == q.x; });
    if (!same) throw Error(ErrorKind::kInvariant, "understanding and detection series use different levels");
  }
  const double hi = understanding.domain_hi();
  const auto steps = static_cast<long>(std::floor(hi / grid_step + 1e-9));
  TradeoffResult best{0.0, -std::numeric_limits<double>::infinity()};
  for (long i = 0; i <= steps; ++i) {
    double d = std::min(static_cast<double>(i) * grid_step, hi);
    double j = understanding(d) * (1.0 - detection(d));
    if (j > best.objective) best = {d, j};
  }
  return best;
}

PerItemImum per_item_imum(std::span<const int> verdicts, FitBounds bounds, double tau) {
  if (verdicts.empty() || verdicts[0] != 1)
    throw Error(ErrorKind::kState, "item is not positive at level 0 and is excluded from per-item analysis");
  std::vector<Point> pts;
  for (std::size_t l = 0; l < verdicts.size(); ++l) pts.push_back({static_cast<double>(l), verdicts[l] > 0 ? 1.0 : 0.0});
  PerItemImum out;
  out.fit = fit_logistic(pts, bounds);
  out.estimate = imum(out.fit, tau);
  std::size_t first_zero_run = verdicts.size();
  for (std::size_t l = verdicts.size(); l-- > 1;) {
    if (verdicts[l] > 0) break;
    first_zero_run = l;
  }
  if (first_zero_run == verdicts.size()) {
    out.step_crossing = bounds.hi;
    out.step_censored = true;
  } else {
    out.step_crossing = static_cast<double>(first_zero_run) - 0.5;
  }
  return out;
}

}  // namespace mumkit
