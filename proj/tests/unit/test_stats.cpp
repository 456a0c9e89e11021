#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mumkit/error.hpp"
#include "mumkit/stats.hpp"

using namespace mumkit;

namespace {

std::vector<Point> logistic_points(double k, double x0, int levels = 6) {
  std::vector<Point> pts;
  for (int l = 0; l < levels; ++l) {
    double x = l;
    pts.push_back({x, 1.0 / (1.0 + std::exp(k * (x - x0)))});
  }
  return pts;
}

// Rank by counting: rank(i) = 1 + #less + (#equal - 1) / 2.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

double oracle_corr(const std::vector<double>& a, const std::vector<double>& b) {
  double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Two-sided exact p-value: share of orderings of the y ranks whose |rho|
// reaches the observed one.
double oracle_exact_p(const std::vector<double>& x, const std::vector<double>& y) {
  auto rx = oracle_ranks(x);
  auto ry = oracle_ranks(y);
  double observed = std::abs(oracle_corr(rx, ry));
  std::vector<std::size_t> perm(y.size());
  std::iota(perm.begin(), perm.end(), 0);
  double hits = 0, total = 0;
  do {
    std::vector<double> py;
    for (auto i : perm) py.push_back(ry[i]);
    hits += std::abs(oracle_corr(rx, py)) >= observed - 1e-12;
    total += 1;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return hits / total;
}

// Bisection for the level where the logistic falls through tau.
double bisect_crossing(double k, double x0, double tau) {
  double lo = -50, hi = 50;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    bool above = logistic(mid, k, x0) > tau;
    if ((k > 0) == above) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("adjusted r2 reproduces published values") {
  CHECK(std::abs(adjusted_r2(0.9959, 6, 2) - 0.9932) <= 5e-5);
  CHECK(std::abs(adjusted_r2(0.9994, 6, 2) - 0.9990) <= 5e-5);
  CHECK(adjusted_r2(1.0, 6, 2) == 1.0);
  for (double r2 : {-0.5, 0.0, 0.3, 0.9, 0.999}) CHECK(adjusted_r2(r2, 6, 2) < r2);
  CHECK_THROWS(adjusted_r2(0.5, 3, 2));
}

TEST_CASE("fit classes") {
  CHECK(classify_fit(0.9932) == FitClass::kStrong);
  CHECK(classify_fit(0.4579) == FitClass::kModerate);
  CHECK(classify_fit(-1.065) == FitClass::kPoor);
  CHECK(classify_fit(0.90) == FitClass::kModerate);
  CHECK(classify_fit(0.40) == FitClass::kModerate);
  CHECK(classify_fit(0.3999) == FitClass::kPoor);
}

TEST_CASE("majority fit class breaks ties toward the weaker class") {
  using F = FitClass;
  std::vector<F> a = {F::kStrong, F::kStrong, F::kModerate, F::kModerate, F::kPoor};
  CHECK(majority_fit_class(a) == F::kModerate);
  std::vector<F> b = {F::kStrong, F::kStrong, F::kStrong, F::kPoor, F::kPoor, F::kPoor, F::kModerate};
  CHECK(majority_fit_class(b) == F::kPoor);
  std::vector<F> c = {F::kStrong, F::kStrong, F::kModerate};
  CHECK(majority_fit_class(c) == F::kStrong);
}

TEST_CASE("noise-free logistic points are recovered") {
  auto pts = logistic_points(1.4799, 2.7102);
  auto fit = fit_logistic(pts);
  CHECK(std::abs(fit.k - 1.4799) < 1e-3);
  CHECK(std::abs(fit.x0 - 2.7102) < 1e-3);
  CHECK(fit.r2 >= 0.9999);
  CHECK(fit.fit_class == FitClass::kStrong);
  CHECK_FALSE(fit.censored);
  CHECK(std::abs(fit(fit.x0) - 0.5) < 1e-9);
}

TEST_CASE("rising series fit with negative k") {
  auto fit = fit_logistic(logistic_points(-2.0, 1.5));
  CHECK(fit.k == doctest::Approx(-2.0).epsilon(1e-3));
  CHECK(fit.x0 == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("converged fits are local optima") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> k_dist(0.4, 4.0), x_dist(0.5, 4.5), noise(-0.05, 0.05);
  for (int t = 0; t < 30; ++t) {
    auto pts = logistic_points(k_dist(rng), x_dist(rng));
    for (auto& p : pts) p.y = std::clamp(p.y + noise(rng), 0.0, 1.0);
    auto fit = fit_logistic(pts);
    if (!fit.converged || fit.censored) continue;
    for (double dk : {-1e-3, 0.0, 1e-3})
      for (double dx : {-1e-3, 0.0, 1e-3}) CHECK(sum_squared_residuals(pts, fit.k + dk, fit.x0 + dx) >= fit.ssr - 1e-9);
    CHECK(fit.rmse >= 0.0);
    CHECK(fit.adj_r2 == doctest::Approx(adjusted_r2(fit.r2, 6, 2)));
  }
}

TEST_CASE("x0 stays within 0.2 under small additive noise") {
  std::mt19937_64 rng(20240607);
  std::normal_distribution<double> noise(0.0, 0.02);
  int within = 0;
  for (int t = 0; t < 100; ++t) {
    auto pts = logistic_points(1.4799, 2.7102);
    for (auto& p : pts) p.y = std::clamp(p.y + noise(rng), 0.0, 1.0);
    within += std::abs(fit_logistic(pts).x0 - 2.7102) <= 0.2;
  }
  CHECK(within >= 95);
}

TEST_CASE("flat and short series") {
  std::vector<Point> flat;
  for (int l = 0; l < 6; ++l) flat.push_back({double(l), 0.5});
  auto fit = fit_logistic(flat);
  CHECK(fit.fit_class == FitClass::kPoor);
  CHECK(fit.censored);
  CHECK(fit.degenerate);
  CHECK(fit.r2 == 0.0);
  std::vector<Point> three = {{0, 1}, {1, 0.5}, {2, 0}};
  CHECK_THROWS_AS(fit_logistic(three), Error);
  std::vector<Point> out_of_range = {{0, 1.2}, {1, 0.5}, {2, 0}, {3, 0}};
  CHECK_THROWS_AS(fit_logistic(out_of_range), Error);
}

TEST_CASE("x0 is confined to the fit bounds") {
  std::vector<Point> never = {{0, 1}, {1, 1}, {2, 0.98}, {3, 0.97}, {4, 0.95}, {5, 0.93}};
  auto fit = fit_logistic(never, {-1.0, 6.0});
  CHECK(fit.x0 <= 6.0);
  CHECK(fit.x0 >= -1.0);
  auto est = imum(fit);
  CHECK(est.censored);
  CHECK(est.value == 6.0);
}

TEST_CASE("imum at tau 0.5 is x0 for either sign of k") {
  for (double k : {-3.0, -0.7, 0.7, 1.4799, 5.0}) {
    LogisticFit fit;
    fit.k = k;
    fit.x0 = 2.7102;
    auto est = imum(fit, 0.5);
    CHECK(std::abs(est.value - 2.7102) < 1e-9);
    CHECK_FALSE(est.censored);
  }
}

TEST_CASE("imum at other thresholds matches bisection") {
  auto fit = fit_logistic(logistic_points(1.4799, 2.7102));
  for (double tau : {0.25, 0.75}) {
    auto est = imum(fit, tau);
    CHECK(std::abs(est.value - bisect_crossing(fit.k, fit.x0, tau)) < 1e-6);
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> k_dist(0.3, 4.0), x_dist(1.0, 4.0), t_dist(0.1, 0.9);
  for (int i = 0; i < 50; ++i) {
    LogisticFit f;
    f.k = k_dist(rng);
    f.x0 = x_dist(rng);
    f.bounds = {-100, 100};
    double tau = t_dist(rng);
    CHECK(std::abs(imum(f, tau).value - bisect_crossing(f.k, f.x0, tau)) < 1e-6);
  }
}

TEST_CASE("imum censoring") {
  LogisticFit flat;
  flat.k = 1e-8;
  flat.x0 = 2.0;
  flat.bounds = {-1, 5.1};
  auto est = imum(flat);
  CHECK(est.censored);
  CHECK(est.value == 5.1);

  LogisticFit late;
  late.k = 1.0;
  late.x0 = 9.0;
  late.bounds = {-1, 6.0};
  est = imum(late);
  CHECK(est.censored);
  CHECK(est.value == 6.0);
  CHECK_THROWS_AS(imum(late, 1.0), Error);
}

TEST_CASE("spearman on a strictly decreasing series") {
  std::vector<Point> pts;
  for (int l = 0; l < 6; ++l) pts.push_back({double(l), 1.0 - 0.15 * l});
  auto s = spearman(pts);
  CHECK(s.rho == doctest::Approx(-1.0));
  CHECK(std::abs(s.p_value - 2.0 / 720.0) < 1e-9);
  CHECK(s.exact);
  CHECK(s.significant);
}

TEST_CASE("exact spearman matches brute-force enumeration") {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> value(0, 9);
  for (int t = 0; t < 50; ++t) {
    std::vector<Point> pts;
    std::vector<double> xs, ys;
    for (int l = 0; l < 6; ++l) {
      double y = value(rng) / 10.0;
      pts.push_back({double(l), y});
      xs.push_back(l);
      ys.push_back(y);
    }
    auto s = spearman(pts);
    if (std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys[0]; })) {
      CHECK(s.degenerate);
      continue;
    }
    CHECK(s.rho == doctest::Approx(oracle_corr(oracle_ranks(xs), oracle_ranks(ys))).epsilon(1e-12));
    CHECK(std::abs(s.p_value - oracle_exact_p(xs, ys)) < 1e-9);
  }
}

TEST_CASE("average ranks with one tie") {
  std::vector<double> v = {0.9, 0.5, 0.5, 0.1};
  CHECK(average_ranks(v) == std::vector<double>{4.0, 2.5, 2.5, 1.0});
  std::vector<Point> pts = {{0, 0.9}, {1, 0.5}, {2, 0.5}, {3, 0.1}, {4, 0.0}, {5, 0.2}};
  std::vector<double> xs = {0, 1, 2, 3, 4, 5}, ys = {0.9, 0.5, 0.5, 0.1, 0.0, 0.2};
  CHECK(spearman(pts).rho == doctest::Approx(oracle_corr(oracle_ranks(xs), oracle_ranks(ys))));
}

TEST_CASE("spearman is invariant under monotone transforms") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<Point> a, b;
    for (int l = 0; l < 6; ++l) {
      double y = u(rng);
      a.push_back({double(l), y});
      b.push_back({double(l), std::exp(3 * y) - 7});
    }
    auto sa = spearman(a), sb = spearman(b);
    CHECK(sa.rho == doctest::Approx(sb.rho));
    CHECK(sa.p_value == doctest::Approx(sb.p_value));
  }
}

TEST_CASE("spearman degenerate, approximate, and too short") {
  std::vector<Point> flat;
  for (int l = 0; l < 6; ++l) flat.push_back({double(l), 0.3});
  auto s = spearman(flat);
  CHECK(s.degenerate);
  CHECK(s.rho == 0.0);
  CHECK(s.p_value == 1.0);
  std::vector<Point> long_series;
  for (int l = 0; l < 12; ++l) long_series.push_back({double(l), 1.0 / (1 + l)});
  auto t = spearman(long_series);
  CHECK_FALSE(t.exact);
  CHECK(t.rho == doctest::Approx(-1.0));
  CHECK(t.p_value < 1e-6);
  CHECK(t.p_value > 0.0);
  std::vector<Point> three = {{0, 1}, {1, 0}, {2, 0.5}};
  CHECK_THROWS_AS(spearman(three), Error);
}

TEST_CASE("mum aggregation") {
  std::vector<ImumEstimate> seven;
  for (double v : {1.7, 3.7, 2.0, 2.7, 2.6, 2.2, 1.7}) {
    ImumEstimate e;
    e.value = v;
    seven.push_back(e);
  }
  auto m = mum(seven, Aggregation::kAcrossModels);
  CHECK(m.value == doctest::Approx(2.2));
  CHECK_FALSE(m.censored);
  std::reverse(seven.begin(), seven.end());
  CHECK(mum(seven, Aggregation::kAcrossModels).value == m.value);
  CHECK(mum(seven, Aggregation::kAcrossItems).value == doctest::Approx(16.6 / 7));

  std::vector<ImumEstimate> one(1);
  one[0].value = 3.3;
  CHECK(mum(one, Aggregation::kAcrossItems).value == 3.3);

  std::vector<ImumEstimate> capped(3);
  for (auto& e : capped) {
    e.value = 5.1;
    e.censored = true;
  }
  auto c = mum(capped, Aggregation::kAcrossModels);
  CHECK(c.censored);
  CHECK(c.value == 5.1);
  CHECK(c.censored_count == 3);
  capped[0] = seven[0];
  CHECK_FALSE(mum(capped, Aggregation::kAcrossModels).censored);
  CHECK(mum(capped, Aggregation::kAcrossModels).censored_count == 2);
}

TEST_CASE("tradeoff trivial cases") {
  auto ones = RateCurve::constant(1.0, 5.0);
  CHECK(tradeoff(ones, RateCurve::logistic(1.0, 2.0, 5.0)).d_star == doctest::Approx(5.0));
  auto zero = tradeoff(RateCurve::logistic(1.0, 3.0, 5.0), ones);
  CHECK(zero.d_star == 0.0);
  CHECK(zero.objective == 0.0);
  CHECK_THROWS_AS(tradeoff(ones, RateCurve::constant(0.5, 6.0)), Error);
}

TEST_CASE("tradeoff matches a fine brute-force grid") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> k_dist(0.3, 3.0), x_dist(0.5, 4.5);
  for (int t = 0; t < 25; ++t) {
    double uk = k_dist(rng), ux = x_dist(rng), dk = k_dist(rng), dx = x_dist(rng);
    auto u = RateCurve::logistic(uk, ux, 5.0);
    auto d = RateCurve::logistic(dk, dx, 5.0);
    double best_d = 0, best_j = -1;
    for (int i = 0; i <= 50000; ++i) {
      double x = i * 1e-4;
      double j = logistic(x, uk, ux) * (1 - logistic(x, dk, dx));
      if (j > best_j) {
        best_j = j;
        best_d = x;
      }
    }
    auto r = tradeoff(u, d);
    CHECK(std::abs(r.d_star - best_d) <= 0.01 + 1e-9);
    CHECK(r.objective <= best_j + 1e-12);
  }
}

TEST_CASE("tradeoff on raw series interpolates linearly") {
  std::vector<Point> u = {{0, 1}, {1, 1}, {2, 0.8}, {3, 0.4}, {4, 0.2}, {5, 0.1}};
  std::vector<Point> d = {{0, 1}, {1, 0.6}, {2, 0.2}, {3, 0.1}, {4, 0.0}, {5, 0.0}};
  auto r = tradeoff(RateCurve::raw(u), RateCurve::raw(d));
  CHECK(r.d_star == doctest::Approx(2.0));
  CHECK(r.objective == doctest::Approx(0.64));
  std::vector<Point> shifted = {{0, 1}, {1.5, 0.5}, {2, 0.2}, {3, 0.1}, {4, 0.0}, {5, 0.0}};
  CHECK_THROWS_AS(tradeoff(RateCurve::raw(u), RateCurve::raw(shifted)), Error);
}

TEST_CASE("per-item imum and step crossing") {
  std::vector<int> step = {1, 1, 1, 0, 0, 0};
  auto p = per_item_imum(step);
  CHECK(p.step_crossing == 2.5);
  CHECK_FALSE(p.step_censored);
  CHECK(p.estimate.value == doctest::Approx(2.5).epsilon(0.05));

  std::vector<int> flicker = {1, 0, 1, 1, 0, 0};
  CHECK(per_item_imum(flicker).step_crossing == 3.5);

  std::vector<int> always = {1, 1, 1, 1, 1, 1};
  auto a = per_item_imum(always, {-1, 5.1});
  CHECK(a.estimate.censored);
  CHECK(a.step_censored);
  CHECK(a.estimate.value == 5.1);

  std::vector<int> never = {0, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS(per_item_imum(never), Error);
}
