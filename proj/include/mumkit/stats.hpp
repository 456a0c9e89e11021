#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mumkit/strategy.hpp"

namespace mumkit {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Bounds on the inflection level x0. Default [-1, max level + 1].
struct FitBounds {
  double lo = -1.0;
  double hi = 6.0;
};

enum class FitClass { kStrong, kModerate, kPoor };

std::string_view key(FitClass c);
/// "S" / "M" / "P".
std::string_view short_label(FitClass c);

/// y(x) = 1 / (1 + exp(k (x - x0))). Declining series have k > 0.
double logistic(double x, double k, double x0);

/// 1 - (1 - r2) (n - 1) / (n - p - 1).
double adjusted_r2(double r2, std::size_t n, std::size_t p = 2);

/// Strong iff adj_r2 > 0.90; Moderate iff 0.40 <= adj_r2 <= 0.90; Poor otherwise.
FitClass classify_fit(double adj_r2);

/// Mode of the labels; ties resolve toward the weaker class.
FitClass majority_fit_class(std::span<const FitClass> labels);

struct FitOptions {
  double k_grid_lo = -10.0;
  double k_grid_hi = 10.0;
  int k_grid_steps = 80;
  int x0_grid_steps = 120;
  double k_limit = 50.0;            // |k| cap during refinement
  double gradient_tolerance = 1e-9; // on the projected SSR gradient
  int max_iterations = 500;
  int starts = 3;                   // best grid cells refined
};

struct LogisticFit {
  double k = 0.0;
  double x0 = 0.0;
  double ssr = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double rmse = 0.0;
  FitClass fit_class = FitClass::kPoor;
  bool censored = false;    // x0 within 1e-6 of a bound
  bool degenerate = false;  // constant series; r2 = 0 by convention
  bool converged = false;
  double gradient_norm = 0.0;
  FitBounds bounds;
  std::vector<Point> points;

  double operator()(double x) const { return logistic(x, k, x0); }
};

double sum_squared_residuals(std::span<const Point> points, double k, double x0);

/// Least-squares logistic fit: coarse grid over (k, x0) followed by projected
/// Levenberg-Marquardt refinement from the best grid cells. Requires at least
/// 4 points with rates in [0, 1].
LogisticFit fit_logistic(std::span<const Point> points, FitBounds bounds = {}, const FitOptions& options = {});

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  bool significant = false;
  bool exact = false;       // permutation p-value
  bool degenerate = false;  // constant input; rho = 0, p = 1
  std::size_t n = 0;
};

/// 1-based ranks; ties receive the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);
double pearson(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kExactSpearmanMaxN = 8;

/// Spearman rho between x and y with a two-sided p-value: exact over all n!
/// permutations for n <= 8, Student-t approximation above. Requires n >= 4.
SpearmanResult spearman(std::span<const Point> points, double alpha = 0.05);

struct ImumEstimate {
  Task task = Task::kDetection;
  std::string evaluator_id;
  Strategy strategy = Strategy::kCodeWord;
  std::string item_id;  // set for per-item estimates
  double tau = 0.5;
  double value = 0.0;
  bool censored = false;
};

/// Level at which the fitted curve crosses tau: x0 + ln(1/tau - 1) / k
/// (exactly x0 at tau = 0.5), clamped to the fit bounds. Censored when the
/// crossing falls outside the bounds, |k| < 1e-6, or the observed series
/// never drops below tau (reported at the upper bound).
ImumEstimate imum(const LogisticFit& fit, double tau = 0.5);

enum class Aggregation { kAcrossModels, kAcrossItems };

std::string_view key(Aggregation a);

struct MumEstimate {
  Task task = Task::kDetection;
  Strategy strategy = Strategy::kCodeWord;
  Aggregation aggregation = Aggregation::kAcrossModels;
  double value = 0.0;
  bool censored = false;
  std::size_t censored_count = 0;
  std::vector<ImumEstimate> inputs;
};

double median(std::vector<double> values);

/// Across models: median of the IMUMs. Across items: mean. Censored inputs
/// enter at their bound; the MUM is censored only when every input is.
MumEstimate mum(std::span<const ImumEstimate> imums, Aggregation aggregation);

/// A rate curve over levels: either a fitted logistic or raw points joined by
/// linear interpolation.
class RateCurve {
 public:
  static RateCurve logistic(double k, double x0, double domain_hi);
  static RateCurve from_fit(const LogisticFit& fit, double domain_hi);
  static RateCurve raw(std::vector<Point> points);
  static RateCurve constant(double value, double domain_hi);

  double operator()(double d) const;
  double domain_hi() const { return domain_hi_; }
  bool is_raw() const { return raw_; }
  const std::vector<Point>& points() const { return points_; }

 private:
  bool raw_ = false;
  double k_ = 0.0;
  double x0_ = 0.0;
  double constant_ = -1.0;
  double domain_hi_ = 5.0;
  std::vector<Point> points_;
};

struct TradeoffResult {
  double d_star = 0.0;
  double objective = 0.0;
};

/// Maximizes U(d) (1 - D(d)) on a grid over [0, max level]; the smallest
/// maximizer wins ties. Curves must share a domain.
TradeoffResult tradeoff(const RateCurve& understanding, const RateCurve& detection, double grid_step = 0.01);

struct PerItemImum {
  LogisticFit fit;
  ImumEstimate estimate;
  double step_crossing = 0.0;  // midpoint of last 1 and first 0 of the final run of 0s
  bool step_censored = false;
};

/// IMUM for a single item from its 0/1 verdicts at levels 0..N. The item must
/// be positive at level 0 (it passed validation); otherwise it is excluded
/// with an error.
PerItemImum per_item_imum(std::span<const int> verdicts_by_level, FitBounds bounds = {}, double tau = 0.5);

}  // namespace mumkit
