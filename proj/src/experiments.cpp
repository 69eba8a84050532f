#include "qavg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qavg/errors.hpp"

namespace qavg {

namespace {

using u64 = std::uint64_t;

// Runs fn(0..count-1) on a small pool; used for independent grid points.
// Results must be written by index so ordering never depends on scheduling.
// The first exception thrown by fn is rethrown after all workers join.
template <typename Fn>
void for_each_index(std::size_t count, Fn&& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = std::min<std::size_t>(count, hw == 0 ? 1 : hw);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count && !failed.load();
           i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<Rational> uniform_grid(const Rational& lo, const Rational& hi, std::uint32_t grid) {
  if (grid < 1) throw std::invalid_argument("grid must have at least one point");
  if (grid == 1) {
    if (lo != hi) throw std::invalid_argument("grid of one point needs alpha_lo == alpha_hi");
    return {lo};
  }
  if (!(lo < hi)) throw std::invalid_argument("alpha_lo must be < alpha_hi");
  std::vector<Rational> points;
  points.reserve(grid);
  Rational span = hi - lo;
  Rational denom(static_cast<long long>(grid) - 1);
  for (std::uint32_t i = 0; i < grid; ++i)
    points.push_back(lo + span * Rational(static_cast<long long>(i)) / denom);
  return points;
}

bool all_ones(const SequenceRun& run) {
  return std::all_of(run.values.begin(), run.values.end(), [](u64 v) { return v == 1; });
}

}  // namespace

std::string phase_name(Phase phase) {
  switch (phase) {
    case Phase::kFrozen: return "frozen";
    case Phase::kCriticalSqrt: return "critical_sqrt";
    case Phase::kLinear: return "linear";
    case Phase::kBreakdown: return "breakdown";
    case Phase::kUnclassified: return "unclassified";
  }
  return "unclassified";
}

std::vector<CurvePoint> sample_curve(const SequenceRun& run, u64 stride) {
  const u64 n_max = run.size();
  if (n_max == 0) return {};
  if (stride == 0) stride = std::max<u64>(1, n_max / 4096);
  std::vector<CurvePoint> curve;
  curve.reserve(n_max / stride + 2);
  for (u64 n = 1; n <= n_max; n += stride)
    curve.push_back({n, run.at(n), static_cast<double>(run.at(n)) / critical_asymptote(n)});
  if (curve.back().n != n_max)
    curve.push_back({n_max, run.at(n_max),
                     static_cast<double>(run.at(n_max)) / critical_asymptote(n_max)});
  return curve;
}

std::vector<CurvePoint> critical_scaling_curve(std::uint32_t m, u64 n_terms, u64 stride) {
  RecursionParams params{m, Rational(1), MeanKind::arithmetic()};
  return sample_curve(run(params, n_terms), stride);
}

SlopeEstimate estimate_slope(const SequenceRun& run, double window_fraction) {
  if (!run.complete()) throw std::invalid_argument("slope estimation needs a complete run");
  if (!(window_fraction > 0.0 && window_fraction < 1.0))
    throw std::invalid_argument("window_fraction must lie in (0,1)");
  const u64 n_max = run.size();
  u64 start = static_cast<u64>(std::ceil((1.0 - window_fraction) * static_cast<double>(n_max)));
  start = std::max<u64>(start, 1);
  if (start + 1 > n_max) throw std::invalid_argument("slope window needs at least two points");

  const u64 count = n_max - start + 1;
  long double mean_n = (static_cast<long double>(start) + static_cast<long double>(n_max)) / 2.0L;
  long double sum_q = 0.0L;
  long double ratio_sum = 0.0L;
  for (u64 n = start; n <= n_max; ++n) {
    sum_q += static_cast<long double>(run.at(n));
    ratio_sum += static_cast<long double>(run.at(n)) / static_cast<long double>(n);
  }
  long double mean_q = sum_q / static_cast<long double>(count);

  long double sxx = 0.0L;
  long double sxy = 0.0L;
  for (u64 n = start; n <= n_max; ++n) {
    long double dx = static_cast<long double>(n) - mean_n;
    sxx += dx * dx;
    sxy += dx * (static_cast<long double>(run.at(n)) - mean_q);
  }
  long double slope = sxy / sxx;
  long double intercept = mean_q - slope * mean_n;

  long double worst = 0.0L;
  for (u64 n = start; n <= n_max; ++n) {
    long double resid = std::abs(static_cast<long double>(run.at(n)) -
                                 (intercept + slope * static_cast<long double>(n)));
    worst = std::max(worst, resid / static_cast<long double>(n));
  }

  SlopeEstimate est;
  est.window_start = start;
  est.window_end = n_max;
  est.lsq_slope = static_cast<double>(slope);
  est.lsq_intercept = static_cast<double>(intercept);
  est.tail_mean_ratio = static_cast<double>(ratio_sum / static_cast<long double>(count));
  est.max_abs_residual_ratio = static_cast<double>(worst);
  return est;
}

BreakdownReport detect_breakdown(const RecursionParams& params, u64 horizon) {
  SequenceRun r = run(params, horizon);
  return BreakdownReport{params, horizon, r.breakdown};
}

AlphaStarScan scan_alpha_star(std::uint32_t m, const Rational& alpha_lo, const Rational& alpha_hi,
                              std::uint32_t grid, u64 horizon) {
  std::vector<Rational> points = uniform_grid(alpha_lo, alpha_hi, grid);
  for (const Rational& alpha : points)
    if (!alpha.is_positive()) throw std::invalid_argument("scan grid contains alpha <= 0");

  AlphaStarScan out;
  out.m = m;
  out.horizon = horizon;
  out.reports.resize(points.size());
  for_each_index(points.size(), [&](std::size_t i) {
    out.reports[i] =
        detect_breakdown(RecursionParams{m, points[i], MeanKind::arithmetic()}, horizon);
  });

  for (std::size_t i = 0; i < out.reports.size(); ++i) {
    const BreakdownReport& rep = out.reports[i];
    if (rep.survived()) {
      out.largest_surviving = points[i];
      if (out.smallest_breaking.has_value() && !out.monotonicity_violation.has_value())
        out.monotonicity_violation = std::make_pair(*out.smallest_breaking, points[i]);
    } else if (!out.smallest_breaking.has_value()) {
      out.smallest_breaking = points[i];
    }
  }
  return out;
}

PhasePoint classify_run(const SequenceRun& run, const Thresholds& thresholds) {
  PhasePoint point;
  point.alpha = run.params.alpha;
  point.m = run.params.m;
  point.mean = run.params.mean;
  point.n_terms = run.n_requested;

  if (!run.complete()) {
    point.phase = Phase::kBreakdown;
    point.breakdown = run.breakdown;
    return point;
  }

  const u64 n_max = run.size();
  double final_sqrt = static_cast<double>(run.at(n_max)) / critical_asymptote(n_max);
  double final_linear = static_cast<double>(run.at(n_max)) / static_cast<double>(n_max);
  point.final_ratio_sqrt = final_sqrt;
  point.final_ratio_linear = final_linear;

  if (all_ones(run)) {
    point.phase = Phase::kFrozen;
    return point;
  }
  if (std::abs(final_sqrt - 1.0) <= thresholds.tau_sqrt) {
    point.phase = Phase::kCriticalSqrt;
    return point;
  }

  bool have_slope = false;
  if (n_max >= 4) {
    point.slope = estimate_slope(run, thresholds.window_fraction);
    have_slope = true;
  }
  if (have_slope && run.params.alpha > Rational(1)) {
    double predicted = predicted_slope(run.params.alpha).to_double();
    // "Bounded away from zero" pinned as final_ratio_linear >= tau_lin.
    if (std::abs(point.slope->lsq_slope - predicted) <= thresholds.tau_lin &&
        final_linear >= thresholds.tau_lin) {
      point.phase = Phase::kLinear;
      return point;
    }
  }
  point.phase = Phase::kUnclassified;
  return point;
}

PhasePoint classify_phase(const RecursionParams& params, u64 n_terms,
                          const Thresholds& thresholds) {
  return classify_run(run(params, n_terms), thresholds);
}

std::vector<PhaseScanResult> phase_scan(std::uint32_t m, const Rational& alpha_lo,
                                        const Rational& alpha_hi, std::uint32_t grid,
                                        u64 n_terms, const Thresholds& thresholds) {
  std::vector<Rational> points = uniform_grid(alpha_lo, alpha_hi, grid);
  std::vector<PhaseScanResult> rows(points.size());
  for_each_index(points.size(), [&](std::size_t i) {
    rows[i].alpha = points[i];
    try {
      rows[i].point =
          classify_phase(RecursionParams{m, points[i], MeanKind::arithmetic()}, n_terms,
                         thresholds);
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });
  return rows;
}

std::vector<UniversalityResult> universality_suite(std::uint32_t m,
                                                   std::span<const MeanKind> p_set, u64 n_terms,
                                                   const Thresholds& thresholds) {
  std::vector<UniversalityResult> rows(p_set.size());
  for_each_index(p_set.size(), [&](std::size_t i) {
    rows[i].mean = p_set[i];
    try {
      SequenceRun r = run(RecursionParams{m, Rational(1), p_set[i]}, n_terms);
      rows[i].point = classify_run(r, thresholds);
      rows[i].curve = sample_curve(r);
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });
  return rows;
}

SlopeConstraintCheck slope_constraint_check(const SequenceRun& run, const Rational& alpha,
                                            double window_fraction, double delta_slack) {
  if (!run.complete()) throw std::invalid_argument("constraint check needs a complete run");
  if (!(window_fraction > 0.0 && window_fraction < 1.0))
    throw std::invalid_argument("window_fraction must lie in (0,1)");

  const u64 n_max = run.size();
  u64 start = static_cast<u64>(std::ceil((1.0 - window_fraction) * static_cast<double>(n_max)));
  start = std::max<u64>(start, 1);

  SlopeConstraintCheck check;
  check.window_start = start;
  check.window_end = n_max;
  check.delta_slack = delta_slack;
  check.predicted = predicted_slope(alpha).to_double();

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (u64 n = start; n <= n_max; ++n) {
    double ratio = static_cast<double>(run.at(n)) / static_cast<double>(n);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  check.ell_hat = lo;
  check.cap_l_hat = hi;
  // Finite-sample surrogate of the hypothesis 0 < ell <= L < 1: the tail
  // ratios must stay clear of both endpoints by the slack. A frozen run
  // (ratios ~ 1/n) fails here rather than producing a vacuous bracket.
  check.precondition_ok = lo > delta_slack && hi < 1.0 - delta_slack;
  check.pass = check.precondition_ok && lo - delta_slack <= check.predicted &&
               check.predicted <= hi + delta_slack;
  return check;
}

}  // namespace qavg
