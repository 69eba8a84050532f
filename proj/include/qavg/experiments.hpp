#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qavg/engine.hpp"
#include "qavg/means.hpp"
#include "qavg/rational.hpp"
#include "qavg/theory.hpp"

namespace qavg {

/// One sample of the normalized growth curve: Q(n) and Q(n)/sqrt(2n).
struct CurvePoint {
  std::uint64_t n = 0;
  std::uint64_t q = 0;
  double ratio_sqrt = 0.0;
};

/// Tail-window growth statistics of a completed run.
struct SlopeEstimate {
  std::uint64_t window_start = 0;
  std::uint64_t window_end = 0;
  double lsq_slope = 0.0;
  double lsq_intercept = 0.0;
  double tail_mean_ratio = 0.0;        // mean of Q(n)/n over the window
  double max_abs_residual_ratio = 0.0; // max |Q(n) - fit(n)| / n over the window
};

enum class Phase { kFrozen, kCriticalSqrt, kLinear, kBreakdown, kUnclassified };

std::string phase_name(Phase phase);

/// Classification of one (alpha, m, mean) point plus the metrics it was
/// based on. Ratio metrics are absent for broken runs.
struct PhasePoint {
  Rational alpha;
  std::uint32_t m = 1;
  MeanKind mean = MeanKind::arithmetic();
  std::uint64_t n_terms = 0;
  Phase phase = Phase::kUnclassified;
  std::optional<double> final_ratio_sqrt;    // Q(N) / sqrt(2N)
  std::optional<double> final_ratio_linear;  // Q(N) / N
  std::optional<SlopeEstimate> slope;
  std::optional<Breakdown> breakdown;
};

/// Outcome of running one parameter point to a horizon.
struct BreakdownReport {
  RecursionParams params;
  std::uint64_t horizon = 0;
  std::optional<Breakdown> breakdown;

  bool survived() const { return !breakdown.has_value(); }
};

/// Classification thresholds. The defaults are pinned here; every CLI
/// command accepts overrides and manifests record what was in effect.
struct Thresholds {
  double tau_sqrt = 0.02;        // |Q(N)/sqrt(2N) - 1| bound for the critical phase
  double tau_lin = 0.005;        // |slope - (1 - 1/alpha)| bound for the linear phase
  double delta_slack = 0.01;     // slack in the slope-constraint bracket
  double window_fraction = 0.5;  // tail window for slope statistics
};

/// Normalized growth curve of the critical recursion (alpha = 1, arithmetic
/// mean). stride 0 picks max(1, n_terms / 4096); the final point n = n_terms
/// is always included.
std::vector<CurvePoint> critical_scaling_curve(std::uint32_t m, std::uint64_t n_terms,
                                               std::uint64_t stride = 0);

/// Samples an existing run on the same grid critical_scaling_curve uses.
std::vector<CurvePoint> sample_curve(const SequenceRun& run, std::uint64_t stride = 0);

/// Least-squares line through (n, Q(n)) over the tail window
/// [ceil((1 - f) * N), N], plus the window mean of Q(n)/n. Requires a
/// complete run, f in (0,1), and at least two window points.
SlopeEstimate estimate_slope(const SequenceRun& run, double window_fraction);

/// Runs the engine to the horizon and reports survival or the first failure.
BreakdownReport detect_breakdown(const RecursionParams& params, std::uint64_t horizon);

/// Survival scan over a uniform rational alpha grid at a fixed horizon.
/// The bracket fields are horizon-stamped empirical observations, not limits.
struct AlphaStarScan {
  std::uint32_t m = 1;
  std::uint64_t horizon = 0;
  std::vector<BreakdownReport> reports;  // ordered by alpha, ascending
  std::optional<Rational> largest_surviving;
  std::optional<Rational> smallest_breaking;
  /// Set when a breaking alpha is followed by a surviving one (reported as
  /// a finding; survival is not guaranteed monotone).
  std::optional<std::pair<Rational, Rational>> monotonicity_violation;
};

AlphaStarScan scan_alpha_star(std::uint32_t m, const Rational& alpha_lo, const Rational& alpha_hi,
                              std::uint32_t grid, std::uint64_t horizon);

/// Total classification of one parameter point: Frozen, Breakdown,
/// CriticalSqrt, Linear, or Unclassified, in that precedence order.
PhasePoint classify_phase(const RecursionParams& params, std::uint64_t n_terms,
                          const Thresholds& thresholds = {});

/// Same classification applied to an already-computed run.
PhasePoint classify_run(const SequenceRun& run, const Thresholds& thresholds = {});

/// One row of a phase scan; point is absent when the run failed outright
/// (parameter or capacity error), with the reason in error.
struct PhaseScanResult {
  Rational alpha;
  std::optional<PhasePoint> point;
  std::string error;
};

/// classify_phase over a uniform rational alpha grid (arithmetic mean).
/// Grid points run concurrently; results are ordered by alpha.
std::vector<PhaseScanResult> phase_scan(std::uint32_t m, const Rational& alpha_lo,
                                        const Rational& alpha_hi, std::uint32_t grid,
                                        std::uint64_t n_terms,
                                        const Thresholds& thresholds = {});

/// One mean kind of the universality sweep at alpha = 1: classification plus
/// the full normalized curve (recorded verbatim for every p).
struct UniversalityResult {
  MeanKind mean = MeanKind::arithmetic();
  std::optional<PhasePoint> point;
  std::vector<CurvePoint> curve;
  std::string error;
};

std::vector<UniversalityResult> universality_suite(std::uint32_t m, std::span<const MeanKind> p_set,
                                                   std::uint64_t n_terms,
                                                   const Thresholds& thresholds = {});

/// Finite-sample surrogate for the slope bracket: the tail min and max of
/// Q(n)/n must enclose 1 - 1/alpha within +-delta_slack. Heuristic by
/// construction; precondition_ok is false when the tail ratios are not
/// bounded away from 0 and 1 by the slack (a frozen run, for instance).
struct SlopeConstraintCheck {
  std::uint64_t window_start = 0;
  std::uint64_t window_end = 0;
  double ell_hat = 0.0;    // min of Q(n)/n over the window
  double cap_l_hat = 0.0;  // max of Q(n)/n over the window
  double predicted = 0.0;  // 1 - 1/alpha
  double delta_slack = 0.0;
  bool precondition_ok = false;
  bool pass = false;
};

SlopeConstraintCheck slope_constraint_check(const SequenceRun& run, const Rational& alpha,
                                            double window_fraction, double delta_slack);

}  // namespace qavg
