#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qavg/means.hpp"
#include "qavg/rational.hpp"

namespace qavg {

/// Everything that determines a run: the averaging length m, the exact
/// scale factor alpha, and the mean applied to the branch values.
struct RecursionParams {
  std::uint32_t m = 1;
  Rational alpha = Rational(1);
  MeanKind mean = MeanKind::arithmetic();
};

/// First step at which the recursion left its domain: branch j needed
/// Q(argument) with argument = step - Q(step - j) < 1.
struct Breakdown {
  std::uint64_t step = 0;
  std::uint32_t branch = 0;
  std::int64_t argument = 0;

  bool operator==(const Breakdown&) const = default;
};

/**
 * A computed history Q(1..K). Complete runs have K = n_requested; broken
 * runs stop at K = breakdown->step - 1. Values are immutable once the run
 * returns and safe to share across threads.
 */
struct SequenceRun {
  RecursionParams params;
  std::uint64_t n_requested = 0;
  std::vector<std::uint64_t> values;  // values[i] = Q(i + 1)
  std::optional<Breakdown> breakdown;

  bool complete() const { return !breakdown.has_value(); }
  std::uint64_t size() const { return values.size(); }

  /// 1-based accessor matching the recursion's indexing.
  std::uint64_t at(std::uint64_t n) const { return values[n - 1]; }
};

/// Default ceiling on stored terms: 1e8 terms = 800 MB of history.
inline constexpr std::uint64_t kDefaultMaxTerms = 100'000'000;

/**
 * Evaluates Q(n) = 1 + floor(alpha * M(Q(n - Q(n-1)), ..., Q(n - Q(n-m))))
 * term by term from the all-ones initial segment Q(1) = ... = Q(m) = 1,
 * stopping early with a Breakdown record at the first step whose arguments
 * leave [1, n-1]. Branches are scanned j = 1..m and the smallest failing j
 * is reported. Deterministic: equal inputs give bit-identical histories.
 *
 * Throws std::invalid_argument when m < 1, alpha <= 0, or n_terms < m;
 * CapacityError when n_terms exceeds max_terms or a value leaves the
 * 64-bit range.
 */
SequenceRun run(const RecursionParams& params, std::uint64_t n_terms,
                std::uint64_t max_terms = kDefaultMaxTerms);

using StepResult = std::variant<std::uint64_t, Breakdown>;

/// Single-step decomposition of run(); history[i] = Q(i + 1) must cover
/// indices 1..n-1 with n > m.
StepResult step(const RecursionParams& params, std::span<const std::uint64_t> history,
                std::uint64_t n);

/// values[n+1] - values[n] for n = 1..K-1; requires at least two values.
std::vector<std::int64_t> first_differences(const SequenceRun& run);

}  // namespace qavg
