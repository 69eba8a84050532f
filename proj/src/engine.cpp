#include "qavg/engine.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "qavg/errors.hpp"

namespace qavg {

namespace {

using u64 = std::uint64_t;

void validate_params(const RecursionParams& params) {
  if (params.m < 1) throw std::invalid_argument("averaging length m must be >= 1");
  if (!params.alpha.is_positive()) throw std::invalid_argument("alpha must be positive");
}

std::int64_t breakdown_argument(u64 n, u64 value) {
  // n - value is <= 0 here; values large enough to underflow int64 cannot
  // arise from a 64-bit history, but clamp anyway.
  __int128 arg = static_cast<__int128>(n) - static_cast<__int128>(value);
  if (arg < std::numeric_limits<std::int64_t>::min()) return std::numeric_limits<std::int64_t>::min();
  return static_cast<std::int64_t>(arg);
}

// Gathers the m branch values for step n, or reports the first failing branch.
// history[i] = Q(i + 1), filled through at least n - 1.
std::optional<Breakdown> gather_branches(std::span<const u64> history, u64 n, std::uint32_t m,
                                         std::vector<u64>& branches) {
  for (std::uint32_t j = 1; j <= m; ++j) {
    u64 r = history[n - j - 1];  // Q(n - j)
    if (r >= n) return Breakdown{n, j, breakdown_argument(n, r)};
    branches[j - 1] = history[(n - r) - 1];  // Q(n - r), argument in [1, n-1]
  }
  return std::nullopt;
}

}  // namespace

SequenceRun run(const RecursionParams& params, u64 n_terms, u64 max_terms) {
  validate_params(params);
  if (n_terms < params.m) throw std::invalid_argument("n_terms must be >= m");
  if (n_terms > max_terms)
    throw CapacityError("requested " + std::to_string(n_terms) + " terms exceeds the budget of " +
                        std::to_string(max_terms));

  SequenceRun out;
  out.params = params;
  out.n_requested = n_terms;
  out.values.reserve(n_terms);
  out.values.assign(params.m, 1);

  std::vector<u64> branches(params.m);
  for (u64 n = params.m + 1; n <= n_terms; ++n) {
    if (auto broke = gather_branches(out.values, n, params.m, branches)) {
      out.breakdown = *broke;
      return out;
    }
    u64 t = floor_alpha_mean(branches, params.alpha, params.mean);
    if (t == std::numeric_limits<u64>::max())
      throw CapacityError("term exceeds the 64-bit value range");
    out.values.push_back(t + 1);
  }
  return out;
}

StepResult step(const RecursionParams& params, std::span<const u64> history, u64 n) {
  validate_params(params);
  if (n <= params.m) throw std::invalid_argument("step index must satisfy n > m");
  if (history.size() < n - 1) throw std::invalid_argument("history must cover indices 1..n-1");

  std::vector<u64> branches(params.m);
  if (auto broke = gather_branches(history, n, params.m, branches)) return *broke;
  u64 t = floor_alpha_mean(branches, params.alpha, params.mean);
  if (t == std::numeric_limits<u64>::max())
    throw CapacityError("term exceeds the 64-bit value range");
  return t + 1;
}

std::vector<std::int64_t> first_differences(const SequenceRun& run) {
  if (run.values.size() < 2)
    throw std::invalid_argument("first differences need at least two values");
  std::vector<std::int64_t> diffs(run.values.size() - 1);
  for (std::size_t i = 0; i + 1 < run.values.size(); ++i)
    diffs[i] = static_cast<std::int64_t>(run.values[i + 1] - run.values[i]);
  return diffs;
}

}  // namespace qavg
