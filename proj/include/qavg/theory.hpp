#pragma once

#include <cstdint>

#include "qavg/rational.hpp"

namespace qavg {

/**
 * At alpha = 1 the sequence is constant on consecutive index blocks: the
 * value k fills I_k = [start, end] with
 *   start = m + k(k-1)/2,  end = m + k(k+1)/2 - 1,
 * so I_k holds exactly k indices and the blocks tile [m+1, infinity).
 */
struct BlockInterval {
  std::uint64_t k = 0;
  std::uint64_t start = 0;
  std::uint64_t end = 0;

  bool operator==(const BlockInterval&) const = default;
};

/// Closed-form I_k for k >= 2. Throws std::domain_error for k < 2 or m < 1,
/// CapacityError when the bounds leave the 64-bit range.
BlockInterval block_bounds(std::uint64_t k, std::uint64_t m);

/**
 * The critical-sequence value at index n, in closed form: 1 for n <= m,
 * otherwise the unique k >= 2 whose block contains n. The triangular bound
 * is inverted with an integer square root and verified by exact comparison;
 * no floating point enters the decision.
 */
std::uint64_t predict_critical(std::uint64_t n, std::uint64_t m);

/// sqrt(2n), the growth law of the critical sequence. IEEE double, correctly
/// rounded for n below 2^52.
double critical_asymptote(std::uint64_t n);

/// 1 - 1/alpha, the only possible asymptotic slope of a linear phase.
/// Exact; nonpositive results (alpha <= 1) are returned as-is and mean
/// "no linear phase". Throws std::invalid_argument for alpha <= 0.
Rational predicted_slope(const Rational& alpha);

/// floor(sqrt(v)) for any 64-bit v, exact.
std::uint64_t floor_sqrt(std::uint64_t v);

}  // namespace qavg
