#include "qavg/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qavg/errors.hpp"

namespace qavg {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

u64 checked_u64(u128 v, const char* what) {
  if (v > std::numeric_limits<u64>::max())
    throw CapacityError(std::string(what) + " exceeds the 64-bit range");
  return static_cast<u64>(v);
}

u64 floor_sqrt_u128(u128 v) {
  if (v == 0) return 0;
  // Seed from floating sqrt, then correct exactly.
  long double approx = std::sqrt(static_cast<long double>(v));
  u64 x = approx >= static_cast<long double>(std::numeric_limits<u64>::max())
              ? std::numeric_limits<u64>::max()
              : static_cast<u64>(approx);
  while (x > 0 && static_cast<u128>(x) * x > v) --x;
  while (x < std::numeric_limits<u64>::max() && static_cast<u128>(x + 1) * (x + 1) <= v) ++x;
  return x;
}

u128 triangular(u128 k) { return k * (k + 1) / 2; }

}  // namespace

u64 floor_sqrt(u64 v) { return floor_sqrt_u128(v); }

BlockInterval block_bounds(u64 k, u64 m) {
  if (k < 2) throw std::domain_error("block index k must be >= 2");
  if (m < 1) throw std::domain_error("averaging length m must be >= 1");
  u128 start = static_cast<u128>(m) + static_cast<u128>(k) * (k - 1) / 2;
  u128 end = static_cast<u128>(m) + static_cast<u128>(k) * (k + 1) / 2 - 1;
  return BlockInterval{k, checked_u64(start, "block start"), checked_u64(end, "block end")};
}

u64 predict_critical(u64 n, u64 m) {
  if (n < 1) throw std::domain_error("index n must be >= 1");
  if (m < 1) throw std::domain_error("averaging length m must be >= 1");
  if (n <= m) return 1;

  // Find the largest j with T(j) = j(j+1)/2 <= d; the block value is j + 1.
  u128 d = n - m;
  u64 j = (1 + floor_sqrt_u128(8 * d + 1)) / 2;
  while (triangular(j) > d) --j;
  while (triangular(j + 1) <= d) ++j;
  return j + 1;
}

double critical_asymptote(u64 n) { return std::sqrt(2.0 * static_cast<double>(n)); }

Rational predicted_slope(const Rational& alpha) {
  if (!alpha.is_positive()) throw std::invalid_argument("alpha must be positive");
  return Rational(alpha.num() - alpha.den(), alpha.num());
}

}  // namespace qavg
