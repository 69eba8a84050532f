#include "qavg/means.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qavg/errors.hpp"

namespace qavg {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

constexpr u64 kU64Max = std::numeric_limits<u64>::max();

bool fits_u64(const BigInt& v) { return v >= 0 && v <= kU64Max; }

u64 to_u64_checked(const BigInt& v, const char* what) {
  if (!fits_u64(v)) throw CapacityError(std::string(what) + " exceeds the 64-bit value range");
  return v.convert_to<u64>();
}

// log2 of a positive big integer, good to ~18 digits; seeds only.
long double log2_big(const BigInt& v) {
  unsigned bits = boost::multiprecision::msb(v);
  if (bits <= 62) return std::log2(v.convert_to<long double>());
  BigInt top = v >> (bits - 62);
  return static_cast<long double>(bits - 62) + std::log2(top.convert_to<long double>());
}

// pow with a pre-check so a pathological exponent fails fast instead of
// allocating a gigabit integer.
BigInt pow_capped(const BigInt& base, unsigned exp, std::size_t budget_bits) {
  if (base == 0) return exp == 0 ? BigInt(1) : BigInt(0);
  std::size_t base_bits = boost::multiprecision::msb(base) + 1;
  if (exp > 0 && base_bits > budget_bits / exp)
    throw CapacityError("exact power-mean inequality exceeds the bit cap");
  return boost::multiprecision::pow(base, exp);
}

// Largest t in [0, upper] with pred(t) true, given pred is monotone
// (true below some threshold, false above) and pred(0) holds.
template <typename Pred>
BigInt largest_true(const BigInt& upper, long double seed, Pred pred) {
  BigInt lo = 0;          // known true
  BigInt hi = upper + 1;  // known false
  BigInt t;
  if (std::isfinite(static_cast<double>(seed)) && seed >= 0.0L) {
    t = BigInt(std::floor(seed));
    if (t > upper) t = upper;
  } else {
    t = upper / 2;
  }
  // A correct seed resolves with two exact checks; bisection mops up the rest.
  if (pred(t)) {
    if (t == upper || !pred(t + 1)) return t;
    lo = t + 1;
  } else if (t > 0 && pred(t - 1)) {
    return t - 1;
  } else if (t > 1) {
    hi = t - 1;
  } else {
    return 0;
  }
  while (hi - lo > 1) {
    BigInt mid = (lo + hi) / 2;
    if (pred(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

struct Scanned {
  u64 min = kU64Max;
  u64 max = 0;
  u128 sum = 0;
};

Scanned scan(BranchValues values) {
  if (values.empty()) throw std::invalid_argument("empty branch values");
  Scanned s;
  for (u64 v : values) {
    if (v == 0) throw std::invalid_argument("branch value must be >= 1");
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    s.sum += v;
  }
  return s;
}

u64 floor_scaled_u64(const BigInt& a, const BigInt& b, u64 value) {
  // floor(a * value / b) with a u128 fast path.
  if (fits_u64(a) && fits_u64(b)) {
    u128 q = static_cast<u128>(a.convert_to<u64>()) * value / b.convert_to<u64>();
    if (q > kU64Max) throw CapacityError("mean floor exceeds the 64-bit value range");
    return static_cast<u64>(q);
  }
  return to_u64_checked(BigInt((a * value) / b), "mean floor");
}

}  // namespace

MeanKind MeanKind::parse(std::string_view token) {
  if (token == "arith" || token == "arithmetic") return arithmetic();
  if (token == "geo" || token == "geometric") return geometric();
  if (token == "harm" || token == "harmonic") return harmonic();
  if (token == "max" || token == "inf") return max();
  std::string_view digits = token;
  if (token.size() > 2 && token.substr(0, 2) == "p:") digits = token.substr(2);
  int p = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), p);
  if (ec != std::errc() || ptr != digits.data() + digits.size())
    throw std::invalid_argument("unrecognized mean kind: " + std::string(token));
  return power(p);
}

std::string MeanKind::name() const {
  if (is_max()) return "max";
  if (is_geometric()) return "geo";
  if (exponent_ == 1) return "arith";
  if (exponent_ == -1) return "harm";
  return "p:" + std::to_string(exponent_);
}

std::string MeanKind::p_label() const {
  if (is_max()) return "inf";
  if (is_geometric()) return "0";
  return std::to_string(exponent_);
}

std::uint64_t floor_alpha_mean(BranchValues values, const Rational& alpha, MeanKind mean) {
  Scanned s = scan(values);
  if (!alpha.is_positive()) throw std::invalid_argument("alpha must be positive");
  const BigInt& a = alpha.num();
  const BigInt& b = alpha.den();
  const std::size_t m = values.size();

  if (mean.is_max()) return floor_scaled_u64(a, b, s.max);

  if (mean.is_arithmetic()) {
    if (fits_u64(a) && fits_u64(b) && s.sum <= kU64Max) {
      u128 num = static_cast<u128>(a.convert_to<u64>()) * static_cast<u64>(s.sum);
      u128 den = static_cast<u128>(b.convert_to<u64>()) * m;
      u128 q = num / den;
      if (q > kU64Max) throw CapacityError("mean floor exceeds the 64-bit value range");
      return static_cast<u64>(q);
    }
    BigInt sum = (BigInt(static_cast<u64>(s.sum >> 64)) << 64) + static_cast<u64>(s.sum);
    return to_u64_checked(BigInt((a * sum) / (b * m)), "mean floor");
  }

  // All remaining kinds share the shape: largest t with lhs(t) <= rhs, where
  // t <= alpha * max(x) gives a hard upper bound for the search.
  BigInt upper = (a * s.max) / b;
  long double log2_alpha = log2_big(a) - log2_big(b);
  BigInt t;

  if (mean.is_geometric()) {
    BigInt prod = 1;
    for (u64 v : values) {
      prod *= v;
      if (boost::multiprecision::msb(prod) + 1 > kMaxExactBits)
        throw CapacityError("exact geometric-mean product exceeds the bit cap");
    }
    BigInt rhs = pow_capped(a, static_cast<unsigned>(m), kMaxExactBits) * prod;
    long double seed = std::exp2(log2_alpha + log2_big(prod) / static_cast<long double>(m));
    t = largest_true(upper, seed, [&](const BigInt& cand) {
      return pow_capped(cand * b, static_cast<unsigned>(m), kMaxExactBits) <= rhs;
    });
  } else if (mean.exponent() > 0) {
    const unsigned p = static_cast<unsigned>(mean.exponent());
    BigInt power_sum = 0;
    for (u64 v : values) power_sum += pow_capped(BigInt(v), p, kMaxExactBits);
    BigInt rhs = pow_capped(a, p, kMaxExactBits) * power_sum;
    long double seed = std::exp2(
        log2_alpha + (log2_big(power_sum) - std::log2(static_cast<long double>(m))) / p);
    t = largest_true(upper, seed, [&](const BigInt& cand) {
      return pow_capped(cand * b, p, kMaxExactBits) * m <= rhs;
    });
  } else {
    // Negative exponent: clear the denominators of sum(x^-|p|) with the
    // common denominator P = prod(x^|p|).
    const unsigned p = static_cast<unsigned>(-static_cast<long long>(mean.exponent()));
    std::size_t per_term_bits = (boost::multiprecision::msb(BigInt(s.max)) + 1) * p;
    if (per_term_bits != 0 && m > kMaxExactBits / per_term_bits)
      throw CapacityError("exact harmonic-family inequality exceeds the bit cap");
    std::vector<BigInt> powers;
    powers.reserve(m);
    BigInt prod = 1;
    for (u64 v : values) {
      powers.push_back(pow_capped(BigInt(v), p, kMaxExactBits));
      prod *= powers.back();
    }
    BigInt cross_sum = 0;  // sum over j of prod(x_i^p, i != j)
    for (const BigInt& pw : powers) cross_sum += prod / pw;
    BigInt rhs = pow_capped(a, p, kMaxExactBits) * m * prod;
    long double seed = std::exp2(
        log2_alpha + (std::log2(static_cast<long double>(m)) + log2_big(prod) -
                      log2_big(cross_sum)) /
                         p);
    t = largest_true(upper, seed, [&](const BigInt& cand) {
      return pow_capped(cand * b, p, kMaxExactBits) * cross_sum <= rhs;
    });
  }

  return to_u64_checked(t, "mean floor");
}

double power_mean_value(BranchValues values, MeanKind mean) {
  Scanned s = scan(values);
  const std::size_t m = values.size();
  if (mean.is_max()) return static_cast<double>(s.max);
  if (mean.is_geometric()) {
    long double log_sum = 0;
    for (u64 v : values) log_sum += std::log(static_cast<long double>(v));
    return static_cast<double>(std::exp(log_sum / static_cast<long double>(m)));
  }
  const int p = mean.exponent();
  long double acc = 0;
  for (u64 v : values) acc += std::pow(static_cast<long double>(v), static_cast<long double>(p));
  return static_cast<double>(
      std::pow(acc / static_cast<long double>(m), 1.0L / static_cast<long double>(p)));
}

}  // namespace qavg
