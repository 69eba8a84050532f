#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "qavg/rational.hpp"

namespace qavg {

/**
 * The averaging rule applied to the recursive branch values: a power mean
 * M_p with integer exponent p, the geometric mean (p = 0), or the maximum
 * (the p -> +infinity limit). Arithmetic is power(1), harmonic is power(-1).
 */
class MeanKind {
 public:
  static MeanKind arithmetic() { return MeanKind(Form::kPower, 1); }
  static MeanKind harmonic() { return MeanKind(Form::kPower, -1); }
  static MeanKind geometric() { return MeanKind(Form::kGeometric, 0); }
  static MeanKind max() { return MeanKind(Form::kMax, 0); }

  /// power(0) is the geometric mean; any other integer is a plain power mean.
  static MeanKind power(int exponent) {
    return exponent == 0 ? geometric() : MeanKind(Form::kPower, exponent);
  }

  /// Accepts the CLI tokens: "arith", "geo", "harm", "max", "p:<int>",
  /// or a bare integer ("0" -> geometric, "2" -> power(2)).
  static MeanKind parse(std::string_view token);

  bool is_max() const { return form_ == Form::kMax; }
  bool is_geometric() const { return form_ == Form::kGeometric; }
  bool is_power() const { return form_ == Form::kPower; }
  bool is_arithmetic() const { return form_ == Form::kPower && exponent_ == 1; }

  /// Valid only for power means.
  int exponent() const { return exponent_; }

  /// Stable CLI/CSV token: "arith", "harm", "geo", "max", or "p:<int>".
  std::string name() const;

  /// The exponent as a report label: "-1", "0", "1", ..., "inf".
  std::string p_label() const;

  bool operator==(const MeanKind& rhs) const {
    return form_ == rhs.form_ && exponent_ == rhs.exponent_;
  }
  bool operator!=(const MeanKind& rhs) const { return !(*this == rhs); }

 private:
  enum class Form { kPower, kGeometric, kMax };
  MeanKind(Form form, int exponent) : form_(form), exponent_(exponent) {}

  Form form_;
  int exponent_;
};

/// The branch values fed into one averaging step; nonempty, every entry >= 1.
using BranchValues = std::span<const std::uint64_t>;

/**
 * Computes floor(alpha * M(x)) exactly: the unique integer t >= 0 with
 * t <= alpha * M(x) < t + 1. Every decision is made by integer comparison;
 * floating point appears only as a search seed that exact checks confirm.
 *
 * With alpha = a/b the criteria are:
 *   arithmetic      t = (a * sum(x)) / (b * m), integer division
 *   power p > 0     largest t with (t*b)^p * m     <= a^p * sum(x^p)
 *   geometric       largest t with (t*b)^m         <= a^m * prod(x)
 *   power p < 0     largest t with (t*b)^|p| * D   <= a^|p| * m * P,
 *                   where P = prod(x^|p|) and D = sum_j P / x_j^|p|
 *   max             t = (a * max(x)) / b
 *
 * Throws std::invalid_argument for an empty span, a zero entry, or
 * alpha <= 0; CapacityError if the result exceeds the 64-bit range or an
 * exact inequality would exceed the bit cap.
 */
std::uint64_t floor_alpha_mean(BranchValues values, const Rational& alpha, MeanKind mean);

/// Floating approximation of M(x) for diagnostics and plot columns only
/// (never used inside the recursion). Accurate to at least 12 significant
/// digits for desk-scale inputs.
double power_mean_value(BranchValues values, MeanKind mean);

/// Bit cap on exact inequality operands; beyond it floor_alpha_mean raises
/// CapacityError instead of attempting the computation.
inline constexpr std::size_t kMaxExactBits = 1'000'000;

}  // namespace qavg
