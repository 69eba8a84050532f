#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace qavg {

using BigInt = boost::multiprecision::cpp_int;

/**
 * Exact rational number in canonical form: denominator > 0 and
 * gcd(|numerator|, denominator) = 1. All parameter decisions (floors,
 * grid points, slopes) route through this type; no floating point.
 */
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(long long value) : num_(value), den_(1) {}  // NOLINT: implicit by design
  Rational(BigInt numerator, BigInt denominator);

  /// Accepts "a", "a/b", or a finite decimal string such as "1.05"
  /// (converted exactly, e.g. "1.05" -> 21/20). Throws std::invalid_argument
  /// on anything else, including a zero denominator.
  static Rational parse(std::string_view text);

  const BigInt& num() const { return num_; }
  const BigInt& den() const { return den_; }

  bool is_positive() const { return num_ > 0; }
  bool is_zero() const { return num_ == 0; }

  Rational operator-() const;
  Rational operator+(const Rational& rhs) const;
  Rational operator-(const Rational& rhs) const;
  Rational operator*(const Rational& rhs) const;
  Rational operator/(const Rational& rhs) const;  // throws on rhs == 0

  bool operator==(const Rational& rhs) const {
    return num_ == rhs.num_ && den_ == rhs.den_;
  }
  bool operator!=(const Rational& rhs) const { return !(*this == rhs); }
  bool operator<(const Rational& rhs) const { return num_ * rhs.den_ < rhs.num_ * den_; }
  bool operator>(const Rational& rhs) const { return rhs < *this; }
  bool operator<=(const Rational& rhs) const { return !(rhs < *this); }
  bool operator>=(const Rational& rhs) const { return !(*this < rhs); }

  /// Exact form: "a" when the denominator is 1, otherwise "a/b".
  std::string str() const;

  double to_double() const;

 private:
  void normalize();

  BigInt num_;
  BigInt den_;
};

}  // namespace qavg
