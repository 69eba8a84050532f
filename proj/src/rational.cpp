#include "qavg/rational.hpp"

#include <boost/multiprecision/integer.hpp>

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace qavg {

namespace {

BigInt parse_digits(std::string_view s, const char* what) {
  if (s.empty()) throw std::invalid_argument(std::string("missing digits in ") + what);
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw std::invalid_argument(std::string("invalid character in ") + what);
  }
  BigInt v = 0;
  for (char c : s) {
    v *= 10;
    v += c - '0';
  }
  return v;
}

}  // namespace

Rational::Rational(BigInt numerator, BigInt denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
  if (den_ == 0) throw std::invalid_argument("rational with zero denominator");
  normalize();
}

void Rational::normalize() {
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  if (num_ == 0) {
    den_ = 1;
    return;
  }
  BigInt g = boost::multiprecision::gcd(num_ < 0 ? BigInt(-num_) : num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

Rational Rational::parse(std::string_view text) {
  std::string_view s = text;
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) throw std::invalid_argument("empty rational literal");

  auto slash = s.find('/');
  auto dot = s.find('.');
  if (slash != std::string_view::npos && dot != std::string_view::npos)
    throw std::invalid_argument("rational literal mixes '/' and '.'");

  BigInt num;
  BigInt den = 1;
  if (slash != std::string_view::npos) {
    num = parse_digits(s.substr(0, slash), "numerator");
    den = parse_digits(s.substr(slash + 1), "denominator");
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
  } else if (dot != std::string_view::npos) {
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = s.substr(dot + 1);
    // Require digits on both sides: "1.05" yes, "1." / ".5" no.
    num = parse_digits(whole, "integer part");
    BigInt frac_num = parse_digits(frac, "fractional part");
    for (size_t i = 0; i < frac.size(); ++i) {
      num *= 10;
      den *= 10;
    }
    num += frac_num;
  } else {
    num = parse_digits(s, "integer literal");
  }
  if (negative) num = -num;
  return Rational(std::move(num), std::move(den));
}

Rational Rational::operator-() const { return Rational(-num_, den_); }

Rational Rational::operator+(const Rational& rhs) const {
  return Rational(num_ * rhs.den_ + rhs.num_ * den_, den_ * rhs.den_);
}

Rational Rational::operator-(const Rational& rhs) const {
  return Rational(num_ * rhs.den_ - rhs.num_ * den_, den_ * rhs.den_);
}

Rational Rational::operator*(const Rational& rhs) const {
  return Rational(num_ * rhs.num_, den_ * rhs.den_);
}

Rational Rational::operator/(const Rational& rhs) const {
  if (rhs.num_ == 0) throw std::invalid_argument("division by zero rational");
  return Rational(num_ * rhs.den_, den_ * rhs.num_);
}

std::string Rational::str() const {
  if (den_ == 1) return num_.str();
  return num_.str() + "/" + den_.str();
}

double Rational::to_double() const {
  // Exactness never depends on this; it feeds seeds and report columns only.
  long double n = num_.convert_to<long double>();
  long double d = den_.convert_to<long double>();
  if (std::isfinite(static_cast<double>(n)) && std::isfinite(static_cast<double>(d)))
    return static_cast<double>(n / d);
  // Both operands enormous: shift to a comparable scale first.
  using boost::multiprecision::msb;
  BigInt an = num_ < 0 ? BigInt(-num_) : num_;
  long shift = static_cast<long>(std::max(msb(an), msb(den_))) - 512;
  if (shift < 0) shift = 0;
  long double sn = (num_ >> shift).convert_to<long double>();
  long double sd = (den_ >> shift).convert_to<long double>();
  return static_cast<double>(sn / sd);
}

}  // namespace qavg
