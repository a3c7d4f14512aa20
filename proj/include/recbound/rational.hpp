#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace recbound {

using BigInt = boost::multiprecision::cpp_int;
// Always reduced, denominator > 0 (maintained by cpp_rational itself).
using Rational = boost::multiprecision::cpp_rational;

using Point = std::vector<std::int64_t>;

inline Rational make_rational(const BigInt& num, const BigInt& den) {
  return Rational(num, den);
}

inline const BigInt& num(const Rational& r) { return boost::multiprecision::numerator(r); }
inline const BigInt& den(const Rational& r) { return boost::multiprecision::denominator(r); }

inline bool is_integer(const Rational& r) { return den(r) == 1; }

// Number of bits in the larger of |numerator|, denominator. Used for the
// value-size cap that stands in for float overflow.
inline std::size_t rational_bits(const Rational& r) {
  const BigInt n = abs(num(r));
  const BigInt& d = den(r);
  const BigInt& m = n > d ? n : d;
  return m.is_zero() ? 0 : msb(m) + 1;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// floor(a / b) for integers, b > 0.
inline BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

inline BigInt ceil_div(const BigInt& a, const BigInt& b) {
  return -floor_div(-a, b);
}

inline BigInt rational_floor(const Rational& r) { return floor_div(num(r), den(r)); }
inline BigInt rational_ceil(const Rational& r) { return ceil_div(num(r), den(r)); }

inline std::string to_string(const Rational& r) {
  std::string s = num(r).str();
  if (!is_integer(r)) s += "/" + den(r).str();
  return s;
}

inline std::optional<std::int64_t> to_int64(const BigInt& v) {
  if (v < std::numeric_limits<std::int64_t>::min() || v > std::numeric_limits<std::int64_t>::max())
    return std::nullopt;
  return v.convert_to<std::int64_t>();
}

// Exact conversion: every finite double is a dyadic rational.
Rational rational_from_double(double x);

}  // namespace recbound
