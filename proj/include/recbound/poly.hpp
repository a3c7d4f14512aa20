#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recbound/expr.hpp"

namespace recbound {

// Multivariate polynomial over `width` generalized variables with exact
// rational coefficients. Exponent vectors are dense and fixed-width.
struct Polynomial {
  int width = 0;
  std::map<std::vector<std::uint32_t>, Rational> terms;  // nonzero coeffs only

  static Polynomial constant(int width, Rational c);
  static Polynomial variable(int width, int index);

  bool is_zero() const { return terms.empty(); }
  bool is_constant() const;
  Rational constant_term() const;
  bool all_coeffs_nonneg() const;
  bool all_coeffs_nonpos() const;
  int degree() const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial scaled(const Rational& c) const;
  Polynomial pow(std::uint32_t e) const;

  bool operator==(const Polynomial& o) const { return width == o.width && terms == o.terms; }

  Rational eval(const std::vector<Rational>& values) const;

  // Replace every variable by the given polynomial (all over the same target
  // width). `subs.size()` must equal `width`.
  Polynomial substituted(const std::vector<Polynomial>& subs, int new_width) const;

  // Widen to more variables (existing indices keep their position).
  Polynomial widened(int new_width) const;

  std::string to_string(const std::vector<std::string>& names) const;
};

// Strict normalization: succeeds iff the expression is built from constants,
// variables and + - * only. Failure reports the blocking node.
struct PolyFailure {
  std::string blocking_node;
};
struct PolyResult {
  std::optional<Polynomial> poly;
  PolyFailure failure;
  bool ok() const { return poly.has_value(); }
};
PolyResult normalize_polynomial(const Expr& e, int nvars);

// ---------------------------------------------------------------------------
// Atom-extended normalization. Floors of linear expressions, pow with affine
// exponents, factorials and log2floor of affine arguments become opaque
// generalized variables ("atoms"), after shift rewrites:
//   floordiv(l + c, m)   = floordiv(l + c mod m, m) + c div m
//   pow(b, l + c)        = b^c * pow(b, l)           (l without constant)
//   fact(l + c)          = fact(l + cmin) * prod_{j=cmin+1..c} (l + j)
// ---------------------------------------------------------------------------

struct Atom {
  enum Kind { Floor, Pow, Fact, Log } kind;
  std::vector<std::int64_t> lin;     // coefficients over the base variables
  std::int64_t cst = 0;              // reduced constant (meaning depends on kind)
  std::int64_t divisor = 1;          // Floor
  Rational base;                     // Pow

  bool operator<(const Atom& o) const;
  std::string to_string(const std::vector<std::string>& vars) const;
};

struct AtomTable {
  int nvars = 0;  // base variables; atoms take indices nvars, nvars+1, ...
  std::vector<Atom> atoms;
  int intern(const Atom& a);
  int width() const { return nvars + static_cast<int>(atoms.size()); }
};

struct AtomizeResult {
  std::optional<Polynomial> poly;  // over table.width() variables
  std::string failure;
  bool ok() const { return poly.has_value(); }
};

// Expression must be free of Call/Min/Max/Ite nodes (those are eliminated by
// region splitting before this point). Width of the result equals
// table.width() after interning; widen previously-obtained polynomials if
// the table grows.
AtomizeResult atomize(const Expr& e, AtomTable& table);

}  // namespace recbound
