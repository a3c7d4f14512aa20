#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "recbound/expr.hpp"
#include "recbound/poly.hpp"

namespace recbound {

// A conjunction of integer-linear constraints over nvars variables.
// The default domain constraints (x_i >= 0) are not implicit; callers add
// them when they apply.
struct Region {
  int nvars = 0;
  std::vector<LinConstraint> cs;

  bool contains(const Point& p) const;
  Region with(const LinConstraint& c) const;
  Region with_all(const std::vector<LinConstraint>& extra) const;
  std::string to_string(const std::vector<std::string>& vars) const;
};

Region region_from_guard(const Guard& g, int nvars);

// Rewrite strict comparisons over integers (a < c becomes a <= c-1) and
// orient everything as <=; equalities become two inequalities.
std::vector<LinConstraint> tighten_to_le(const std::vector<LinConstraint>& cs);

// Exact Fourier-Motzkin emptiness test over the rationals (sound for the
// integer region: empty over R implies empty over Z). Returns true when
// emptiness was PROVED; false means "could not prove empty".
bool region_provably_empty(const Region& r, int max_constraints = 4000);

// Does the region imply  lhs . coeffs + constant >= 0  for all real points?
// Sound for integer points. Implemented as emptiness of region && (expr < 0).
bool region_implies_nonneg(const Region& r, const std::vector<std::int64_t>& coeffs,
                           std::int64_t constant);

// Enumerate all integer points of a finite region. Fails (nullopt) if some
// variable is unbounded or the cardinality exceeds `cap`.
std::optional<std::vector<Point>> enumerate_region(const Region& r, std::size_t cap);

// One variable substitution x_i = offset + sum_j coeffs_j * s_j over fresh
// nonnegative slack variables.
struct SlackSubst {
  // per original variable: affine form over slack variables
  std::vector<std::vector<std::int64_t>> coeffs;  // nvars x nslacks
  std::vector<std::int64_t> offset;               // nvars
  int nslacks = 0;
};

// Derive candidate triangular parametrizations of the region by nonnegative
// slacks (shifted boxes and difference constraints). Several candidates may
// be returned; proving any one of them suffices for regions they cover.
std::vector<SlackSubst> derive_parametrizations(const Region& r, int max_out = 6);

// ---------------------------------------------------------------------------
// Sufficient-condition prover: is  e >= 0  everywhere on the region?
// ---------------------------------------------------------------------------

struct ProveOptions {
  int max_regions = 20000;          // split budget
  std::int64_t max_modulus = 128;   // residue-splitting cap (single divisor)
  std::int64_t max_modulus_product = 30;  // cap for products of distinct divisors
};

struct ProveOutcome {
  bool proved = false;
  std::string reason;  // blocking node / region when not proved
};

// e must be Call-free. Handles ite/min/max via region splitting (linear
// arguments), floor/ceil via residue splitting, pow/fact/log2floor via
// atom normalization with shift rewrites and baseline substitution.
ProveOutcome prove_nonneg_on_region(const Expr& e, const Region& region,
                                    const ProveOptions& opts = {});

}  // namespace recbound
