#pragma once

#include <vector>

#include "recbound/qpgen.hpp"

namespace recbound {

struct RoundingStrategy {
  enum Kind { Lden, NearestLden, FixedDenominator } kind = Lden;
  std::int64_t max_denominator = 100000;
};

// Best rational bounds of bounded denominator around x (continued-fraction
// semiconvergents): lower = max{p/q <= x : q <= max_den},
// upper = min{p/q >= x : q <= max_den}. Exact dyadic reading of the double.
std::pair<Rational, Rational> best_rational_bounds(double x, std::int64_t max_den);
std::pair<Rational, Rational> best_rational_bounds(const Rational& x, std::int64_t max_den);

struct RationalizeParams {
  RoundingStrategy strategy;
  int variant_cap = 8;
  std::size_t tightness_probe = 4096;  // points used for ordering
};

// Per-coefficient rounding toward the safe side (features sign-definite on
// the sample keep a fixed direction; indefinite ones branch both ways), plus
// the nearest / all-up / all-down corners, capped, ordered by sampled
// tightness; every variant is re-checked for sampled safety and inductivity
// before emission. Empty output is possible.
std::vector<Candidate> rationalize_candidate(const PiecewiseModelSpace& ms, const Recurrence& r,
                                             const TrainingSet& ts,
                                             const std::vector<double>& alpha, Direction direction,
                                             const RationalizeParams& params = {});

// The underlying coefficient-vector variants (exposed for tests).
std::vector<std::vector<Rational>> rationalize_coefficients(const PiecewiseModelSpace& ms,
                                                            const Recurrence& r,
                                                            const TrainingSet& ts,
                                                            const std::vector<double>& alpha,
                                                            Direction direction,
                                                            const RationalizeParams& params = {});

}  // namespace recbound
