#include "recbound/rounding.hpp"

#include <algorithm>
#include <set>

namespace recbound {

std::pair<Rational, Rational> best_rational_bounds(const Rational& x, std::int64_t max_den) {
  if (max_den < 1) throw std::runtime_error("max_denominator must be >= 1");
  if (den(x) <= max_den) return {x, x};
  // continued-fraction walk (floor convention handles negatives)
  BigInt p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  BigInt n = num(x), d = den(x);
  while (d != 0) {
    BigInt a = floor_div(n, d);
    BigInt q2 = q0 + a * q1;
    if (q1 != 0 && q2 > max_den) break;
    BigInt p2 = p0 + a * p1;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    BigInt r = n - a * d;
    n = d;
    d = r;
  }
  // best semiconvergent against the last convergent p1/q1
  BigInt k = q1 == 0 ? BigInt(0) : floor_div(BigInt(max_den) - q0, q1);
  Rational conv(p1, q1 == 0 ? BigInt(1) : q1);
  Rational semi(p0 + k * p1, q0 + k * q1);
  Rational lo = std::min(conv, semi);
  Rational hi = std::max(conv, semi);
  // both candidates straddle x by construction
  if (lo > x || hi < x) throw std::runtime_error("best_rational_bounds: internal straddle failure");
  return {lo, hi};
}

std::pair<Rational, Rational> best_rational_bounds(double x, std::int64_t max_den) {
  return best_rational_bounds(rational_from_double(x), max_den);
}

namespace {

enum class Sign { NonNeg, NonPos, Indefinite, Zero };

Sign sampled_feature_sign(const PiecewiseModelSpace& ms, const Recurrence& r, const TrainingSet& ts,
                          int slot, int feature) {
  bool pos = false, neg = false, any = false;
  for (const Point& p : ts.points) {
    int ci = r.case_at(p);
    if (ci != ms.recursive_cases[slot]) continue;
    Rational v = eval_closed(ms.bank.features[feature].expr, p);
    any = true;
    if (v > 0) pos = true;
    if (v < 0) neg = true;
    if (pos && neg) return Sign::Indefinite;
  }
  if (!any) return Sign::Zero;
  if (pos) return Sign::NonNeg;
  if (neg) return Sign::NonPos;
  return Sign::Zero;
}

}  // namespace

std::vector<std::vector<Rational>> rationalize_coefficients(const PiecewiseModelSpace& ms,
                                                            const Recurrence& r,
                                                            const TrainingSet& ts,
                                                            const std::vector<double>& alpha,
                                                            Direction direction,
                                                            const RationalizeParams& params) {
  const int dim = ms.dimension();
  std::vector<Rational> lo(dim), hi(dim), nearest(dim);
  std::vector<int> dirs(dim);  // +1 round up, -1 round down, 0 both
  const std::int64_t md = params.strategy.max_denominator;
  for (int c = 0; c < dim; ++c) {
    if (params.strategy.kind == RoundingStrategy::FixedDenominator) {
      Rational x = rational_from_double(alpha[c]);
      lo[c] = Rational(rational_floor(x * md), BigInt(md));
      hi[c] = Rational(rational_ceil(x * md), BigInt(md));
    } else {
      auto [l, h] = best_rational_bounds(alpha[c], md);
      lo[c] = l;
      hi[c] = h;
    }
    Rational x = rational_from_double(alpha[c]);
    nearest[c] = (x - lo[c] <= hi[c] - x) ? lo[c] : hi[c];
    auto [slot, feat] = ms.column_of(c);
    Sign s = sampled_feature_sign(ms, r, ts, slot, feat);
    bool up;  // "up" = value of candidate does not decrease
    switch (s) {
      case Sign::Zero:
        dirs[c] = +1;  // immaterial
        continue;
      case Sign::NonNeg: up = true; break;
      case Sign::NonPos: up = false; break;
      case Sign::Indefinite: dirs[c] = 0; continue;
    }
    if (direction == Direction::Lower) up = !up;
    dirs[c] = up ? +1 : -1;
  }

  auto corner = [&](const std::function<Rational(int)>& pick) {
    std::vector<Rational> v(dim);
    for (int c = 0; c < dim; ++c) v[c] = pick(c);
    return v;
  };

  std::vector<std::vector<Rational>> variants;
  std::set<std::vector<Rational>> seen;
  auto push = [&](std::vector<Rational> v) {
    if (seen.insert(v).second) variants.push_back(std::move(v));
  };

  if (params.strategy.kind == RoundingStrategy::NearestLden) {
    push(corner([&](int c) { return nearest[c]; }));
  }
  // policy corners: fixed directions, branch on indefinite columns
  std::vector<int> free_cols;
  for (int c = 0; c < dim; ++c)
    if (dirs[c] == 0 && alpha[c] != 0) free_cols.push_back(c);
  std::size_t branches = free_cols.size() >= 3 ? 8 : (std::size_t(1) << free_cols.size());
  for (std::size_t b = 0; b < branches; ++b) {
    std::vector<Rational> v(dim);
    for (int c = 0; c < dim; ++c) {
      int d = dirs[c];
      if (d == 0) {
        std::size_t bit = std::find(free_cols.begin(), free_cols.end(), c) - free_cols.begin();
        d = bit < 8 * sizeof(b) && ((b >> bit) & 1) ? +1 : -1;
      }
      v[c] = d > 0 ? hi[c] : lo[c];
    }
    push(std::move(v));
  }
  push(corner([&](int c) { return nearest[c]; }));
  push(corner([&](int c) { return hi[c]; }));
  push(corner([&](int c) { return lo[c]; }));

  // cap: keep policy-first ordering, then nearest/all-up/all-down corners
  if (static_cast<int>(variants.size()) > params.variant_cap)
    variants.resize(params.variant_cap);
  return variants;
}

std::vector<Candidate> rationalize_candidate(const PiecewiseModelSpace& ms, const Recurrence& r,
                                             const TrainingSet& ts,
                                             const std::vector<double>& alpha, Direction direction,
                                             const RationalizeParams& params) {
  auto variants = rationalize_coefficients(ms, r, ts, alpha, direction, params);
  struct Scored {
    Candidate cand;
    Rational looseness;
  };
  std::vector<Scored> kept;
  std::size_t stride = std::max<std::size_t>(1, ts.size() / params.tightness_probe);
  for (auto& v : variants) {
    Candidate cand = make_candidate(ms, r, v, direction, "qp");
    // sampled recheck: exact safety on every training point, exact
    // inductivity on a strided subset (falsify re-runs the full scan later)
    bool ok = true;
    CallOracle f = cand.oracle();
    Rational loose(0);
    for (std::size_t i = 0; i < ts.size() && ok; ++i) {
      auto val = cand.eval(ts.points[i]);
      if (!val) { ok = false; break; }
      Rational gap = direction == Direction::Upper ? *val - ts.values[i] : ts.values[i] - *val;
      if (gap < 0) ok = false;
      if (i % stride == 0) loose += gap;
    }
    for (std::size_t i = 0; i < ts.size() && ok; i += stride) {
      auto me = measure_at(r, f, ts.points[i]);
      if (!me) { ok = false; break; }
      Rational ind = direction == Direction::Upper ? *me : -*me;
      if (ind > 0) ok = false;
    }
    if (!ok) continue;
    kept.push_back({std::move(cand), loose});
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Scored& a, const Scored& b) { return a.looseness < b.looseness; });
  std::vector<Candidate> out;
  for (auto& k : kept) out.push_back(std::move(k.cand));
  return out;
}

}  // namespace recbound
