#include "recbound/regions.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace recbound {

bool Region::contains(const Point& p) const {
  for (const auto& c : cs)
    if (!c.eval(p)) return false;
  return true;
}

Region Region::with(const LinConstraint& c) const {
  Region r = *this;
  r.cs.push_back(c);
  return r;
}

Region Region::with_all(const std::vector<LinConstraint>& extra) const {
  Region r = *this;
  r.cs.insert(r.cs.end(), extra.begin(), extra.end());
  return r;
}

std::string Region::to_string(const std::vector<std::string>& vars) const {
  if (cs.empty()) return "true";
  std::string s;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (i) s += " and ";
    s += cs[i].to_string(vars);
  }
  return s;
}

Region region_from_guard(const Guard& g, int nvars) {
  Region r;
  r.nvars = nvars;
  r.cs = g.constraints;
  for (auto& c : r.cs) c.coeffs.resize(nvars, 0);
  return r;
}

std::vector<LinConstraint> tighten_to_le(const std::vector<LinConstraint>& cs) {
  // Everything becomes "coeffs . x <= constant" over integer points.
  std::vector<LinConstraint> out;
  auto push = [&](std::vector<std::int64_t> coeffs, std::int64_t c) {
    LinConstraint lc;
    lc.coeffs = std::move(coeffs);
    lc.rel = Rel::Le;
    lc.constant = c;
    // gcd tightening
    std::int64_t g = 0;
    for (auto a : lc.coeffs) g = std::gcd(g, a < 0 ? -a : a);
    if (g > 1) {
      for (auto& a : lc.coeffs) a /= g;
      std::int64_t q = lc.constant >= 0 ? lc.constant / g
                                        : -((-lc.constant + g - 1) / g);  // floor
      lc.constant = q;
    }
    out.push_back(std::move(lc));
  };
  for (const auto& c : cs) {
    std::vector<std::int64_t> neg(c.coeffs.size());
    for (std::size_t i = 0; i < c.coeffs.size(); ++i) neg[i] = -c.coeffs[i];
    switch (c.rel) {
      case Rel::Le: push(c.coeffs, c.constant); break;
      case Rel::Lt: push(c.coeffs, c.constant - 1); break;
      case Rel::Ge: push(neg, -c.constant); break;
      case Rel::Gt: push(neg, -c.constant - 1); break;
      case Rel::Eq:
        push(c.coeffs, c.constant);
        push(neg, -c.constant);
        break;
    }
  }
  return out;
}

namespace {

struct BigRow {
  std::vector<BigInt> a;
  BigInt b;
};

bool row_trivially_false(const BigRow& r) {
  for (const auto& x : r.a)
    if (x != 0) return false;
  return r.b < 0;  // 0 <= b fails iff b < 0
}

}  // namespace

bool region_provably_empty(const Region& region, int max_constraints) {
  auto le = tighten_to_le(region.cs);
  std::vector<BigRow> rows;
  rows.reserve(le.size());
  for (const auto& c : le) {
    BigRow r;
    r.a.assign(region.nvars, 0);
    for (std::size_t i = 0; i < c.coeffs.size() && i < static_cast<std::size_t>(region.nvars); ++i)
      r.a[i] = c.coeffs[i];
    r.b = c.constant;
    if (row_trivially_false(r)) return true;
    rows.push_back(std::move(r));
  }
  for (int v = 0; v < region.nvars; ++v) {
    std::vector<BigRow> uppers, lowers, rest;
    for (auto& r : rows) {
      if (r.a[v] > 0) uppers.push_back(std::move(r));
      else if (r.a[v] < 0) lowers.push_back(std::move(r));
      else rest.push_back(std::move(r));
    }
    for (const auto& u : uppers)
      for (const auto& l : lowers) {
        // u: au*x <= bu - ..., l: -al*x <= bl - ...  (al := -l.a[v] > 0)
        BigInt au = u.a[v];
        BigInt al = -l.a[v];
        BigRow n;
        n.a.assign(region.nvars, 0);
        for (int i = 0; i < region.nvars; ++i) n.a[i] = al * u.a[i] + au * l.a[i];
        n.b = al * u.b + au * l.b;
        if (row_trivially_false(n)) return true;
        rest.push_back(std::move(n));
        if (rest.size() > static_cast<std::size_t>(max_constraints)) return false;  // give up
      }
    rows = std::move(rest);
  }
  for (const auto& r : rows)
    if (row_trivially_false(r)) return true;
  return false;
}

bool region_implies_nonneg(const Region& r, const std::vector<std::int64_t>& coeffs,
                           std::int64_t constant) {
  // region && (coeffs.x + constant <= -1) must be empty
  LinConstraint bad;
  bad.coeffs = coeffs;
  bad.rel = Rel::Le;
  bad.constant = -constant - 1;
  return region_provably_empty(r.with(bad));
}

std::optional<std::vector<Point>> enumerate_region(const Region& region, std::size_t cap) {
  // Interval hull per variable via FM projection.
  std::vector<std::int64_t> lo(region.nvars), hi(region.nvars);
  for (int v = 0; v < region.nvars; ++v) {
    // Eliminate all other variables, read off bounds on v.
    Region proj = region;
    auto le = tighten_to_le(proj.cs);
    std::vector<BigRow> rows;
    for (const auto& c : le) {
      BigRow r;
      r.a.assign(region.nvars, 0);
      for (std::size_t i = 0; i < c.coeffs.size() && i < static_cast<std::size_t>(region.nvars); ++i)
        r.a[i] = c.coeffs[i];
      r.b = c.constant;
      rows.push_back(std::move(r));
    }
    for (int w = 0; w < region.nvars; ++w) {
      if (w == v) continue;
      std::vector<BigRow> uppers, lowers, rest;
      for (auto& r : rows) {
        if (r.a[w] > 0) uppers.push_back(std::move(r));
        else if (r.a[w] < 0) lowers.push_back(std::move(r));
        else rest.push_back(std::move(r));
      }
      for (const auto& u : uppers)
        for (const auto& l : lowers) {
          BigInt au = u.a[w];
          BigInt al = -l.a[w];
          BigRow n;
          n.a.assign(region.nvars, 0);
          for (int i = 0; i < region.nvars; ++i) n.a[i] = al * u.a[i] + au * l.a[i];
          n.b = al * u.b + au * l.b;
          rest.push_back(std::move(n));
          if (rest.size() > 4000) return std::nullopt;
        }
      rows = std::move(rest);
    }
    std::optional<BigInt> lov, hiv;
    for (const auto& r : rows) {
      if (r.a[v] > 0) {
        BigInt u = floor_div(r.b, r.a[v]);
        if (!hiv || u < *hiv) hiv = u;
      } else if (r.a[v] < 0) {
        BigInt l = ceil_div(-r.b, -r.a[v]);
        if (!lov || l > *lov) lov = l;
      }
    }
    if (!lov || !hiv) return std::nullopt;  // unbounded
    auto l64 = to_int64(*lov);
    auto h64 = to_int64(*hiv);
    if (!l64 || !h64) return std::nullopt;
    lo[v] = *l64;
    hi[v] = *h64;
    if (hi[v] < lo[v]) return std::vector<Point>{};
  }
  // cardinality check on the box
  double size = 1;
  for (int v = 0; v < region.nvars; ++v) size *= static_cast<double>(hi[v] - lo[v] + 1);
  if (size > static_cast<double>(cap) * 8) return std::nullopt;
  std::vector<Point> out;
  Point p(region.nvars);
  std::function<void(int)> rec = [&](int v) {
    if (v == region.nvars) {
      if (region.contains(p)) out.push_back(p);
      return;
    }
    for (std::int64_t x = lo[v]; x <= hi[v]; ++x) {
      p[v] = x;
      rec(v + 1);
      if (out.size() > cap) return;
    }
  };
  rec(0);
  if (out.size() > cap) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------
// Slack parametrizations
// ---------------------------------------------------------------------------

namespace {

struct ParamState {
  // var -> affine over slacks (resolved when coeffs non-null)
  std::vector<bool> resolved;
  std::vector<std::vector<std::int64_t>> coeffs;  // over slacks
  std::vector<std::int64_t> offset;
  int nslacks = 0;
};

SlackSubst finish(const ParamState& st, int nvars) {
  SlackSubst s;
  s.nslacks = st.nslacks;
  s.coeffs.resize(nvars);
  s.offset.resize(nvars);
  for (int v = 0; v < nvars; ++v) {
    s.coeffs[v] = st.coeffs[v];
    s.coeffs[v].resize(st.nslacks, 0);
    s.offset[v] = st.offset[v];
  }
  return s;
}

}  // namespace

std::vector<SlackSubst> derive_parametrizations(const Region& region, int max_out) {
  const int nvars = region.nvars;
  auto le = tighten_to_le(region.cs);  // all as <=

  // Equalities survive as coeff/-coeff pairs; recover unit equalities from
  // the original list instead.
  std::vector<LinConstraint> eqs;
  for (const auto& c : region.cs)
    if (c.rel == Rel::Eq) {
      LinConstraint cc = c;
      cc.coeffs.resize(nvars, 0);
      eqs.push_back(cc);
    }

  std::vector<SlackSubst> out;

  // candidate bounds per var: list of (other-var linear form, constant, is_lower)
  struct Bound {
    std::vector<std::int64_t> other;  // over vars
    std::int64_t c;
    bool lower;
  };
  std::vector<std::vector<Bound>> bounds(nvars);
  for (const auto& c : le) {
    // sum a.x <= b ; isolate vars with coefficient +-1
    for (int v = 0; v < nvars; ++v) {
      if (v >= static_cast<int>(c.coeffs.size())) break;
      std::int64_t av = c.coeffs[v];
      if (av != 1 && av != -1) continue;
      Bound b;
      b.other.assign(nvars, 0);
      for (int w = 0; w < nvars; ++w)
        if (w != v && w < static_cast<int>(c.coeffs.size())) b.other[w] = -c.coeffs[w] * av;
      b.c = av * c.constant;
      b.lower = av == -1;  // -x + .. <= b  =>  x >= ..
      bounds[v].push_back(std::move(b));
    }
  }
  // Unit equalities x = linear(other) + c
  std::vector<std::optional<Bound>> eq_bound(nvars);
  for (const auto& c : eqs) {
    for (int v = 0; v < nvars; ++v) {
      std::int64_t av = v < static_cast<int>(c.coeffs.size()) ? c.coeffs[v] : 0;
      if (av != 1 && av != -1) continue;
      Bound b;
      b.other.assign(nvars, 0);
      for (int w = 0; w < nvars; ++w)
        if (w != v && w < static_cast<int>(c.coeffs.size())) b.other[w] = -c.coeffs[w] * av;
      b.c = av * c.constant;
      b.lower = true;
      eq_bound[v] = b;
      break;
    }
  }

  // DFS over choices of one bound per variable in dependency order.
  // choice index: -2 = equality (no slack), -1 = plain domain slack x = s,
  // k >= 0 = bounds[v][k].
  std::vector<int> per_var_choices(nvars, 0);
  std::function<void(ParamState&, std::vector<bool>&)> walk =
      [&](ParamState& st, std::vector<bool>& visiting) {
        if (static_cast<int>(out.size()) >= max_out) return;
        // pick an unresolved variable all of whose chosen-bound deps can resolve
        int v = -1;
        for (int i = 0; i < nvars; ++i)
          if (!st.resolved[i]) { v = i; break; }
        if (v < 0) {
          out.push_back(finish(st, nvars));
          return;
        }
        // resolve v: try each choice whose referenced vars are all resolved
        std::vector<int> choices;
        if (eq_bound[v]) choices.push_back(-2);
        for (int k = 0; k < static_cast<int>(bounds[v].size()); ++k) choices.push_back(k);
        choices.push_back(-1);
        for (int choice : choices) {
          if (static_cast<int>(out.size()) >= max_out) return;
          const Bound* b = nullptr;
          if (choice == -2) b = &*eq_bound[v];
          else if (choice >= 0) b = &bounds[v][choice];
          bool deps_ok = true;
          if (b)
            for (int w = 0; w < nvars; ++w)
              if (b->other[w] != 0 && !st.resolved[w]) deps_ok = false;
          if (!deps_ok) continue;
          ParamState next = st;
          next.resolved[v] = true;
          next.coeffs[v].assign(std::max(next.nslacks, 1), 0);
          next.offset[v] = 0;
          if (!b) {
            // x = s
            next.coeffs[v].resize(next.nslacks + 1, 0);
            next.coeffs[v][next.nslacks] = 1;
            next.nslacks += 1;
          } else {
            // x = linear(resolved) + c (+ s if inequality)
            std::vector<std::int64_t> acc(next.nslacks + 1, 0);
            std::int64_t off = b->c;
            for (int w = 0; w < nvars; ++w) {
              if (b->other[w] == 0) continue;
              for (std::size_t j = 0; j < next.coeffs[w].size(); ++j)
                acc[j] += b->other[w] * next.coeffs[w][j];
              off += b->other[w] * next.offset[w];
            }
            if (choice != -2) {
              acc[next.nslacks] = b->lower ? 1 : -1;
              next.nslacks += 1;
            }
            next.coeffs[v] = std::move(acc);
            next.offset[v] = off;
          }
          for (auto& cv : next.coeffs)
            cv.resize(next.nslacks, 0);
          walk(next, visiting);
        }
      };

  ParamState st;
  st.resolved.assign(nvars, false);
  st.coeffs.assign(nvars, {});
  st.offset.assign(nvars, 0);
  std::vector<bool> visiting(nvars, false);
  walk(st, visiting);
  return out;
}

// ---------------------------------------------------------------------------
// The prover
// ---------------------------------------------------------------------------

namespace {

// Substitute variables by slack affine forms at the expression level.
Expr apply_subst(const Expr& e, const SlackSubst& s) {
  std::vector<Expr> bindings;
  bindings.reserve(s.coeffs.size());
  for (std::size_t v = 0; v < s.coeffs.size(); ++v) {
    Expr acc = econst(s.offset[v]);
    for (int j = 0; j < s.nslacks; ++j)
      if (s.coeffs[v][j] != 0) acc = eadd(acc, escale(Rational(s.coeffs[v][j]), evar(j)));
    bindings.push_back(acc);
  }
  return substitute(e, bindings);
}

struct Obligation {
  Expr e;
  Region region;
};

// Find the first Ite, or Min/Max with affine arguments. Returns a rewritten
// pair of (condition region deltas, replacement) alternatives.
struct SplitPlan {
  bool found = false;
  bool is_ite = false;
  Guard ite_guard;              // for ite
  LinConstraint ge, lt;         // for min/max: a-b >= 0 / a-b <= -1
  Expr take_a, take_b;          // whole expression rewritten per branch
  std::string blocked;          // non-empty when a min/max with nonlinear args was hit
};

Expr replace_node(const Expr& root, const Expr& target, const Expr& repl) {
  if (root.get() == target.get()) return repl;
  if (root->args.empty()) return root;
  ExprNode out = *root;
  out.args.clear();
  bool changed = false;
  for (const auto& a : root->args) {
    Expr r = replace_node(a, target, repl);
    changed = changed || r.get() != a.get();
    out.args.push_back(std::move(r));
  }
  if (!changed) return root;
  return std::make_shared<const ExprNode>(std::move(out));
}

const ExprNode* find_split_node(const Expr& e, Expr& found) {
  const ExprNode& n = *e;
  if (n.kind == ExprKind::Ite || n.kind == ExprKind::Min || n.kind == ExprKind::Max) {
    found = e;
    return &n;
  }
  for (const auto& a : n.args) {
    if (const ExprNode* r = find_split_node(a, found)) return r;
  }
  return nullptr;
}

SplitPlan plan_split(const Expr& e, int nvars) {
  SplitPlan plan;
  Expr node;
  const ExprNode* n = find_split_node(e, node);
  if (!n) return plan;
  plan.found = true;
  if (n->kind == ExprKind::Ite) {
    plan.is_ite = true;
    plan.ite_guard = n->guard;
    plan.take_a = replace_node(e, node, n->args[0]);
    plan.take_b = replace_node(e, node, n->args[1]);
    return plan;
  }
  auto a = as_affine(n->args[0], nvars);
  auto b = as_affine(n->args[1], nvars);
  if (!a || !b) {
    plan.blocked = n->kind == ExprKind::Min ? "min with nonlinear arguments"
                                            : "max with nonlinear arguments";
    return plan;
  }
  LinConstraint ge;  // a - b >= 0
  ge.coeffs.resize(nvars, 0);
  for (int i = 0; i < nvars; ++i) ge.coeffs[i] = a->coeffs[i] - b->coeffs[i];
  ge.rel = Rel::Ge;
  ge.constant = b->constant - a->constant;
  plan.ge = ge;
  plan.lt = ge.negated();
  bool take_first_when_ge = n->kind == ExprKind::Max;
  plan.take_a = replace_node(e, node, n->args[take_first_when_ge ? 0 : 1]);  // when a >= b
  plan.take_b = replace_node(e, node, n->args[take_first_when_ge ? 1 : 0]);  // when a < b
  return plan;
}

// Collect floor/ceil divisors of affine arguments.
void collect_divisors(const Expr& e, std::vector<std::int64_t>& divs) {
  if (e->kind == ExprKind::FloorDiv || e->kind == ExprKind::CeilDiv) {
    if (std::find(divs.begin(), divs.end(), e->divisor) == divs.end())
      divs.push_back(e->divisor);
  }
  for (const auto& a : e->args) collect_divisors(a, divs);
}

void collect_floor_vars(const Expr& e, int nvars, std::vector<bool>& used) {
  if (e->kind == ExprKind::FloorDiv || e->kind == ExprKind::CeilDiv) {
    auto aff = as_affine(e->args[0], nvars);
    if (aff)
      for (int i = 0; i < nvars; ++i)
        if (aff->coeffs[i]) used[i] = true;
  }
  for (const auto& a : e->args) collect_floor_vars(a, nvars, used);
}

// Direct test: atomize, then check nonneg coefficients under one of the
// slack parametrizations, substituting atoms by exact or lower-bound forms.
bool direct_nonneg_test(const Expr& e, const Region& region, std::string& why) {
  AtomTable table;
  table.nvars = region.nvars;
  AtomizeResult ar = atomize(e, table);
  if (!ar.ok()) {
    why = ar.failure;
    return false;
  }
  if (ar.poly->is_zero()) return true;

  auto params = derive_parametrizations(region);
  for (const auto& sub : params) {
    // base vars -> polynomials over slacks
    int S = sub.nslacks;
    // atoms get appended after slacks: exact floor gammas and lower-bound Bs
    std::vector<Polynomial> var_sub;
    int width = S + static_cast<int>(table.atoms.size());
    bool feasible = true;
    for (int v = 0; v < region.nvars; ++v) {
      Polynomial p = Polynomial::constant(width, Rational(sub.offset[v]));
      for (int j = 0; j < S; ++j)
        if (sub.coeffs[v][j])
          p += Polynomial::variable(width, j).scaled(Rational(sub.coeffs[v][j]));
      var_sub.push_back(std::move(p));
    }
    // atom substitutions
    for (std::size_t ai = 0; ai < table.atoms.size() && feasible; ++ai) {
      const Atom& at = table.atoms[ai];
      int fresh = S + static_cast<int>(ai);
      // substituted argument: lin over slacks
      std::vector<Rational> slack_coeffs(S, Rational(0));
      Rational cst(at.cst);
      for (int v = 0; v < region.nvars; ++v) {
        if (!at.lin[v]) continue;
        cst += Rational(at.lin[v]) * sub.offset[v];
        for (int j = 0; j < S; ++j)
          slack_coeffs[j] += Rational(at.lin[v]) * sub.coeffs[v][j];
      }
      bool coeffs_nonneg = std::all_of(slack_coeffs.begin(), slack_coeffs.end(),
                                       [](const Rational& c) { return c >= 0; });
      Polynomial arg = Polynomial::constant(width, cst);
      for (int j = 0; j < S; ++j)
        if (slack_coeffs[j] != 0)
          arg += Polynomial::variable(width, j).scaled(slack_coeffs[j]);

      Polynomial repl;
      switch (at.kind) {
        case Atom::Floor: {
          // exact: floor(arg/m) = (arg - (m-1) + gamma)/m with gamma in [0, m-1]
          repl = (arg + Polynomial::constant(width, Rational(1 - at.divisor)) +
                  Polynomial::variable(width, fresh))
                     .scaled(Rational(1, at.divisor));
          break;
        }
        case Atom::Pow: {
          if (at.base >= 1 && coeffs_nonneg && cst >= 0 && is_integer(cst)) {
            // A = b^cst * (1 + B)
            Rational scale(1);
            auto c64 = to_int64(num(cst));
            if (!c64 || *c64 > 4096) { feasible = false; break; }
            for (std::int64_t i = 0; i < *c64; ++i) scale *= at.base;
            repl = (Polynomial::constant(width, Rational(1)) +
                    Polynomial::variable(width, fresh))
                       .scaled(scale);
          } else {
            repl = Polynomial::variable(width, fresh);  // just A >= 0
          }
          break;
        }
        case Atom::Fact: {
          if (coeffs_nonneg && cst >= 0 && is_integer(cst)) {
            auto c64 = to_int64(num(cst));
            if (!c64 || *c64 > 1000) { feasible = false; break; }
            BigInt f = 1;
            for (std::int64_t i = 2; i <= *c64; ++i) f *= i;
            repl = Polynomial::constant(width, Rational(f)) + Polynomial::variable(width, fresh);
          } else {
            repl = Polynomial::variable(width, fresh);
          }
          break;
        }
        case Atom::Log: {
          if (coeffs_nonneg && cst >= 1 && is_integer(cst)) {
            BigInt lg = msb(num(cst));
            repl = Polynomial::constant(width, Rational(lg)) + Polynomial::variable(width, fresh);
          } else {
            repl = Polynomial::variable(width, fresh);
          }
          break;
        }
      }
      var_sub.push_back(std::move(repl));
    }
    if (!feasible) continue;
    Polynomial final_poly = ar.poly->substituted(var_sub, width);
    if (final_poly.all_coeffs_nonneg()) return true;
  }
  why = "sign-indefinite after slack parametrization";
  return false;
}

struct Prover {
  ProveOptions opts;
  int budget;
  std::string first_reason;

  bool fail(const std::string& why) {
    if (first_reason.empty()) first_reason = why;
    return false;
  }

  bool prove(const Expr& e, const Region& region) {
    if (--budget < 0) return fail("split budget exhausted");
    if (region_provably_empty(region)) return true;

    SplitPlan plan = plan_split(e, region.nvars);
    if (plan.found) {
      if (!plan.blocked.empty()) return fail(plan.blocked);
      if (plan.is_ite) {
        if (!prove(plan.take_a, region.with_all(plan.ite_guard.constraints))) return false;
        // negation of a conjunction: k complementary regions
        Region acc = region;
        for (const auto& c : plan.ite_guard.constraints) {
          if (c.rel == Rel::Eq) {
            LinConstraint lt = c;
            lt.rel = Rel::Lt;
            LinConstraint gt = c;
            gt.rel = Rel::Gt;
            if (!prove(plan.take_b, acc.with(lt))) return false;
            if (!prove(plan.take_b, acc.with(gt))) return false;
          } else {
            if (!prove(plan.take_b, acc.with(c.negated()))) return false;
          }
          acc = acc.with(c);
        }
        return true;
      }
      if (!prove(plan.take_a, region.with(plan.ge))) return false;
      return prove(plan.take_b, region.with(plan.lt));
    }

    // No ite/min/max left.
    std::string why;
    if (direct_nonneg_test(e, region, why)) return true;

    // Residue splitting for floors/ceils.
    std::vector<std::int64_t> divs;
    collect_divisors(e, divs);
    if (!divs.empty()) {
      std::int64_t m = 1;
      for (auto d : divs) m = std::lcm(m, d);
      bool allowed = divs.size() == 1 ? m <= opts.max_modulus : m <= opts.max_modulus_product;
      if (allowed) {
        std::vector<bool> used(region.nvars, false);
        collect_floor_vars(e, region.nvars, used);
        int k = static_cast<int>(std::count(used.begin(), used.end(), true));
        double classes = std::pow(static_cast<double>(m), k);
        if (classes <= static_cast<double>(opts.max_regions)) {
          return residue_split(e, region, used, m);
        }
      }
      return fail(why + " (floors present, modulus too large)");
    }
    return fail(why);
  }

  bool residue_split(const Expr& e, const Region& region, const std::vector<bool>& used,
                     std::int64_t m) {
    // substitute x_i = m * x_i' + rho_i for the used variables
    std::vector<int> idx;
    for (int i = 0; i < region.nvars; ++i)
      if (used[i]) idx.push_back(i);
    std::vector<std::int64_t> rho(idx.size(), 0);
    while (true) {
      // build bindings
      std::vector<Expr> bindings;
      std::vector<AffineForm> maps;
      for (int v = 0; v < region.nvars; ++v) {
        auto it = std::find(idx.begin(), idx.end(), v);
        AffineForm f;
        f.coeffs.assign(region.nvars, 0);
        if (it == idx.end()) {
          f.coeffs[v] = 1;
          bindings.push_back(evar(v));
        } else {
          std::int64_t r = rho[it - idx.begin()];
          f.coeffs[v] = m;
          f.constant = r;
          bindings.push_back(eadd(escale(Rational(m), evar(v)), econst(r)));
        }
        maps.push_back(std::move(f));
      }
      Expr esub_expr = substitute(e, bindings);
      Region rsub;
      rsub.nvars = region.nvars;
      for (const auto& c : region.cs) rsub.cs.push_back(compose_constraint(c, maps));
      // x' >= 0 for substituted variables (x >= rho covered by x' >= 0)
      for (int v : idx) {
        LinConstraint nn;
        nn.coeffs.assign(region.nvars, 0);
        nn.coeffs[v] = 1;
        nn.rel = Rel::Ge;
        nn.constant = 0;
        rsub.cs.push_back(std::move(nn));
      }
      if (!prove(esub_expr, rsub)) return false;
      // next residue combination
      std::size_t carry = 0;
      while (carry < rho.size()) {
        if (++rho[carry] < m) break;
        rho[carry] = 0;
        ++carry;
      }
      if (carry == rho.size()) break;
    }
    return true;
  }
};

}  // namespace

ProveOutcome prove_nonneg_on_region(const Expr& e, const Region& region,
                                    const ProveOptions& opts) {
  if (contains_call(e)) return {false, "expression contains a recursive call"};
  Prover p{opts, opts.max_regions, {}};
  bool ok = p.prove(e, region);
  return {ok, ok ? "" : p.first_reason};
}

}  // namespace recbound
