#include "recbound/recurrence.hpp"

#include "recbound/regions.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>

namespace recbound {

int Recurrence::case_at(const Point& p) const {
  for (std::size_t i = 0; i < cases.size(); ++i)
    if (cases[i].guard.eval(p)) return static_cast<int>(i);
  return -1;
}

Guard default_domain(int nvars) {
  Guard g;
  for (int i = 0; i < nvars; ++i) {
    LinConstraint c;
    c.coeffs.assign(nvars, 0);
    c.coeffs[i] = 1;
    c.rel = Rel::Ge;
    c.constant = 0;
    g.constraints.push_back(std::move(c));
  }
  return g;
}

Expr simplify(const Expr& e) {
  const ExprNode& n = *e;
  if (n.args.empty()) return e;
  std::vector<Expr> args;
  args.reserve(n.args.size());
  for (const auto& a : n.args) args.push_back(simplify(a));
  auto cval = [](const Expr& x) -> const Rational* {
    return x->kind == ExprKind::Const ? &x->value : nullptr;
  };
  switch (n.kind) {
    case ExprKind::Add: {
      const Rational *a = cval(args[0]), *b = cval(args[1]);
      if (a && b) return econst(Rational(*a + *b));
      if (a && *a == 0) return args[1];
      if (b && *b == 0) return args[0];
      break;
    }
    case ExprKind::Sub: {
      const Rational *a = cval(args[0]), *b = cval(args[1]);
      if (a && b) return econst(Rational(*a - *b));
      if (b && *b == 0) return args[0];
      break;
    }
    case ExprKind::Mul: {
      const Rational *a = cval(args[0]), *b = cval(args[1]);
      if (a && b) return econst(Rational(*a * *b));
      if ((a && *a == 0) || (b && *b == 0)) return econst(0);
      if (a && *a == 1) return args[1];
      if (b && *b == 1) return args[0];
      break;
    }
    case ExprKind::Min:
    case ExprKind::Max: {
      const Rational *a = cval(args[0]), *b = cval(args[1]);
      if (a && b)
        return econst(n.kind == ExprKind::Min ? std::min(*a, *b) : std::max(*a, *b));
      break;
    }
    case ExprKind::FloorDiv:
    case ExprKind::CeilDiv: {
      if (const Rational* a = cval(args[0])) {
        Rational scaled = *a / n.divisor;
        return econst(Rational(n.kind == ExprKind::FloorDiv ? rational_floor(scaled)
                                                            : rational_ceil(scaled)));
      }
      break;
    }
    default:
      break;
  }
  ExprNode out = n;
  out.args = std::move(args);
  return std::make_shared<const ExprNode>(std::move(out));
}

// ---------------------------------------------------------------------------
// build + validation
// ---------------------------------------------------------------------------

namespace {

bool check_divisors(const Expr& e) {
  if ((e->kind == ExprKind::FloorDiv || e->kind == ExprKind::CeilDiv) && e->divisor <= 0)
    return false;
  for (const auto& a : e->args)
    if (!check_divisors(a)) return false;
  return true;
}

void check_arity(const Expr& e, int nvars) {
  if (e->kind == ExprKind::Var && (e->var < 0 || e->var >= nvars))
    throw BuildError("variable index out of range");
  if (e->kind == ExprKind::Call && static_cast<int>(e->args.size()) != nvars)
    throw BuildError("call arity does not match the variable count");
  for (const auto& a : e->args) check_arity(a, nvars);
}

bool has_nested_call(const Expr& e, bool inside_call_args = false) {
  if (e->kind == ExprKind::Call) {
    if (inside_call_args) return true;
    for (const auto& a : e->args)
      if (has_nested_call(a, true)) return true;
    return false;
  }
  for (const auto& a : e->args)
    if (has_nested_call(a, inside_call_args)) return true;
  return false;
}

}  // namespace

std::vector<Point> validation_sample(const Recurrence& r) {
  const int d = r.arity();
  // per-variable interesting values: a small range plus guard thresholds
  std::vector<std::set<std::int64_t>> vals(d);
  auto add_consts = [&](const Guard& g) {
    for (const auto& c : g.constraints) {
      int nz = 0, var = -1;
      for (std::size_t i = 0; i < c.coeffs.size(); ++i)
        if (c.coeffs[i]) { ++nz; var = static_cast<int>(i); }
      if (nz != 1 || std::abs(c.coeffs[var]) != 1) continue;
      std::int64_t t = c.constant / c.coeffs[var];
      for (std::int64_t dd = -1; dd <= 1; ++dd)
        if (t + dd >= 0 && t + dd < 100000) vals[var].insert(t + dd);
    }
  };
  for (const auto& c : r.cases) add_consts(c.guard);
  add_consts(r.domain);
  for (int v = 0; v < d; ++v)
    for (std::int64_t x = 0; x <= 6; ++x) vals[v].insert(x);
  // cap the grid
  std::vector<std::vector<std::int64_t>> axis(d);
  for (int v = 0; v < d; ++v) axis[v] = {vals[v].begin(), vals[v].end()};
  std::vector<Point> pts;
  Point p(d);
  std::function<void(int)> rec = [&](int v) {
    if (pts.size() > 20000) return;
    if (v == d) {
      pts.push_back(p);
      return;
    }
    for (auto x : axis[v]) {
      p[v] = x;
      rec(v + 1);
    }
  };
  rec(0);
  return pts;
}

Recurrence build(std::vector<std::string> vars, std::vector<Case> cases,
                 std::optional<Guard> domain, std::string name) {
  Recurrence r;
  r.name = std::move(name);
  r.vars = std::move(vars);
  r.cases = std::move(cases);
  const int d = r.arity();
  Guard dom = default_domain(d);
  if (domain) dom.constraints.insert(dom.constraints.end(), domain->constraints.begin(),
                                     domain->constraints.end());
  r.domain = dom;
  if (r.cases.empty()) throw BuildError("no cases");
  for (auto& c : r.cases) {
    check_arity(c.body, d);
    if (!check_divisors(c.body)) throw BuildError("floor/ceil divisors must be positive integers");
    for (auto& g : c.guard.constraints) g.coeffs.resize(d, 0);
    c.recursive = contains_call(c.body);
    if (has_nested_call(c.body)) r.nested = true;
  }
  for (auto& g : r.domain.constraints) g.coeffs.resize(d, 0);

  // disjointness + coverage on the validation sample
  for (const Point& p : validation_sample(r)) {
    if (!r.domain.eval(p)) continue;
    int matches = 0;
    for (const auto& c : r.cases)
      if (c.guard.eval(p)) ++matches;
    if (matches == 0) {
      std::string s = "{";
      for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + std::to_string(p[i]);
      throw BuildError("guards do not cover the domain at " + s + "}");
    }
    if (matches > 1) {
      std::string s = "{";
      for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + std::to_string(p[i]);
      throw BuildError("overlapping guards at " + s + "}");
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// classification
// ---------------------------------------------------------------------------

namespace {

// Syntactic certificate that the case body denotes a monotone operator:
// built from the equation-grammar constructors with nonnegative scaling.
bool monotone_body(const Expr& e) {
  if (!contains_call(e)) return true;  // arbitrary base-case expression
  const ExprNode& n = *e;
  switch (n.kind) {
    case ExprKind::Call:
      // nested self-composition is monotone for monotone candidates
      for (const auto& a : n.args)
        if (!monotone_body(a)) return false;
      return true;
    case ExprKind::Add:
    case ExprKind::Min:
    case ExprKind::Max:
      return monotone_body(n.args[0]) && monotone_body(n.args[1]);
    case ExprKind::Sub:
      return monotone_body(n.args[0]) && !contains_call(n.args[1]);
    case ExprKind::Mul: {
      const Expr& a = n.args[0];
      const Expr& b = n.args[1];
      if (!contains_call(a)) return syntactically_nonneg(a) && monotone_body(b);
      if (!contains_call(b)) return syntactically_nonneg(b) && monotone_body(a);
      return false;
    }
    case ExprKind::FloorDiv:
    case ExprKind::CeilDiv:
      return monotone_body(n.args[0]);  // monotone post-composition
    case ExprKind::Ite:
      return monotone_body(n.args[0]) && monotone_body(n.args[1]);
    default:
      return false;  // builtins over recursive calls are not certified
  }
}

std::optional<AffineCase> decompose_body(const Expr& e) {
  const ExprNode& n = *e;
  if (!contains_call(e)) return AffineCase{{}, e};
  switch (n.kind) {
    case ExprKind::Call: {
      for (const auto& a : n.args)
        if (contains_call(a)) return std::nullopt;  // nested
      AffineCase c;
      c.terms.push_back({econst(1), n.args});
      c.bias = econst(0);
      return c;
    }
    case ExprKind::Add: {
      auto a = decompose_body(n.args[0]);
      auto b = decompose_body(n.args[1]);
      if (!a || !b) return std::nullopt;
      a->terms.insert(a->terms.end(), b->terms.begin(), b->terms.end());
      a->bias = simplify(eadd(a->bias, b->bias));
      return a;
    }
    case ExprKind::Sub: {
      if (contains_call(n.args[1])) return std::nullopt;
      auto a = decompose_body(n.args[0]);
      if (!a) return std::nullopt;
      a->bias = simplify(esub(a->bias, n.args[1]));
      return a;
    }
    case ExprKind::Mul: {
      Expr scale = n.args[0], body = n.args[1];
      if (contains_call(scale)) std::swap(scale, body);
      if (contains_call(scale)) return std::nullopt;
      if (!syntactically_nonneg(scale)) return std::nullopt;
      auto a = decompose_body(body);
      if (!a) return std::nullopt;
      for (auto& t : a->terms) t.coef = simplify(emul(scale, t.coef));
      a->bias = simplify(emul(scale, a->bias));
      return a;
    }
    default:
      return std::nullopt;  // min/max/ite/floor/builtin around calls
  }
}

}  // namespace

std::optional<std::vector<AffineCase>> decompose_affine(const Recurrence& r) {
  std::vector<AffineCase> out;
  for (const auto& c : r.cases) {
    auto d = decompose_body(c.body);
    if (!d) return std::nullopt;
    out.push_back(std::move(*d));
  }
  return out;
}

EqClass classify(const Recurrence& r) {
  EqClass k;
  k.nested = r.nested;
  k.case_recursive.reserve(r.cases.size());
  for (const auto& c : r.cases) k.case_recursive.push_back(c.recursive);
  k.monotone_by_construction =
      std::all_of(r.cases.begin(), r.cases.end(), [](const Case& c) { return monotone_body(c.body); });
  auto dec = decompose_affine(r);
  k.affine = dec.has_value();
  if (k.affine) {
    k.linear_recursive = true;
    for (const auto& c : *dec) {
      if (c.terms.empty()) continue;
      if (c.terms.size() != 1) { k.linear_recursive = false; break; }
      const Expr& coef = c.terms[0].coef;
      if (!(coef->kind == ExprKind::Const && coef->value == 1)) {
        k.linear_recursive = false;
        break;
      }
    }
  }
  // EqsA is a subset of EqsM
  if (k.affine && !k.monotone_by_construction) k.monotone_by_construction = true;
  return k;
}

Recurrence linearise(const Recurrence& r) {
  auto dec = decompose_affine(r);
  if (!dec) throw BuildError("linearise: equation is not affine");
  Recurrence out = r;
  out.name = r.name.empty() ? "lin" : r.name + "_lin";
  for (std::size_t i = 0; i < out.cases.size(); ++i) {
    const AffineCase& c = (*dec)[i];
    Expr acc = econst(0);
    for (const auto& t : c.terms) acc = simplify(eadd(acc, emul(t.coef, ecall(t.args))));
    out.cases[i].body = acc;
    out.cases[i].recursive = contains_call(acc);
  }
  return out;
}

std::vector<Expr> bias(const Recurrence& r) {
  auto dec = decompose_affine(r);
  if (!dec) throw BuildError("bias: equation is not affine");
  std::vector<Expr> out;
  out.reserve(dec->size());
  for (const auto& c : *dec) out.push_back(c.bias);
  return out;
}

// ---------------------------------------------------------------------------
// call structure
// ---------------------------------------------------------------------------

namespace {

void collect_call_nodes(const Expr& e, std::vector<Expr>& out) {
  if (e->kind == ExprKind::Call) out.push_back(e);
  for (const auto& a : e->args) collect_call_nodes(a, out);
}

}  // namespace

std::vector<Point> call_targets(const Recurrence& r, const Point& p, const CallOracle& oracle) {
  int ci = r.case_at(p);
  std::vector<Point> out;
  if (ci < 0) return out;
  std::vector<Expr> calls;
  collect_call_nodes(r.cases[ci].body, calls);
  for (const auto& call : calls) {
    Point t(call->args.size());
    bool ok = true;
    for (std::size_t i = 0; i < call->args.size(); ++i) {
      EvalResult a = eval_expr(call->args[i], p, oracle);
      if (!a.ok() || !is_integer(*a.value)) { ok = false; break; }
      auto v = to_int64(num(*a.value));
      if (!v) { ok = false; break; }
      t[i] = *v;
    }
    if (ok) out.push_back(std::move(t));
  }
  return out;
}

CallGraph call_graph(const Recurrence& r, const std::vector<Point>& probe_sample) {
  const int nc = static_cast<int>(r.cases.size());
  CallGraph g;
  g.ncases = nc;
  g.edge.assign(nc, std::vector<bool>(nc, false));
  CallOracle no_oracle = [](const Point&) -> std::optional<Rational> { return Rational(0); };
  for (const Point& p : probe_sample) {
    if (!r.in_domain(p)) continue;
    int i = r.case_at(p);
    if (i < 0) continue;
    for (const Point& t : call_targets(r, p, no_oracle)) {
      if (!r.in_domain(t)) continue;
      int k = r.case_at(t);
      if (k >= 0) g.edge[k][i] = true;
    }
  }
  // guard propagation for affine call maps: edge when D_i && preimage(D_k)
  // is not provably empty
  for (int i = 0; i < nc; ++i) {
    if (!r.cases[i].recursive) continue;
    std::vector<Expr> calls;
    collect_call_nodes(r.cases[i].body, calls);
    for (const auto& call : calls) {
      std::vector<AffineForm> maps;
      bool affine_map = true;
      for (const auto& a : call->args) {
        auto f = as_affine(a, r.arity());
        if (!f) { affine_map = false; break; }
        maps.push_back(std::move(*f));
      }
      if (!affine_map) continue;
      for (int k = 0; k < nc; ++k) {
        if (g.edge[k][i]) continue;
        Region reg;
        reg.nvars = r.arity();
        reg.cs = r.cases[i].guard.constraints;
        for (const auto& c : r.domain.constraints) reg.cs.push_back(c);
        Guard pre = compose_guard(r.cases[k].guard, maps);
        Guard predom = compose_guard(r.domain, maps);
        for (const auto& c : pre.constraints) reg.cs.push_back(c);
        for (const auto& c : predom.constraints) reg.cs.push_back(c);
        if (!region_provably_empty(reg)) g.edge[k][i] = true;
      }
    }
  }
  // Tarjan SCC on edges callee->caller; topological order emits callees first.
  std::vector<int> index(nc, -1), low(nc, 0), stack;
  std::vector<bool> on_stack(nc, false);
  int counter = 0;
  std::function<void(int)> strongconnect = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (int w = 0; w < nc; ++w) {
      if (!g.edge[v][w]) continue;
      if (index[w] < 0) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<int> scc;
      while (true) {
        int w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        scc.push_back(w);
        if (w == v) break;
      }
      g.sccs.push_back(std::move(scc));
    }
  };
  for (int v = 0; v < nc; ++v)
    if (index[v] < 0) strongconnect(v);
  std::reverse(g.sccs.begin(), g.sccs.end());
  return g;
}

std::vector<Point> interface_points(const Recurrence& r, const Guard& d1, const Guard& d2,
                                    const std::vector<Point>& sample) {
  std::vector<Point> out;
  CallOracle zero = [](const Point&) -> std::optional<Rational> { return Rational(0); };
  for (const Point& p : sample) {
    if (!r.in_domain(p) || !d1.eval(p)) continue;
    for (const Point& t : call_targets(r, p, zero)) {
      if (d2.eval(t)) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

}  // namespace recbound
