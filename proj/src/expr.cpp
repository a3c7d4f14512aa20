#include "recbound/expr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace recbound {

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::runtime_error("rational_from_double: non-finite");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  double m = std::frexp(x, &exp);  // x = m * 2^exp, 0.5 <= |m| < 1
  // 53 doublings make the mantissa integral.
  std::int64_t mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  exp -= 53;
  BigInt n = mant;
  if (exp >= 0) return Rational(n << exp);
  BigInt d = BigInt(1) << (-exp);
  return Rational(n, d);
}

const char* rel_name(Rel r) {
  switch (r) {
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Eq: return "=";
    case Rel::Ge: return ">=";
    case Rel::Gt: return ">";
  }
  return "?";
}

bool LinConstraint::eval(const Point& p) const {
  // Coefficients are i64 but points can be large; widen to BigInt.
  BigInt lhs = 0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0) continue;
    if (i >= p.size()) throw std::runtime_error("guard arity mismatch");
    lhs += BigInt(coeffs[i]) * p[i];
  }
  switch (rel) {
    case Rel::Lt: return lhs < constant;
    case Rel::Le: return lhs <= constant;
    case Rel::Eq: return lhs == constant;
    case Rel::Ge: return lhs >= constant;
    case Rel::Gt: return lhs > constant;
  }
  return false;
}

LinConstraint LinConstraint::negated() const {
  LinConstraint n = *this;
  switch (rel) {
    case Rel::Lt: n.rel = Rel::Ge; break;
    case Rel::Le: n.rel = Rel::Gt; break;
    case Rel::Ge: n.rel = Rel::Lt; break;
    case Rel::Gt: n.rel = Rel::Le; break;
    case Rel::Eq:
      throw std::runtime_error("cannot negate an equality into one constraint");
  }
  return n;
}

std::string LinConstraint::to_string(const std::vector<std::string>& vars) const {
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0) continue;
    std::int64_t c = coeffs[i];
    if (first) {
      if (c == -1) os << "-";
      else if (c != 1) os << c << "*";
    } else {
      os << (c < 0 ? " - " : " + ");
      if (c != 1 && c != -1) os << std::abs(c) << "*";
    }
    os << (i < vars.size() ? vars[i] : "x" + std::to_string(i));
    first = false;
  }
  if (first) os << "0";
  os << " " << rel_name(rel) << " " << constant;
  return os.str();
}

bool Guard::eval(const Point& p) const {
  for (const auto& c : constraints)
    if (!c.eval(p)) return false;
  return true;
}

std::string Guard::to_string(const std::vector<std::string>& vars) const {
  if (constraints.empty()) return "true";
  std::string s;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (i) s += " and ";
    s += constraints[i].to_string(vars);
  }
  return s;
}

Guard guard_and(const Guard& a, const Guard& b) {
  Guard g = a;
  g.constraints.insert(g.constraints.end(), b.constraints.begin(), b.constraints.end());
  return g;
}

bool eval_guard(const Guard& g, const Point& p) { return g.eval(p); }

// ---------------------------------------------------------------------------

const char* builtin_name(BuiltinFn f) {
  switch (f) {
    case BuiltinFn::Log2Floor: return "log2floor";
    case BuiltinFn::Pow: return "pow";
    case BuiltinFn::Factorial: return "fact";
  }
  return "?";
}

static Expr mk(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

Expr econst(Rational v) {
  ExprNode n;
  n.kind = ExprKind::Const;
  n.value = std::move(v);
  return mk(std::move(n));
}
Expr econst(std::int64_t v) { return econst(Rational(v)); }

Expr evar(int index) {
  ExprNode n;
  n.kind = ExprKind::Var;
  n.var = index;
  return mk(std::move(n));
}

static Expr binop(ExprKind k, Expr a, Expr b) {
  ExprNode n;
  n.kind = k;
  n.args = {std::move(a), std::move(b)};
  return mk(std::move(n));
}

Expr eadd(Expr a, Expr b) { return binop(ExprKind::Add, std::move(a), std::move(b)); }
Expr esub(Expr a, Expr b) { return binop(ExprKind::Sub, std::move(a), std::move(b)); }
Expr emul(Expr a, Expr b) { return binop(ExprKind::Mul, std::move(a), std::move(b)); }
Expr emin(Expr a, Expr b) { return binop(ExprKind::Min, std::move(a), std::move(b)); }
Expr emax(Expr a, Expr b) { return binop(ExprKind::Max, std::move(a), std::move(b)); }

Expr efloordiv(Expr a, std::int64_t k) {
  if (k <= 0) throw std::runtime_error("floordiv divisor must be a positive integer");
  ExprNode n;
  n.kind = ExprKind::FloorDiv;
  n.divisor = k;
  n.args = {std::move(a)};
  return mk(std::move(n));
}

Expr eceildiv(Expr a, std::int64_t k) {
  if (k <= 0) throw std::runtime_error("ceildiv divisor must be a positive integer");
  ExprNode n;
  n.kind = ExprKind::CeilDiv;
  n.divisor = k;
  n.args = {std::move(a)};
  return mk(std::move(n));
}

Expr eite(Guard g, Expr a, Expr b) {
  ExprNode n;
  n.kind = ExprKind::Ite;
  n.guard = std::move(g);
  n.args = {std::move(a), std::move(b)};
  return mk(std::move(n));
}

Expr ecall(std::vector<Expr> args) {
  ExprNode n;
  n.kind = ExprKind::Call;
  n.args = std::move(args);
  return mk(std::move(n));
}

Expr ebuiltin(BuiltinFn fn, std::vector<Expr> args) {
  std::size_t want = fn == BuiltinFn::Pow ? 2 : 1;
  if (args.size() != want) throw std::runtime_error("builtin arity mismatch");
  ExprNode n;
  n.kind = ExprKind::Builtin;
  n.fn = fn;
  n.args = std::move(args);
  return mk(std::move(n));
}

Expr escale(const Rational& c, Expr a) {
  if (c == 0) return econst(0);
  if (c == 1) return a;
  if (a->kind == ExprKind::Const) return econst(Rational(c * a->value));
  return emul(econst(c), std::move(a));
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

static EvalResult eval_builtin(const ExprNode& n, const Point& p, const CallOracle& oracle);

EvalResult eval_expr(const Expr& e, const Point& point, const CallOracle& oracle) {
  const ExprNode& n = *e;
  switch (n.kind) {
    case ExprKind::Const:
      return EvalResult::of(n.value);
    case ExprKind::Var:
      if (n.var < 0 || n.var >= static_cast<int>(point.size()))
        return EvalResult::undef(EvalErrorKind::DomainError, "variable index out of range");
      return EvalResult::of(Rational(point[n.var]));
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Min:
    case ExprKind::Max: {
      EvalResult a = eval_expr(n.args[0], point, oracle);
      if (!a.ok()) return a;
      EvalResult b = eval_expr(n.args[1], point, oracle);
      if (!b.ok()) return b;
      switch (n.kind) {
        case ExprKind::Add: return EvalResult::of(*a.value + *b.value);
        case ExprKind::Sub: return EvalResult::of(*a.value - *b.value);
        case ExprKind::Mul: return EvalResult::of(*a.value * *b.value);
        case ExprKind::Min: return EvalResult::of(std::min(*a.value, *b.value));
        default:            return EvalResult::of(std::max(*a.value, *b.value));
      }
    }
    case ExprKind::FloorDiv:
    case ExprKind::CeilDiv: {
      EvalResult a = eval_expr(n.args[0], point, oracle);
      if (!a.ok()) return a;
      Rational scaled = *a.value / n.divisor;
      return EvalResult::of(Rational(n.kind == ExprKind::FloorDiv ? rational_floor(scaled)
                                                                  : rational_ceil(scaled)));
    }
    case ExprKind::Ite:
      return eval_expr(n.guard.eval(point) ? n.args[0] : n.args[1], point, oracle);
    case ExprKind::Call: {
      Point target(n.args.size());
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        EvalResult a = eval_expr(n.args[i], point, oracle);
        if (!a.ok()) return a;
        if (!is_integer(*a.value))
          return EvalResult::undef(EvalErrorKind::DomainError, "non-integer call argument");
        auto v = to_int64(num(*a.value));
        if (!v) return EvalResult::undef(EvalErrorKind::DomainError, "call argument out of range");
        target[i] = *v;
      }
      auto v = oracle(target);
      if (!v) return EvalResult::undef(EvalErrorKind::OracleUndefined);
      return EvalResult::of(std::move(*v));
    }
    case ExprKind::Builtin:
      return eval_builtin(n, point, oracle);
  }
  return EvalResult::undef(EvalErrorKind::DomainError, "bad node");
}

static EvalResult eval_builtin(const ExprNode& n, const Point& p, const CallOracle& oracle) {
  EvalResult a = eval_expr(n.args[0], p, oracle);
  if (!a.ok()) return a;
  switch (n.fn) {
    case BuiltinFn::Log2Floor: {
      if (!is_integer(*a.value) || *a.value <= 0)
        return EvalResult::undef(EvalErrorKind::DomainError, "log2floor needs a positive integer");
      return EvalResult::of(Rational(msb(num(*a.value))));
    }
    case BuiltinFn::Factorial: {
      if (!is_integer(*a.value) || *a.value < 0)
        return EvalResult::undef(EvalErrorKind::DomainError, "factorial needs a nonnegative integer");
      auto k = to_int64(num(*a.value));
      if (!k || *k > 1000000)
        return EvalResult::undef(EvalErrorKind::DomainError, "factorial argument too large");
      BigInt acc = 1;
      for (std::int64_t i = 2; i <= *k; ++i) acc *= i;
      return EvalResult::of(Rational(acc));
    }
    case BuiltinFn::Pow: {
      EvalResult b = eval_expr(n.args[1], p, oracle);
      if (!b.ok()) return b;
      if (!is_integer(*b.value))
        return EvalResult::undef(EvalErrorKind::DomainError, "pow exponent must be an integer");
      auto k = to_int64(num(*b.value));
      if (!k || *k > 1000000 || *k < -1000000)
        return EvalResult::undef(EvalErrorKind::DomainError, "pow exponent out of range");
      if (*a.value == 0 && *k < 0)
        return EvalResult::undef(EvalErrorKind::DomainError, "pow: zero base, negative exponent");
      Rational base = *a.value;
      bool invert = *k < 0;
      std::uint64_t e = static_cast<std::uint64_t>(invert ? -*k : *k);
      Rational acc(1);
      while (e) {
        if (e & 1) acc *= base;
        base *= base;
        e >>= 1;
      }
      if (invert) acc = Rational(1) / acc;
      return EvalResult::of(acc);
    }
  }
  return EvalResult::undef(EvalErrorKind::DomainError, "bad builtin");
}

Rational eval_closed(const Expr& e, const Point& point) {
  EvalResult r = eval_expr(e, point, [](const Point&) -> std::optional<Rational> {
    return std::nullopt;
  });
  if (!r.ok()) {
    if (contains_call(e)) throw std::runtime_error("eval_closed on an expression with calls");
    throw std::runtime_error("eval_closed: " + r.detail);
  }
  return *r.value;
}

// ---------------------------------------------------------------------------

bool contains_call(const Expr& e) {
  if (e->kind == ExprKind::Call) return true;
  for (const auto& a : e->args)
    if (contains_call(a)) return true;
  return false;
}

std::optional<AffineForm> as_affine(const Expr& e, int nvars) {
  const ExprNode& n = *e;
  switch (n.kind) {
    case ExprKind::Const: {
      if (!is_integer(n.value)) return std::nullopt;
      auto c = to_int64(num(n.value));
      if (!c) return std::nullopt;
      AffineForm f;
      f.coeffs.assign(nvars, 0);
      f.constant = *c;
      return f;
    }
    case ExprKind::Var: {
      if (n.var < 0 || n.var >= nvars) return std::nullopt;
      AffineForm f;
      f.coeffs.assign(nvars, 0);
      f.coeffs[n.var] = 1;
      return f;
    }
    case ExprKind::Add:
    case ExprKind::Sub: {
      auto a = as_affine(n.args[0], nvars);
      auto b = as_affine(n.args[1], nvars);
      if (!a || !b) return std::nullopt;
      for (int i = 0; i < nvars; ++i)
        a->coeffs[i] += n.kind == ExprKind::Add ? b->coeffs[i] : -b->coeffs[i];
      a->constant += n.kind == ExprKind::Add ? b->constant : -b->constant;
      return a;
    }
    case ExprKind::Mul: {
      auto a = as_affine(n.args[0], nvars);
      auto b = as_affine(n.args[1], nvars);
      if (!a || !b) return std::nullopt;
      auto is_const = [&](const AffineForm& f) {
        return std::all_of(f.coeffs.begin(), f.coeffs.end(), [](auto c) { return c == 0; });
      };
      if (is_const(*a)) std::swap(a, b);
      if (!is_const(*b)) return std::nullopt;
      for (auto& c : a->coeffs) c *= b->constant;
      a->constant *= b->constant;
      return a;
    }
    default:
      return std::nullopt;
  }
}

LinConstraint compose_constraint(const LinConstraint& c, const std::vector<AffineForm>& maps) {
  LinConstraint out;
  out.rel = c.rel;
  std::size_t d = maps.empty() ? 0 : maps[0].coeffs.size();
  out.coeffs.assign(d, 0);
  out.constant = c.constant;
  for (std::size_t i = 0; i < c.coeffs.size(); ++i) {
    if (c.coeffs[i] == 0) continue;
    if (i >= maps.size()) throw std::runtime_error("compose_constraint arity");
    for (std::size_t j = 0; j < d; ++j) out.coeffs[j] += c.coeffs[i] * maps[i].coeffs[j];
    out.constant -= c.coeffs[i] * maps[i].constant;
  }
  return out;
}

Guard compose_guard(const Guard& g, const std::vector<AffineForm>& maps) {
  Guard out;
  for (const auto& c : g.constraints) out.constraints.push_back(compose_constraint(c, maps));
  return out;
}

Expr substitute(const Expr& e, const std::vector<Expr>& bindings) {
  const ExprNode& n = *e;
  switch (n.kind) {
    case ExprKind::Const:
      return e;
    case ExprKind::Var:
      if (n.var < 0 || n.var >= static_cast<int>(bindings.size()))
        throw std::runtime_error("substitute: variable out of range");
      return bindings[n.var];
    case ExprKind::Ite: {
      std::vector<AffineForm> maps;
      maps.reserve(bindings.size());
      for (const auto& b : bindings) {
        auto f = as_affine(b, static_cast<int>(bindings.size()));
        if (!f) throw std::runtime_error("substitute into a guard needs affine bindings");
        maps.push_back(std::move(*f));
      }
      return eite(compose_guard(n.guard, maps), substitute(n.args[0], bindings),
                  substitute(n.args[1], bindings));
    }
    default: {
      ExprNode out = n;
      out.args.clear();
      for (const auto& a : n.args) out.args.push_back(substitute(a, bindings));
      return mk(std::move(out));
    }
  }
}

Expr substitute_calls(const Expr& e, const Expr& value) {
  const ExprNode& n = *e;
  if (n.kind == ExprKind::Call) return value;
  if (n.args.empty()) return e;
  ExprNode out = n;
  out.args.clear();
  for (const auto& a : n.args) out.args.push_back(substitute_calls(a, value));
  return mk(std::move(out));
}

bool syntactically_nonneg(const Expr& e) {
  const ExprNode& n = *e;
  switch (n.kind) {
    case ExprKind::Const: return n.value >= 0;
    case ExprKind::Var: return true;  // domain is a subset of N^d
    case ExprKind::Add:
    case ExprKind::Mul:
    case ExprKind::Min:
    case ExprKind::Max:
      return syntactically_nonneg(n.args[0]) && syntactically_nonneg(n.args[1]);
    case ExprKind::Sub: return false;
    case ExprKind::FloorDiv:
    case ExprKind::CeilDiv:
      return syntactically_nonneg(n.args[0]);
    case ExprKind::Ite:
      return syntactically_nonneg(n.args[0]) && syntactically_nonneg(n.args[1]);
    case ExprKind::Call: return false;
    case ExprKind::Builtin:
      switch (n.fn) {
        case BuiltinFn::Log2Floor: return true;  // defined => arg >= 1 => value >= 0
        case BuiltinFn::Factorial: return true;
        case BuiltinFn::Pow: return syntactically_nonneg(n.args[0]);
      }
  }
  return false;
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return true;
  const ExprNode& x = *a;
  const ExprNode& y = *b;
  if (x.kind != y.kind || x.args.size() != y.args.size()) return false;
  switch (x.kind) {
    case ExprKind::Const:
      if (x.value != y.value) return false;
      break;
    case ExprKind::Var:
      if (x.var != y.var) return false;
      break;
    case ExprKind::FloorDiv:
    case ExprKind::CeilDiv:
      if (x.divisor != y.divisor) return false;
      break;
    case ExprKind::Builtin:
      if (x.fn != y.fn) return false;
      break;
    case ExprKind::Ite: {
      if (x.guard.constraints.size() != y.guard.constraints.size()) return false;
      for (std::size_t i = 0; i < x.guard.constraints.size(); ++i) {
        const auto& c = x.guard.constraints[i];
        const auto& d = y.guard.constraints[i];
        if (c.rel != d.rel || c.constant != d.constant || c.coeffs != d.coeffs) return false;
      }
      break;
    }
    default:
      break;
  }
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (!expr_equal(x.args[i], y.args[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Printing (matches the file grammar; round-trips through the parser)
// ---------------------------------------------------------------------------

namespace {

int precedence(ExprKind k) {
  switch (k) {
    case ExprKind::Add:
    case ExprKind::Sub: return 1;
    case ExprKind::Mul: return 2;
    default: return 3;
  }
}

void print(const Expr& e, const std::vector<std::string>& vars, std::ostream& os, int parent_prec) {
  const ExprNode& n = *e;
  switch (n.kind) {
    case ExprKind::Const: {
      bool wrap = n.value < 0 && parent_prec > 0;
      if (wrap) os << "(";
      os << to_string(n.value);
      if (wrap) os << ")";
      return;
    }
    case ExprKind::Var:
      os << (n.var < static_cast<int>(vars.size()) ? vars[n.var] : "x" + std::to_string(n.var));
      return;
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul: {
      int p = precedence(n.kind);
      bool wrap = p < parent_prec;
      if (wrap) os << "(";
      print(n.args[0], vars, os, p);
      os << (n.kind == ExprKind::Add ? " + " : n.kind == ExprKind::Sub ? " - " : "*");
      // right child of - needs its own parens at equal precedence
      print(n.args[1], vars, os, n.kind == ExprKind::Mul ? p : p + 1);
      if (wrap) os << ")";
      return;
    }
    case ExprKind::FloorDiv:
    case ExprKind::CeilDiv:
      os << (n.kind == ExprKind::FloorDiv ? "floordiv(" : "ceildiv(");
      print(n.args[0], vars, os, 0);
      os << ", " << n.divisor << ")";
      return;
    case ExprKind::Min:
    case ExprKind::Max:
      os << (n.kind == ExprKind::Min ? "min(" : "max(");
      print(n.args[0], vars, os, 0);
      os << ", ";
      print(n.args[1], vars, os, 0);
      os << ")";
      return;
    case ExprKind::Ite:
      os << "ite(" << n.guard.to_string(vars) << ", ";
      print(n.args[0], vars, os, 0);
      os << ", ";
      print(n.args[1], vars, os, 0);
      os << ")";
      return;
    case ExprKind::Call:
      os << "f(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) os << ", ";
        print(n.args[i], vars, os, 0);
      }
      os << ")";
      return;
    case ExprKind::Builtin:
      os << builtin_name(n.fn) << "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) os << ", ";
        print(n.args[i], vars, os, 0);
      }
      os << ")";
      return;
  }
}

}  // namespace

std::string expr_to_string(const Expr& e, const std::vector<std::string>& vars) {
  std::ostringstream os;
  print(e, vars, os, 0);
  return os.str();
}

}  // namespace recbound
