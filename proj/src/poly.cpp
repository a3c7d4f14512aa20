#include "recbound/poly.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace recbound {

Polynomial Polynomial::constant(int width, Rational c) {
  Polynomial p;
  p.width = width;
  if (c != 0) p.terms.emplace(std::vector<std::uint32_t>(width, 0), std::move(c));
  return p;
}

Polynomial Polynomial::variable(int width, int index) {
  Polynomial p;
  p.width = width;
  std::vector<std::uint32_t> m(width, 0);
  m.at(index) = 1;
  p.terms.emplace(std::move(m), Rational(1));
  return p;
}

bool Polynomial::is_constant() const {
  for (const auto& [m, c] : terms)
    for (auto e : m)
      if (e) return false;
  return true;
}

Rational Polynomial::constant_term() const {
  auto it = terms.find(std::vector<std::uint32_t>(width, 0));
  return it == terms.end() ? Rational(0) : it->second;
}

bool Polynomial::all_coeffs_nonneg() const {
  for (const auto& [m, c] : terms)
    if (c < 0) return false;
  return true;
}

bool Polynomial::all_coeffs_nonpos() const {
  for (const auto& [m, c] : terms)
    if (c > 0) return false;
  return true;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms) {
    int t = 0;
    for (auto e : m) t += static_cast<int>(e);
    d = std::max(d, t);
  }
  return d;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  for (const auto& [m, c] : o.terms) {
    auto it = terms.find(m);
    if (it == terms.end()) {
      terms.emplace(m, c);
    } else {
      it->second += c;
      if (it->second == 0) terms.erase(it);
    }
  }
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  for (const auto& [m, c] : o.terms) {
    auto it = terms.find(m);
    if (it == terms.end()) {
      terms.emplace(m, Rational(-c));
    } else {
      it->second -= c;
      if (it->second == 0) terms.erase(it);
    }
  }
  return *this;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  r += o;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r = *this;
  r -= o;
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r;
  r.width = width;
  for (const auto& [m1, c1] : terms)
    for (const auto& [m2, c2] : o.terms) {
      std::vector<std::uint32_t> m(width);
      for (int i = 0; i < width; ++i) m[i] = m1[i] + m2[i];
      auto it = r.terms.find(m);
      Rational c = c1 * c2;
      if (it == r.terms.end()) {
        if (c != 0) r.terms.emplace(std::move(m), std::move(c));
      } else {
        it->second += c;
        if (it->second == 0) r.terms.erase(it);
      }
    }
  return r;
}

Polynomial Polynomial::scaled(const Rational& c) const {
  Polynomial r;
  r.width = width;
  if (c == 0) return r;
  for (const auto& [m, v] : terms) r.terms.emplace(m, Rational(v * c));
  return r;
}

Polynomial Polynomial::pow(std::uint32_t e) const {
  Polynomial acc = Polynomial::constant(width, Rational(1));
  Polynomial base = *this;
  while (e) {
    if (e & 1) acc = acc * base;
    if (e >>= 1) base = base * base;
  }
  return acc;
}

Rational Polynomial::eval(const std::vector<Rational>& values) const {
  Rational acc(0);
  for (const auto& [m, c] : terms) {
    Rational t = c;
    for (int i = 0; i < width; ++i)
      for (std::uint32_t k = 0; k < m[i]; ++k) t *= values.at(i);
    acc += t;
  }
  return acc;
}

Polynomial Polynomial::substituted(const std::vector<Polynomial>& subs, int new_width) const {
  Polynomial acc;
  acc.width = new_width;
  for (const auto& [m, c] : terms) {
    Polynomial t = Polynomial::constant(new_width, c);
    for (int i = 0; i < width; ++i)
      if (m[i]) t = t * subs.at(i).pow(m[i]);
    acc += t;
  }
  return acc;
}

Polynomial Polynomial::widened(int new_width) const {
  Polynomial r;
  r.width = new_width;
  for (const auto& [m, c] : terms) {
    std::vector<std::uint32_t> mm(new_width, 0);
    std::copy(m.begin(), m.end(), mm.begin());
    r.terms.emplace(std::move(mm), c);
  }
  return r;
}

std::string Polynomial::to_string(const std::vector<std::string>& names) const {
  if (terms.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms) {
    if (!first) os << " + ";
    os << recbound::to_string(c);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) {
        os << "*" << (i < names.size() ? names[i] : "v" + std::to_string(i));
        if (m[i] > 1) os << "^" << m[i];
      }
    first = false;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

PolyResult normalize_polynomial(const Expr& e, int nvars) {
  const ExprNode& n = *e;
  switch (n.kind) {
    case ExprKind::Const:
      return {Polynomial::constant(nvars, n.value), {}};
    case ExprKind::Var:
      return {Polynomial::variable(nvars, n.var), {}};
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul: {
      PolyResult a = normalize_polynomial(n.args[0], nvars);
      if (!a.ok()) return a;
      PolyResult b = normalize_polynomial(n.args[1], nvars);
      if (!b.ok()) return b;
      switch (n.kind) {
        case ExprKind::Add: return {*a.poly + *b.poly, {}};
        case ExprKind::Sub: return {*a.poly - *b.poly, {}};
        default:            return {*a.poly * *b.poly, {}};
      }
    }
    case ExprKind::FloorDiv: return {std::nullopt, {"floordiv"}};
    case ExprKind::CeilDiv: return {std::nullopt, {"ceildiv"}};
    case ExprKind::Min: return {std::nullopt, {"min"}};
    case ExprKind::Max: return {std::nullopt, {"max"}};
    case ExprKind::Ite: return {std::nullopt, {"ite"}};
    case ExprKind::Call: return {std::nullopt, {"call"}};
    case ExprKind::Builtin: return {std::nullopt, {builtin_name(n.fn)}};
  }
  return {std::nullopt, {"unknown"}};
}

// ---------------------------------------------------------------------------
// Atoms
// ---------------------------------------------------------------------------

bool Atom::operator<(const Atom& o) const {
  if (kind != o.kind) return kind < o.kind;
  if (lin != o.lin) return lin < o.lin;
  if (cst != o.cst) return cst < o.cst;
  if (divisor != o.divisor) return divisor < o.divisor;
  return base < o.base;
}

std::string Atom::to_string(const std::vector<std::string>& vars) const {
  std::ostringstream os;
  auto lin_str = [&](std::int64_t c) {
    std::string s;
    bool first = true;
    for (std::size_t i = 0; i < lin.size(); ++i) {
      if (!lin[i]) continue;
      if (!first) s += "+";
      if (lin[i] != 1) s += std::to_string(lin[i]) + "*";
      s += i < vars.size() ? vars[i] : "x" + std::to_string(i);
      first = false;
    }
    if (c || first) {
      if (!first) s += "+";
      s += std::to_string(c);
    }
    return s;
  };
  switch (kind) {
    case Floor: os << "floordiv(" << lin_str(cst) << ", " << divisor << ")"; break;
    case Pow: os << "pow(" << recbound::to_string(base) << ", " << lin_str(cst) << ")"; break;
    case Fact: os << "fact(" << lin_str(cst) << ")"; break;
    case Log: os << "log2floor(" << lin_str(cst) << ")"; break;
  }
  return os.str();
}

int AtomTable::intern(const Atom& a) {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(atoms[i] < a) && !(a < atoms[i])) return nvars + static_cast<int>(i);
  }
  atoms.push_back(a);
  return nvars + static_cast<int>(atoms.size()) - 1;
}

namespace {

// If p is affine with integer coefficients, return (lin, cst).
std::optional<std::pair<std::vector<std::int64_t>, std::int64_t>> poly_as_int_affine(
    const Polynomial& p, int nvars) {
  std::vector<std::int64_t> lin(nvars, 0);
  std::int64_t cst = 0;
  for (const auto& [m, c] : p.terms) {
    if (!is_integer(c)) return std::nullopt;
    auto ci = to_int64(num(c));
    if (!ci) return std::nullopt;
    int seen = -1;
    int total = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      total += static_cast<int>(m[i]);
      if (m[i]) seen = static_cast<int>(i);
    }
    if (total == 0) {
      cst = *ci;
    } else if (total == 1 && seen < nvars) {
      lin[seen] = *ci;
    } else {
      return std::nullopt;  // nonlinear or involves an atom
    }
  }
  return std::make_pair(std::move(lin), cst);
}

struct Atomizer {
  AtomTable& table;
  // min constant per factorial linear part, collected in a pre-pass
  std::map<std::vector<std::int64_t>, std::int64_t> fact_min;
  std::string failure;

  std::optional<Polynomial> run(const Expr& e) {
    collect_fact(e);
    auto p = walk(e);
    if (!p) return std::nullopt;
    return p->widened(table.width());
  }

  void collect_fact(const Expr& e) {
    if (e->kind == ExprKind::Builtin && e->fn == BuiltinFn::Factorial) {
      AtomTable probe;
      probe.nvars = table.nvars;
      Atomizer sub{probe, {}, {}};
      auto arg = sub.walk(e->args[0]);
      if (arg) {
        auto aff = poly_as_int_affine(*arg, table.nvars);
        if (aff) {
          auto it = fact_min.find(aff->first);
          if (it == fact_min.end())
            fact_min.emplace(aff->first, aff->second);
          else
            it->second = std::min(it->second, aff->second);
        }
      }
    }
    for (const auto& a : e->args) collect_fact(a);
  }

  std::optional<Polynomial> fail(std::string why) {
    if (failure.empty()) failure = std::move(why);
    return std::nullopt;
  }

  Polynomial atom_var(const Atom& a) {
    int idx = table.intern(a);
    return Polynomial::variable(table.width(), idx);
  }

  std::optional<Polynomial> walk(const Expr& e) {
    const ExprNode& n = *e;
    int w = table.width();
    switch (n.kind) {
      case ExprKind::Const:
        return Polynomial::constant(w, n.value);
      case ExprKind::Var:
        return Polynomial::variable(w, n.var);
      case ExprKind::Add:
      case ExprKind::Sub:
      case ExprKind::Mul: {
        auto a = walk(n.args[0]);
        if (!a) return std::nullopt;
        auto b = walk(n.args[1]);
        if (!b) return std::nullopt;
        Polynomial pa = a->widened(table.width());
        Polynomial pb = b->widened(table.width());
        if (n.kind == ExprKind::Add) return pa + pb;
        if (n.kind == ExprKind::Sub) return pa - pb;
        return pa * pb;
      }
      case ExprKind::FloorDiv:
      case ExprKind::CeilDiv: {
        auto a = walk(n.args[0]);
        if (!a) return std::nullopt;
        auto aff = poly_as_int_affine(*a, table.nvars);
        if (!aff) return fail("floor of a nonlinear argument");
        std::int64_t m = n.divisor;
        std::int64_t c = aff->second;
        if (n.kind == ExprKind::CeilDiv) c += m - 1;  // ceil(a/m) = floor((a+m-1)/m)
        std::int64_t q = c >= 0 ? c / m : -((-c + m - 1) / m);
        std::int64_t r = c - q * m;  // in [0, m)
        // all-zero linear part: constant fold
        bool zero = std::all_of(aff->first.begin(), aff->first.end(),
                                [](std::int64_t v) { return v == 0; });
        if (zero) return Polynomial::constant(table.width(), Rational(q));
        Atom at;
        at.kind = Atom::Floor;
        at.lin = aff->first;
        at.cst = r;
        at.divisor = m;
        Polynomial res = atom_var(at);
        res += Polynomial::constant(table.width(), Rational(q));
        return res;
      }
      case ExprKind::Builtin: {
        auto a = walk(n.args[0]);
        if (!a) return std::nullopt;
        auto aff = poly_as_int_affine(*a, table.nvars);
        switch (n.fn) {
          case BuiltinFn::Log2Floor: {
            if (!aff) return fail("log2floor of a nonlinear argument");
            bool zero = std::all_of(aff->first.begin(), aff->first.end(),
                                    [](std::int64_t v) { return v == 0; });
            if (zero) {
              if (aff->second <= 0) return fail("log2floor of a nonpositive constant");
              return Polynomial::constant(table.width(),
                                          Rational(msb(BigInt(aff->second))));
            }
            Atom at;
            at.kind = Atom::Log;
            at.lin = aff->first;
            at.cst = aff->second;
            return atom_var(at);
          }
          case BuiltinFn::Factorial: {
            if (!aff) return fail("factorial of a nonlinear argument");
            bool zero = std::all_of(aff->first.begin(), aff->first.end(),
                                    [](std::int64_t v) { return v == 0; });
            if (zero) {
              if (aff->second < 0) return fail("factorial of a negative constant");
              BigInt acc = 1;
              for (std::int64_t i = 2; i <= aff->second; ++i) acc *= i;
              return Polynomial::constant(table.width(), Rational(acc));
            }
            std::int64_t cmin = fact_min.count(aff->first) ? fact_min.at(aff->first) : aff->second;
            if (aff->second - cmin > 8) return fail("factorial shift too large");
            Atom at;
            at.kind = Atom::Fact;
            at.lin = aff->first;
            at.cst = cmin;
            Polynomial res = atom_var(at);
            // fact(l + c) = fact(l + cmin) * prod_{j=cmin+1..c} (l + j)
            for (std::int64_t j = cmin + 1; j <= aff->second; ++j) {
              Polynomial factor;
              factor.width = table.width();
              factor += Polynomial::constant(table.width(), Rational(j));
              for (int i = 0; i < table.nvars; ++i)
                if (aff->first[i])
                  factor += Polynomial::variable(table.width(), i).scaled(Rational(aff->first[i]));
              res = res.widened(table.width()) * factor;
            }
            return res;
          }
          case BuiltinFn::Pow: {
            auto baseP = walk(n.args[0]);
            if (!baseP) return std::nullopt;
            // note: args[0] is the base, args[1] the exponent; `a` above was
            // the base walk result as well — recompute the exponent here
            auto expP = walk(n.args[1]);
            if (!expP) return std::nullopt;
            if (!baseP->is_constant()) return fail("pow with a non-constant base");
            Rational b = baseP->constant_term();
            if (b <= 0) return fail("pow with a nonpositive base");
            auto affExp = poly_as_int_affine(*expP, table.nvars);
            if (!affExp) return fail("pow with a nonlinear exponent");
            bool zero = std::all_of(affExp->first.begin(), affExp->first.end(),
                                    [](std::int64_t v) { return v == 0; });
            // b^(l + c) = b^c * atom(b, l)
            Rational scale(1);
            std::int64_t c = affExp->second;
            bool invert = c < 0;
            std::uint64_t cc = static_cast<std::uint64_t>(invert ? -c : c);
            if (cc > 4096) return fail("pow constant exponent too large");
            Rational bb = b;
            for (std::uint64_t i = 0; i < cc; ++i) scale *= bb;
            if (invert) scale = Rational(1) / scale;
            if (zero) return Polynomial::constant(table.width(), scale);
            if (b == 1) return Polynomial::constant(table.width(), scale);
            Atom at;
            at.kind = Atom::Pow;
            at.lin = affExp->first;
            at.base = b;
            return atom_var(at).scaled(scale);
          }
        }
        return fail("unknown builtin");
      }
      case ExprKind::Min: return fail("min");
      case ExprKind::Max: return fail("max");
      case ExprKind::Ite: return fail("ite");
      case ExprKind::Call: return fail("call");
    }
    return fail("unknown node");
  }
};

}  // namespace

AtomizeResult atomize(const Expr& e, AtomTable& table) {
  Atomizer az{table, {}, {}};
  auto p = az.run(e);
  if (!p) return {std::nullopt, az.failure.empty() ? "atomize failed" : az.failure};
  return {p->widened(table.width()), {}};
}

}  // namespace recbound
