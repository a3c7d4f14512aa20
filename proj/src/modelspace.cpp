#include "recbound/modelspace.hpp"

#include <functional>
#include <sstream>
#include <stdexcept>

namespace recbound {

namespace {

std::string monomial_name(const std::vector<int>& exps, int dim) {
  static const char* names1 = "n";
  std::ostringstream os;
  bool first = true;
  for (int v = 0; v < dim; ++v) {
    if (!exps[v]) continue;
    if (!first) os << "*";
    os << (dim == 1 ? std::string(names1) : "x" + std::to_string(v + 1));
    if (exps[v] > 1) os << "^" << exps[v];
    first = false;
  }
  if (first) return "1";
  return os.str();
}

Expr monomial_expr(const std::vector<int>& exps, int dim) {
  Expr acc = econst(1);
  bool any = false;
  for (int v = 0; v < dim; ++v)
    for (int k = 0; k < exps[v]; ++k) {
      acc = any ? emul(acc, evar(v)) : evar(v);
      any = true;
    }
  return acc;
}

void monomials_up_to(int dim, int degree, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(dim, 0);
  std::function<void(int, int)> rec = [&](int v, int left) {
    if (v == dim) {
      out.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[v] = e;
      rec(v + 1, left - e);
    }
    cur[v] = 0;
  };
  rec(0, degree);
  // graded order: by total degree then lexicographic, constant first
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    int da = 0, db = 0;
    for (int x : a) da += x;
    for (int x : b) db += x;
    if (da != db) return da < db;
    return a < b;
  });
}

}  // namespace

FeatureBank default_bank(int dim, BankProfile profile, int degree) {
  FeatureBank bank;
  std::vector<std::vector<int>> monos;
  monomials_up_to(dim, degree, monos);
  for (const auto& m : monos)
    bank.features.push_back({monomial_name(m, dim), monomial_expr(m, dim)});

  auto log_of_var = [&](int v) {
    // log2floor(max(x_v, 1)) is total on the whole of N^d
    return ebuiltin(BuiltinFn::Log2Floor, {emax(evar(v), econst(1))});
  };
  switch (profile) {
    case BankProfile::Poly2:
      bank.provenance = "poly-deg-" + std::to_string(degree);
      break;
    case BankProfile::Poly2Log: {
      bank.provenance = "poly-log";
      std::size_t base = bank.features.size();
      for (int v = 0; v < dim; ++v) {
        std::string ln = dim == 1 ? "log2(n)" : "log2(x" + std::to_string(v + 1) + ")";
        for (std::size_t i = 0; i < base; ++i) {
          const Feature& f = bank.features[i];
          std::string nm = f.name == "1" ? ln : f.name + "*" + ln;
          bank.features.push_back({nm, simplify(emul(f.expr, log_of_var(v)))});
        }
      }
      break;
    }
    case BankProfile::FastGrow: {
      bank.provenance = "exp-fact";
      std::vector<std::pair<std::string, Expr>> exps;
      for (int v = 0; v < dim; ++v) {
        std::string x = dim == 1 ? "n" : "x" + std::to_string(v + 1);
        exps.emplace_back("2^" + x, ebuiltin(BuiltinFn::Pow, {econst(2), evar(v)}));
        exps.emplace_back("3^" + x, ebuiltin(BuiltinFn::Pow, {econst(3), evar(v)}));
      }
      for (const auto& [nm, ex] : exps) bank.features.push_back({nm, ex});
      // products of two exponentials in distinct variables
      for (std::size_t i = 0; i < exps.size(); ++i)
        for (std::size_t j = i + 1; j < exps.size(); ++j) {
          if (i / 2 == j / 2) continue;  // same variable
          bank.features.push_back(
              {exps[i].first + "*" + exps[j].first, emul(exps[i].second, exps[j].second)});
        }
      for (int v = 0; v < dim; ++v) {
        std::string x = dim == 1 ? "n" : "x" + std::to_string(v + 1);
        bank.features.push_back({x + "!", ebuiltin(BuiltinFn::Factorial, {evar(v)})});
      }
      break;
    }
  }
  return bank;
}

PiecewiseModelSpace build_model_space(const Recurrence& r, FeatureBank bank) {
  PiecewiseModelSpace ms;
  ms.nvars = r.arity();
  ms.bank = std::move(bank);
  auto aff = decompose_affine(r);
  for (std::size_t i = 0; i < r.cases.size(); ++i) {
    if (r.cases[i].recursive) {
      ms.recursive_cases.push_back(static_cast<int>(i));
      ms.subdomains.push_back(r.cases[i].guard);
      ms.f_base_pieces.push_back(econst(0));
    } else {
      // Phi(0) on a non-recursive case is the case body itself.
      ms.f_base_pieces.push_back(aff ? (*aff)[i].bias
                                     : simplify(substitute_calls(r.cases[i].body, econst(0))));
    }
  }
  return ms;
}

Rational PiecewiseModelSpace::f_base(const Recurrence& r, const Point& p) const {
  int ci = r.case_at(p);
  if (ci < 0) throw std::runtime_error("f_base: point outside every case");
  if (r.cases[ci].recursive) return Rational(0);
  return eval_closed(f_base_pieces[ci], p);
}

Rational PiecewiseModelSpace::candidate_eval(const Recurrence& r, const std::vector<Rational>& alpha,
                                             const Point& p) const {
  if (static_cast<int>(alpha.size()) != dimension())
    throw std::runtime_error("candidate_eval: coefficient count mismatch");
  if (!r.in_domain(p)) throw std::runtime_error("candidate_eval: point outside the domain");
  int ci = r.case_at(p);
  if (ci < 0) throw std::runtime_error("candidate_eval: no case at point");
  Rational acc = f_base(r, p);
  for (std::size_t s = 0; s < recursive_cases.size(); ++s) {
    if (recursive_cases[s] != ci) continue;
    int nf = static_cast<int>(bank.features.size());
    for (int j = 0; j < nf; ++j) {
      const Rational& a = alpha[s * nf + j];
      if (a == 0) continue;
      acc += a * eval_closed(bank.features[j].expr, p);
    }
  }
  return acc;
}

double PiecewiseModelSpace::candidate_eval(const Recurrence& r, const std::vector<double>& alpha,
                                           const Point& p) const {
  if (static_cast<int>(alpha.size()) != dimension())
    throw std::runtime_error("candidate_eval: coefficient count mismatch");
  int ci = r.case_at(p);
  if (ci < 0) throw std::runtime_error("candidate_eval: no case at point");
  double acc = to_double(f_base(r, p));
  for (std::size_t s = 0; s < recursive_cases.size(); ++s) {
    if (recursive_cases[s] != ci) continue;
    int nf = static_cast<int>(bank.features.size());
    for (int j = 0; j < nf; ++j) {
      if (alpha[s * nf + j] == 0) continue;
      acc += alpha[s * nf + j] * to_double(eval_closed(bank.features[j].expr, p));
    }
  }
  return acc;
}

}  // namespace recbound
