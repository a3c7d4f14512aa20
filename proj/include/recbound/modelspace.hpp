#pragma once

#include <string>
#include <vector>

#include "recbound/recurrence.hpp"

namespace recbound {

enum class BankProfile { Poly2, Poly2Log, FastGrow };

struct Feature {
  std::string name;
  Expr expr;  // Call-free, over the equation's variables
};

struct FeatureBank {
  std::vector<Feature> features;  // always contains the constant-1 feature
  std::string provenance;         // poly-deg-k | poly-log | exp-fact | custom
};

// profile poly2: all monomials of total degree <= degree.
// poly2+log: plus each monomial times log2floor(max(x_i, 1)).
// fastgrow: poly plus 2^{x_i}, 3^{x_i}, pairwise products of two exponentials,
// and x_i!.
FeatureBank default_bank(int dim, BankProfile profile, int degree = 2);

struct PiecewiseModelSpace {
  std::vector<int> recursive_cases;      // indices into r.cases
  std::vector<Guard> subdomains;         // guards of those cases
  FeatureBank bank;                      // shared feature list
  std::vector<Expr> f_base_pieces;       // per case of r (0 on recursive)
  int nvars = 0;

  int dimension() const {
    return static_cast<int>(recursive_cases.size() * bank.features.size());
  }
  // column index -> (subdomain slot, feature index)
  std::pair<int, int> column_of(int col) const {
    int nf = static_cast<int>(bank.features.size());
    return {col / nf, col % nf};
  }

  // f_base value at a point (the exact solution on non-recursive subdomains).
  Rational f_base(const Recurrence& r, const Point& p) const;

  // f_base + sum over the subdomain containing p. Exact.
  Rational candidate_eval(const Recurrence& r, const std::vector<Rational>& alpha,
                          const Point& p) const;
  double candidate_eval(const Recurrence& r, const std::vector<double>& alpha,
                        const Point& p) const;
};

PiecewiseModelSpace build_model_space(const Recurrence& r, FeatureBank bank);

}  // namespace recbound
