#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recbound/expr.hpp"

namespace recbound {

struct Case {
  Guard guard;
  Expr body;
  bool recursive = false;  // computed at build time
};

// Piecewise equation over a discrete domain: first matching guard wins, but
// build() validates disjointness on a sample so order never changes meaning.
struct Recurrence {
  std::string name;
  std::vector<std::string> vars;
  std::vector<Case> cases;
  Guard domain;        // includes the implicit x_i >= 0 unless overridden
  bool nested = false; // some call argument itself contains a call

  int arity() const { return static_cast<int>(vars.size()); }
  // Index of the first case whose guard holds, or -1.
  int case_at(const Point& p) const;
  bool in_domain(const Point& p) const { return domain.eval(p); }
};

struct EqClass {
  bool monotone_by_construction = false;
  bool affine = false;
  bool linear_recursive = false;
  bool nested = false;
  std::vector<bool> case_recursive;
};

// One recursive-call term  coef(n) * f(args(n))  of an affine case body.
struct AffineTerm {
  Expr coef;               // Call-free, syntactically nonnegative
  std::vector<Expr> args;  // Call-free
};
struct AffineCase {
  std::vector<AffineTerm> terms;
  Expr bias;
};

// Case-index dependency graph with edges oriented callee -> caller
// (an edge k -> i means case i contains a call that can land in D_k).
struct CallGraph {
  int ncases = 0;
  std::vector<std::vector<bool>> edge;  // edge[k][i]
  std::vector<std::vector<int>> sccs;   // topological order, callees first
  bool has(int callee, int caller) const { return edge[callee][caller]; }
};

Recurrence build(std::vector<std::string> vars, std::vector<Case> cases,
                 std::optional<Guard> domain = std::nullopt, std::string name = {});

EqClass classify(const Recurrence& r);

// Affine decomposition of every case (empty optional when not affine).
std::optional<std::vector<AffineCase>> decompose_affine(const Recurrence& r);

// Phi_lin: biases stripped, base cases replaced by 0. Requires affine.
Recurrence linearise(const Recurrence& r);

// Phi(0): per-case bias expression (piecewise, same guards). Requires affine.
std::vector<Expr> bias(const Recurrence& r);

// Conservative sampled call graph (plus guard propagation for affine call
// maps). Sample points outside the domain are skipped.
CallGraph call_graph(const Recurrence& r, const std::vector<Point>& probe_sample);

// Points of d1 (within the sample and the domain) with some recursive call
// landing in d2. d1 and d2 are expected to be disjoint.
std::vector<Point> interface_points(const Recurrence& r, const Guard& d1, const Guard& d2,
                                    const std::vector<Point>& sample);

// All call targets of the case body at p; call arguments are evaluated with
// the given oracle (needed for nested equations). Targets whose computation
// fails are skipped.
std::vector<Point> call_targets(const Recurrence& r, const Point& p, const CallOracle& oracle);

// Light folding used when presenting biases/linearisations.
Expr simplify(const Expr& e);

// Cross-shaped validation sample covering guard thresholds.
std::vector<Point> validation_sample(const Recurrence& r);

// The default domain guard (all variables >= 0).
Guard default_domain(int nvars);

struct BuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace recbound
