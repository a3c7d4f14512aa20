#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "recbound/rational.hpp"

namespace recbound {

// ---------------------------------------------------------------------------
// Linear guards: conjunctions of integer-linear constraints over the input
// variables. Guards never mention the unknown f.
// ---------------------------------------------------------------------------

enum class Rel { Lt, Le, Eq, Ge, Gt };

const char* rel_name(Rel r);

// sum_k coeffs[k] * x_k  rel  constant
struct LinConstraint {
  std::vector<std::int64_t> coeffs;
  Rel rel = Rel::Le;
  std::int64_t constant = 0;

  bool eval(const Point& p) const;
  LinConstraint negated() const;
  std::string to_string(const std::vector<std::string>& vars) const;
};

struct Guard {
  std::vector<LinConstraint> constraints;  // empty conjunction = true

  bool eval(const Point& p) const;
  bool is_true() const { return constraints.empty(); }
  std::string to_string(const std::vector<std::string>& vars) const;
};

Guard guard_and(const Guard& a, const Guard& b);

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class ExprKind {
  Const,     // rational constant
  Var,       // index into the equation's variable list
  Add, Sub, Mul,
  FloorDiv,  // floor(child / divisor), divisor > 0 integer
  CeilDiv,
  Min, Max,
  Ite,       // guard ? a : b
  Call,      // recursive call f(args...)
  Builtin,   // log2floor | pow | factorial
};

enum class BuiltinFn { Log2Floor, Pow, Factorial };

const char* builtin_name(BuiltinFn f);

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  Rational value;              // Const
  int var = -1;                // Var
  std::int64_t divisor = 1;    // FloorDiv / CeilDiv
  Guard guard;                 // Ite
  BuiltinFn fn = BuiltinFn::Log2Floor;
  std::vector<Expr> args;
};

// constructors
Expr econst(Rational v);
Expr econst(std::int64_t v);
Expr evar(int index);
Expr eadd(Expr a, Expr b);
Expr esub(Expr a, Expr b);
Expr emul(Expr a, Expr b);
Expr efloordiv(Expr a, std::int64_t k);
Expr eceildiv(Expr a, std::int64_t k);
Expr emin(Expr a, Expr b);
Expr emax(Expr a, Expr b);
Expr eite(Guard g, Expr a, Expr b);
Expr ecall(std::vector<Expr> args);
Expr ebuiltin(BuiltinFn fn, std::vector<Expr> args);
Expr escale(const Rational& c, Expr a);  // c * a with light folding

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

// Distinguishes "the oracle had no value" from a builtin domain error
// (e.g. factorial of a negative number).
enum class EvalErrorKind { OracleUndefined, DomainError };

struct EvalResult {
  std::optional<Rational> value;
  EvalErrorKind error = EvalErrorKind::OracleUndefined;
  std::string detail;

  bool ok() const { return value.has_value(); }
  static EvalResult of(Rational v) { return EvalResult{std::move(v), EvalErrorKind::OracleUndefined, {}}; }
  static EvalResult undef(EvalErrorKind k, std::string d = {}) {
    return EvalResult{std::nullopt, k, std::move(d)};
  }
};

// Oracle supplying values of the unknown f at integer points; nullopt means
// "undefined there".
using CallOracle = std::function<std::optional<Rational>(const Point&)>;

EvalResult eval_expr(const Expr& e, const Point& point, const CallOracle& oracle);

// Evaluation for Call-free expressions (throws std::runtime_error on a Call
// node or on a domain error).
Rational eval_closed(const Expr& e, const Point& point);

bool eval_guard(const Guard& g, const Point& p);

// ---------------------------------------------------------------------------
// Structure
// ---------------------------------------------------------------------------

bool contains_call(const Expr& e);

// Capture-free substitution of variables by expressions. Guards inside Ite
// nodes require the bindings to be integer-affine (throws otherwise).
Expr substitute(const Expr& e, const std::vector<Expr>& bindings);

// Replace every Call node by `value` (used to read off biases).
Expr substitute_calls(const Expr& e, const Expr& value);

// If e is integer-affine in the variables, return (coeffs, constant).
struct AffineForm {
  std::vector<std::int64_t> coeffs;
  std::int64_t constant = 0;
};
std::optional<AffineForm> as_affine(const Expr& e, int nvars);

// Compose a linear constraint with an affine map per variable:
// the result holds at n iff the original holds at (a_1(n), ..., a_d(n)).
LinConstraint compose_constraint(const LinConstraint& c, const std::vector<AffineForm>& maps);
Guard compose_guard(const Guard& g, const std::vector<AffineForm>& maps);

std::string expr_to_string(const Expr& e, const std::vector<std::string>& vars);

// Syntactic nonnegativity certificate on the default domain (all vars >= 0):
// constants >= 0, variables, products/sums/min/max/floors of nonnegative
// parts, pow with nonnegative base, factorial, log2floor.
bool syntactically_nonneg(const Expr& e);

bool expr_equal(const Expr& a, const Expr& b);

}  // namespace recbound
