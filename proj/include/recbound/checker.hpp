#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recbound/evaluator.hpp"
#include "recbound/recurrence.hpp"
#include "recbound/regions.hpp"

namespace recbound {

enum class Direction { Lower, Upper };
inline const char* direction_name(Direction d) { return d == Direction::Upper ? "upper" : "lower"; }

// Piecewise Call-free function with first-matching-piece semantics. The
// symbolic tier additionally requires the pieces to be pairwise disjoint
// (validated on samples).
struct CandidatePiece {
  Guard guard;
  Expr expr;
};

struct Candidate {
  std::vector<CandidatePiece> pieces;
  Direction direction = Direction::Upper;
  std::string provenance;  // qp | user | repair

  std::optional<Rational> eval(const Point& p) const;
  CallOracle oracle() const;
  std::string to_string(const std::vector<std::string>& vars) const;
};

struct Verdict {
  enum Kind { Proved, Refuted, Unknown } kind = Unknown;
  enum FailedClaim { None, Dominance, Inductivity, Ranking } claim = None;
  // Refuted: exact, re-evaluable counterexample
  Point counterexample;
  Rational lhs, rhs;  // the two sides of the violated comparison at the point
  // Unknown: evidence summary
  std::size_t points_checked = 0;
  std::size_t violations_found = 0;
  std::string reason;

  bool proved() const { return kind == Proved; }
  std::string summary() const;
};

struct CheckOptions {
  bool symbolic_enabled = true;  // Proved requires this tier (or hybrid)
  ProveOptions prove;
  std::string cas_cmd;     // empty = bridge disabled
  int cas_timeout_s = 60;
  bool parallel = true;
};

// ---------------------------------------------------------------------------

// Exact Phi(f)(n) - f(n) per point; the candidate supplies the call values.
// A point where the candidate's guards fail to cover a needed value yields
// nullopt in the result slot.
std::vector<std::optional<Rational>> inductivity_measure(const Recurrence& r, const Candidate& c,
                                                         const std::vector<Point>& points);
std::optional<Rational> measure_at(const Recurrence& r, const CallOracle& f, const Point& p);

// Dominance + inductivity scan over the training set, exact arithmetic;
// first violation (in point order) is returned.
Verdict falsify(const Recurrence& r, const Candidate& c, const TrainingSet& big_sample,
                const CheckOptions& opts = {});

// Sufficient-condition comparison lhs <= rhs on the region.
Verdict symbolic_compare(const Expr& lhs, const Expr& rhs, const Region& region,
                         const CheckOptions& opts = {});

// The proof principle: Phi(f) <= f (upper) per subdomain via symbolic
// case-splitting; falls back to falsify on the training set.
Verdict check_inductive(const Recurrence& r, const Candidate& c, const TrainingSet& sample,
                        const CheckOptions& opts = {});

// Finite-region exhaustive check composed with an inductive check on the
// complement. d1 pieces must be enumerable (cardinality cap); d1 and d2
// together must cover the domain, or be closed under recursive calls (then
// the bound claim is restricted to their union -- reported in the verdict).
Verdict hybrid_verify(const Recurrence& r, const Candidate& c, const std::vector<Guard>& d1,
                      const std::vector<Guard>& d2, Evaluator& ev, const TrainingSet& sample,
                      const CheckOptions& opts = {});

// rho(n) >= 1 + rho(phi_ij(n)) on recursive cases, rho >= 0 on base cases.
Verdict check_ranking(const Recurrence& r, const Expr& rho, const CheckOptions& opts = {});
// Non-strict variant (quasi-ranking): rho(n) >= rho(phi_ij(n)), rho >= 0.
Verdict check_quasi_ranking(const Recurrence& r, const Expr& rho, const CheckOptions& opts = {});

// External CAS bridge; line protocol
//   CHECK <direction> REGION <guard> LHS <expr> RHS <expr>
// answered by PROVED | REFUTED <point> | UNKNOWN.
struct CasQuery {
  Direction direction = Direction::Upper;
  Guard region;
  Expr lhs, rhs;
  std::vector<std::string> vars;
};
Verdict cas_bridge(const CasQuery& query, const CheckOptions& opts);

// ---------------------------------------------------------------------------
// Audit registry for the proof-principle soundness suite: every Proved
// verdict is recorded (when enabled) so dominance can be re-checked at fresh
// points afterwards.
// ---------------------------------------------------------------------------

struct AuditEntry {
  Recurrence rec;
  Candidate cand;
  std::string origin;
};
void audit_enable(bool on);
void audit_record(const Recurrence& r, const Candidate& c, const std::string& origin);
std::vector<AuditEntry> audit_snapshot();
void audit_clear();

}  // namespace recbound
