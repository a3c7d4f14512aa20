#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "recbound/checker.hpp"
#include "recbound/modelspace.hpp"
#include "recbound/qp.hpp"

namespace recbound {

struct QpFlags {
  bool inductivity_on = true;   // requires an affine equation
  bool positivity_on = false;   // alpha >= 0 (non-affine path)
  double lasso_lambda = 0.0;
};

struct QpColumn {
  int subdomain = -1;  // model-space subdomain slot
  int feature = -1;    // feature index in the bank
  bool aux = false;    // lasso auxiliary u-variable
};

enum class QpRowKind : std::uint8_t { Safety, Inductivity, Positivity, LassoPos, LassoNeg };

struct QpProblem {
  Eigen::MatrixXd P;  // block-diagonal [Y'Y, 0; 0, I_p] when lasso is on
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  std::vector<QpColumn> column_map;
  std::vector<QpRowKind> row_kinds;
  std::vector<std::int32_t> row_points;  // training index or -1
  Direction direction = Direction::Upper;
  QpFlags flags;
  int n_alpha = 0;          // model columns kept after dedup
  int thinning_factor = 1;  // constraint-row thinning (1 = none)
  std::vector<int> kept_columns;  // model-space column ids, in order

  std::string describe_row(int row) const;
};

struct SolverParams {
  int max_kkt_steps = 100;
  double feas_tol = 1e-15;
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  std::size_t row_thin_threshold = 200000;
};

struct FitResult {
  std::vector<double> alpha;  // dense over the full model-space dimension
  double objective = 0;       // ||y_sol - Y alpha||^2 on the sample used
  double max_safety_violation = 0;      // exact post-hoc, per training point
  double max_inductivity_violation = 0; // exact post-hoc (0 when disabled)
  std::vector<bool> selected;           // lasso survivors (full dimension)
  bool converged = false;
  bool infeasible = false;
  std::string message;
};

QpProblem assemble(const PiecewiseModelSpace& ms, const TrainingSet& ts, const Recurrence& r,
                   Direction direction, const QpFlags& flags,
                   const std::vector<bool>* column_mask = nullptr,
                   const SolverParams& sp = {});

// Interior-point solve plus exact post-hoc residual report (the authoritative
// signal; the float tolerances are best-effort).
FitResult solve_qp(const QpProblem& p, const PiecewiseModelSpace& ms, const TrainingSet& ts,
                   const Recurrence& r, const SolverParams& sp = {});

struct SelectionParams {
  int rounds = 2;
  double subsample = 0.5;
  double lambda = 10.0;
  double drop_threshold = 1e-6;  // relative to max |alpha_i|
  std::uint64_t seed = 0;
};

// Lasso rounds on a subsample; returns the surviving-column mask.
std::vector<bool> feature_selection(const PiecewiseModelSpace& ms, const TrainingSet& ts,
                                    const Recurrence& r, Direction direction, QpFlags flags,
                                    const SelectionParams& sel, const SolverParams& sp = {});

struct FitBounds {
  FitResult fit;
  Candidate float_candidate;  // exact dyadic images of the float coefficients
  std::vector<Rational> alpha_exact;
  QpFlags flags_used;
};

// End-to-end: model space -> feature selection -> final QP without lasso.
// Flags default per classification: affine => inductivity, otherwise
// positivity with inductivity disabled.
FitBounds fit_bounds(const Recurrence& r, const TrainingSet& ts, const FeatureBank& bank,
                     Direction direction, std::optional<QpFlags> flags_override = std::nullopt,
                     const SelectionParams& sel = {}, const SolverParams& sp = {});

// Piecewise candidate from rational coefficients over the model space.
Candidate make_candidate(const PiecewiseModelSpace& ms, const Recurrence& r,
                         const std::vector<Rational>& alpha, Direction direction,
                         const std::string& provenance);

// Text dump of (P, q, G, h): row-major, doubles as hex, for external solvers.
std::string dump_qp(const QpProblem& p);

}  // namespace recbound
