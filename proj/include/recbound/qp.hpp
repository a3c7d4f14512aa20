#pragma once

#include <Eigen/Dense>
#include <string>

namespace recbound {

// Convex quadratic program
//   minimize    0.5 x'Px + q'x
//   subject to  Gx <= h
// P symmetric positive semidefinite.
struct QpSettings {
  int max_kkt_steps = 100;
  double feas_tol = 1e-15;   // primal/dual residual target (relative)
  double abs_tol = 1e-10;    // absolute duality gap
  double rel_tol = 1e-9;     // relative duality gap
  double static_reg = 1e-12; // diagonal regularization added to P
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd z;  // inequality multipliers
  double objective = 0;
  double gap = 0;
  double primal_residual = 0;  // max violation of Gx <= h
  double dual_residual = 0;
  int iterations = 0;
  bool converged = false;
  bool infeasible = false;
  int most_violated_row = -1;
  std::string message;
};

QpSolution solve_qp_dense(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                          const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                          const QpSettings& settings = {});

}  // namespace recbound
