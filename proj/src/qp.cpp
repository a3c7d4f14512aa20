#include "recbound/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace recbound {

namespace {

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  // largest a in (0, 1] with v + a*dv >= 0 (v > 0)
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0) a = std::min(a, -v[i] / dv[i]);
  return a;
}

}  // namespace

QpSolution solve_qp_dense(const Eigen::MatrixXd& P0, const Eigen::VectorXd& q0,
                          const Eigen::MatrixXd& G0, const Eigen::VectorXd& h0,
                          const QpSettings& settings) {
  const Eigen::Index n = P0.rows();
  const Eigen::Index m = G0.rows();
  QpSolution sol;

  if (m == 0) {
    Eigen::MatrixXd P = P0;
    P.diagonal().array() += std::max(settings.static_reg, 1e-300);
    sol.x = P.ldlt().solve(-q0);
    sol.z.resize(0);
    sol.objective = 0.5 * sol.x.dot(P0 * sol.x) + q0.dot(sol.x);
    sol.converged = true;
    return sol;
  }

  // Ruiz-style equilibration: column scaling d (variables), row scaling e (rows of G).
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double cmax = 0;
    for (Eigen::Index i = 0; i < n; ++i) cmax = std::max(cmax, std::abs(P0(i, j)));
    for (Eigen::Index i = 0; i < m; ++i) cmax = std::max(cmax, std::abs(G0(i, j)));
    if (cmax > 0) d[j] = 1.0 / std::sqrt(cmax);
  }
  Eigen::MatrixXd P = d.asDiagonal() * P0 * d.asDiagonal();
  Eigen::VectorXd q = d.asDiagonal() * q0;
  Eigen::MatrixXd G = G0 * d.asDiagonal();
  Eigen::VectorXd h = h0;
  Eigen::VectorXd e = Eigen::VectorXd::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double rmax = G.row(i).cwiseAbs().maxCoeff();
    if (rmax > 0) e[i] = 1.0 / rmax;
  }
  G = e.asDiagonal() * G;
  h = e.asDiagonal() * h;
  P.diagonal().array() += settings.static_reg;

  const double hscale = 1.0 + h.cwiseAbs().maxCoeff();
  const double qscale = 1.0 + q.cwiseAbs().maxCoeff();

  // starting point
  Eigen::MatrixXd Pinit = P;
  Pinit.diagonal().array() += 1.0;
  Eigen::VectorXd x = Pinit.ldlt().solve(-q);
  Eigen::VectorXd s(m), z(m);
  {
    Eigen::VectorXd slack = h - G * x;
    for (Eigen::Index i = 0; i < m; ++i) {
      s[i] = std::max(1.0, slack[i]);
      z[i] = 1.0;
    }
  }

  Eigen::VectorXd best_x = x;
  Eigen::VectorXd best_z = z;
  double best_score = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd M(n, n);
  Eigen::MatrixXd Gs(m, n);
  double mu = s.dot(z) / static_cast<double>(m);

  int it = 0;
  for (; it < settings.max_kkt_steps; ++it) {
    Eigen::VectorXd rd = P * x + q + G.transpose() * z;  // dual residual
    Eigen::VectorXd rp = G * x + s - h;                  // primal residual
    mu = s.dot(z) / static_cast<double>(m);

    double rp_inf = (G * x - h).cwiseMax(0.0).lpNorm<Eigen::Infinity>();
    double rd_inf = rd.lpNorm<Eigen::Infinity>();
    double obj = 0.5 * x.dot(P * x) + q.dot(x);
    double gap = std::abs(s.dot(z));

    double score = rp_inf / hscale + rd_inf / qscale + gap / (1.0 + std::abs(obj));
    if (score < best_score) {
      best_score = score;
      best_x = x;
      best_z = z;
    }

    bool feas_ok = rp_inf <= std::max(settings.feas_tol * hscale, 1e-13 * hscale) &&
                   rd_inf <= std::max(settings.feas_tol * qscale, 1e-9 * qscale);
    bool gap_ok = gap <= settings.abs_tol || gap <= settings.rel_tol * (1.0 + std::abs(obj));
    if (feas_ok && gap_ok) {
      sol.converged = true;
      best_x = x;
      best_z = z;
      break;
    }

    // KKT normal matrix M = P + G' W G with W = diag(z/s)
    Eigen::VectorXd w = (z.array() / s.array()).sqrt();
    Gs = w.asDiagonal() * G;
    M.noalias() = P;
    M.noalias() += Gs.transpose() * Gs;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) {
      M.diagonal().array() += 1e-10;
      ldlt.compute(M);
    }

    auto solve_step = [&](const Eigen::VectorXd& rs, Eigen::VectorXd& dx, Eigen::VectorXd& ds,
                          Eigen::VectorXd& dz) {
      // rhs = -rd + G' S^-1 (rs + Z rp)
      Eigen::VectorXd tmp = (rs.array() + z.array() * rp.array()) / s.array();
      Eigen::VectorXd rhs = -rd + G.transpose() * tmp;
      dx = ldlt.solve(rhs);
      // one round of iterative refinement
      Eigen::VectorXd resid = rhs - M * dx;
      dx += ldlt.solve(resid);
      ds = -rp - G * dx;
      dz = ((-rs.array()) - z.array() * ds.array()) / s.array();
    };

    // predictor
    Eigen::VectorXd rs_aff = (s.array() * z.array()).matrix();
    Eigen::VectorXd dx_a(n), ds_a(m), dz_a(m);
    solve_step(rs_aff, dx_a, ds_a, dz_a);
    double a_p = max_step(s, ds_a);
    double a_d = max_step(z, dz_a);
    double a_aff = std::min(a_p, a_d);
    double mu_aff = (s + a_aff * ds_a).dot(z + a_aff * dz_a) / static_cast<double>(m);
    double sigma = std::pow(std::max(0.0, std::min(1.0, mu_aff / std::max(mu, 1e-300))), 3);

    // corrector
    Eigen::VectorXd rs_cor =
        (s.array() * z.array() + ds_a.array() * dz_a.array() - sigma * mu).matrix();
    Eigen::VectorXd dx(n), ds(m), dz(m);
    solve_step(rs_cor, dx, ds, dz);

    double ap = max_step(s, ds);
    double ad = max_step(z, dz);
    double alpha = 0.99 * std::min(ap, ad);
    if (!std::isfinite(alpha) || alpha <= 1e-14) {
      sol.message = "step size collapsed";
      break;
    }
    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;

    // crude infeasibility signal: multipliers blow up while primal stays violated
    if (z.lpNorm<Eigen::Infinity>() > 1e12 && rp_inf > 1e-6 * hscale) {
      sol.infeasible = true;
      break;
    }
  }

  x = best_x;
  z = best_z;
  sol.iterations = it;
  // un-equilibrate
  sol.x = d.asDiagonal() * x;
  sol.z = e.asDiagonal() * z;  // multipliers of the original rows
  Eigen::VectorXd viol = G0 * sol.x - h0;
  sol.primal_residual = viol.cwiseMax(0.0).lpNorm<Eigen::Infinity>();
  if (m > 0) {
    Eigen::Index worst;
    viol.maxCoeff(&worst);
    sol.most_violated_row = static_cast<int>(worst);
  }
  sol.dual_residual =
      (P0 * sol.x + q0 + G0.transpose() * sol.z).lpNorm<Eigen::Infinity>();
  sol.objective = 0.5 * sol.x.dot(P0 * sol.x) + q0.dot(sol.x);
  sol.gap = std::abs((h0 - G0 * sol.x).dot(sol.z));
  if (sol.infeasible) {
    sol.message = "problem appears primal-infeasible";
  } else if (!sol.converged && sol.message.empty()) {
    sol.message = "tolerances not met within the KKT step budget";
  }
  return sol;
}

}  // namespace recbound
