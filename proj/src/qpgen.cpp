#include "recbound/qpgen.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#ifdef RECBOUND_HAVE_OPENMP
#include <omp.h>
#endif

namespace recbound {

namespace {

// Exact value of a feature restricted to a model-space subdomain.
Rational restricted_feature(const PiecewiseModelSpace& ms, const Recurrence& r, int slot,
                            int feature, const Point& p) {
  int ci = r.case_at(p);
  if (ci != ms.recursive_cases[slot]) return Rational(0);
  return eval_closed(ms.bank.features[feature].expr, p);
}

struct ExactColumns {
  // per kept model column: values on sample (Y) and Phi_lin values (Yp)
  std::vector<std::vector<Rational>> y;
  std::vector<std::vector<Rational>> yp;  // empty when inductivity off
  std::vector<Rational> ysol_minus_b;     // y_sol - f_base per point
  std::vector<Rational> bp_minus_b;       // Phi(f_base) - f_base per point
  std::vector<int> kept;                  // model column ids
};

ExactColumns exact_columns(const PiecewiseModelSpace& ms, const TrainingSet& ts,
                           const Recurrence& r, bool with_inductivity,
                           const std::vector<bool>* mask, bool parallel) {
  const int dim = ms.dimension();
  const int nf = static_cast<int>(ms.bank.features.size());
  const std::size_t npts = ts.size();
  auto aff = decompose_affine(r);
  if (with_inductivity && !aff)
    throw std::runtime_error("inductivity constraints need an affine equation");

  ExactColumns out;
  std::vector<std::vector<Rational>> all_y(dim, std::vector<Rational>(npts, Rational(0)));
  std::vector<std::vector<Rational>> all_yp;
  if (with_inductivity) all_yp.assign(dim, std::vector<Rational>(npts, Rational(0)));

  out.ysol_minus_b.assign(npts, Rational(0));
  out.bp_minus_b.assign(npts, Rational(0));

  CallOracle fbase_oracle = [&](const Point& t) -> std::optional<Rational> {
    if (!r.in_domain(t)) return std::nullopt;
    int ci = r.case_at(t);
    if (ci < 0) return std::nullopt;
    if (r.cases[ci].recursive) return Rational(0);
    return eval_closed(ms.f_base_pieces[ci], t);
  };

  auto fill_point = [&](std::size_t i) {
    const Point& p = ts.points[i];
    int ci = r.case_at(p);
    Rational fb = ms.f_base(r, p);
    out.ysol_minus_b[i] = ts.values[i] - fb;
    if (ci < 0) return;
    // columns
    for (std::size_t s = 0; s < ms.recursive_cases.size(); ++s) {
      if (ms.recursive_cases[s] != static_cast<int>(ci)) continue;
      for (int j = 0; j < nf; ++j) {
        int col = static_cast<int>(s) * nf + j;
        if (mask && !(*mask)[col]) continue;
        all_y[col][i] = eval_closed(ms.bank.features[j].expr, p);
      }
    }
    if (!with_inductivity) return;
    if (!r.cases[ci].recursive) return;  // trivial rows skipped later anyway
    // Phi(f_base)(p) - f_base(p): evaluate the case body with the f_base oracle
    EvalResult bp = eval_expr(r.cases[ci].body, p, fbase_oracle);
    if (bp.ok()) out.bp_minus_b[i] = *bp.value - fb;
    // Phi_lin of each restricted feature
    const AffineCase& ac = (*aff)[ci];
    for (const auto& term : ac.terms) {
      Rational coef = eval_closed(term.coef, p);
      if (coef == 0) continue;
      Point target(term.args.size());
      bool ok = true;
      for (std::size_t k = 0; k < term.args.size(); ++k) {
        Rational av = eval_closed(term.args[k], p);
        auto v = is_integer(av) ? to_int64(num(av)) : std::nullopt;
        if (!v) { ok = false; break; }
        target[k] = *v;
      }
      if (!ok || !r.in_domain(target)) continue;
      for (std::size_t s = 0; s < ms.recursive_cases.size(); ++s)
        for (int j = 0; j < nf; ++j) {
          int col = static_cast<int>(s) * nf + j;
          if (mask && !(*mask)[col]) continue;
          Rational fv = restricted_feature(ms, r, static_cast<int>(s), j, target);
          if (fv != 0) all_yp[col][i] += coef * fv;
        }
    }
  };

#ifdef RECBOUND_HAVE_OPENMP
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 128)
    for (std::size_t i = 0; i < npts; ++i) fill_point(i);
  } else
#endif
  {
    for (std::size_t i = 0; i < npts; ++i) fill_point(i);
  }

  // column dedup by exact sampled values (drops all-zero columns too)
  std::map<std::string, int> seen;
  for (int col = 0; col < dim; ++col) {
    if (mask && !(*mask)[col]) continue;
    std::ostringstream key;
    bool all_zero = true;
    for (std::size_t i = 0; i < npts; ++i) {
      key << to_string(all_y[col][i]) << "|";
      if (all_y[col][i] != 0) all_zero = false;
    }
    if (all_zero) continue;
    auto [it, fresh] = seen.emplace(key.str(), col);
    if (!fresh) continue;
    out.kept.push_back(col);
    out.y.push_back(std::move(all_y[col]));
    if (with_inductivity) out.yp.push_back(std::move(all_yp[col]));
  }
  return out;
}

}  // namespace

std::string QpProblem::describe_row(int row) const {
  if (row < 0 || row >= static_cast<int>(row_kinds.size())) return "row " + std::to_string(row);
  std::ostringstream os;
  switch (row_kinds[row]) {
    case QpRowKind::Safety: os << "safety"; break;
    case QpRowKind::Inductivity: os << "inductivity"; break;
    case QpRowKind::Positivity: os << "positivity"; break;
    case QpRowKind::LassoPos: os << "lasso(+)"; break;
    case QpRowKind::LassoNeg: os << "lasso(-)"; break;
  }
  if (row_points[row] >= 0) os << " @ training point " << row_points[row];
  return os.str();
}

QpProblem assemble(const PiecewiseModelSpace& ms, const TrainingSet& ts, const Recurrence& r,
                   Direction direction, const QpFlags& flags, const std::vector<bool>* column_mask,
                   const SolverParams& sp) {
  if (ts.size() == 0) throw std::runtime_error("assemble: empty training set");
  ExactColumns cols = exact_columns(ms, ts, r, flags.inductivity_on, column_mask, true);
  const int n = static_cast<int>(cols.kept.size());
  const std::size_t npts = ts.size();
  const bool lasso = flags.lasso_lambda > 0;
  const int total = lasso ? 2 * n : n;

  QpProblem qp;
  qp.direction = direction;
  qp.flags = flags;
  qp.n_alpha = n;
  qp.kept_columns = cols.kept;
  for (int c : cols.kept) {
    auto [s, f] = ms.column_of(c);
    qp.column_map.push_back({s, f, false});
  }
  if (lasso)
    for (int c : cols.kept) {
      auto [s, f] = ms.column_of(c);
      qp.column_map.push_back({s, f, true});
    }

  // objective: 0.5||Y a - (ysol - b)||^2 (+ 0.5||u||^2 + lambda 1'u)
  Eigen::MatrixXd Y(npts, n);
  for (int j = 0; j < n; ++j)
    for (std::size_t i = 0; i < npts; ++i) Y(i, j) = to_double(cols.y[j][i]);
  Eigen::VectorXd rhs(npts);
  for (std::size_t i = 0; i < npts; ++i) rhs[i] = to_double(cols.ysol_minus_b[i]);

  qp.P = Eigen::MatrixXd::Zero(total, total);
  qp.P.topLeftCorner(n, n) = Y.transpose() * Y;
  qp.q = Eigen::VectorXd::Zero(total);
  qp.q.head(n) = -Y.transpose() * rhs;
  if (lasso) {
    qp.P.bottomRightCorner(n, n).setIdentity();
    qp.q.tail(n).setConstant(flags.lasso_lambda);
  }

  // constraint rows: recursive-subdomain points only (base rows are trivial)
  std::vector<std::int32_t> rec_rows;
  rec_rows.reserve(npts);
  for (std::size_t i = 0; i < npts; ++i) {
    int ci = r.case_at(ts.points[i]);
    if (ci >= 0 && r.cases[ci].recursive) rec_rows.push_back(static_cast<std::int32_t>(i));
  }
  // thinning
  std::size_t per_block = rec_rows.size();
  std::size_t blocks = 1 + (flags.inductivity_on ? 1 : 0);
  qp.thinning_factor = 1;
  if (blocks * per_block > sp.row_thin_threshold && per_block > 0) {
    qp.thinning_factor =
        static_cast<int>((blocks * per_block + sp.row_thin_threshold - 1) / sp.row_thin_threshold);
    std::vector<std::int32_t> thin;
    for (std::size_t k = 0; k < rec_rows.size(); k += qp.thinning_factor)
      thin.push_back(rec_rows[k]);
    rec_rows = std::move(thin);
  }

  std::size_t m = rec_rows.size() * blocks + (flags.positivity_on ? n : 0) + (lasso ? 2 * n : 0);
  qp.G = Eigen::MatrixXd::Zero(m, total);
  qp.h = Eigen::VectorXd::Zero(m);
  qp.row_kinds.reserve(m);
  qp.row_points.reserve(m);
  std::size_t row = 0;
  const double sign = direction == Direction::Upper ? 1.0 : -1.0;
  // safety: upper  -(Ya) <= -(ysol-b);  lower  Ya <= ysol-b
  for (std::int32_t i : rec_rows) {
    for (int j = 0; j < n; ++j) qp.G(row, j) = -sign * Y(i, j);
    qp.h[row] = -sign * rhs[i];
    qp.row_kinds.push_back(QpRowKind::Safety);
    qp.row_points.push_back(i);
    ++row;
  }
  if (flags.inductivity_on) {
    // upper: (Y' - Y) a <= (b - b') i.e. -(bp_minus_b); lower mirrored
    for (std::int32_t i : rec_rows) {
      for (int j = 0; j < n; ++j)
        qp.G(row, j) = sign * (to_double(cols.yp[j][i]) - Y(i, j));
      qp.h[row] = -sign * to_double(cols.bp_minus_b[i]);
      qp.row_kinds.push_back(QpRowKind::Inductivity);
      qp.row_points.push_back(i);
      ++row;
    }
  }
  if (flags.positivity_on) {
    for (int j = 0; j < n; ++j) {
      qp.G(row, j) = -1.0;
      qp.row_kinds.push_back(QpRowKind::Positivity);
      qp.row_points.push_back(-1);
      ++row;
    }
  }
  if (lasso) {
    for (int j = 0; j < n; ++j) {
      qp.G(row, j) = 1.0;
      qp.G(row, n + j) = -1.0;
      qp.row_kinds.push_back(QpRowKind::LassoPos);
      qp.row_points.push_back(-1);
      ++row;
      qp.G(row, j) = -1.0;
      qp.G(row, n + j) = -1.0;
      qp.row_kinds.push_back(QpRowKind::LassoNeg);
      qp.row_points.push_back(-1);
      ++row;
    }
  }
  return qp;
}

FitResult solve_qp(const QpProblem& p, const PiecewiseModelSpace& ms, const TrainingSet& ts,
                   const Recurrence& r, const SolverParams& sp) {
  QpSettings settings;
  settings.max_kkt_steps = sp.max_kkt_steps;
  settings.feas_tol = sp.feas_tol;
  settings.abs_tol = sp.abs_tol;
  settings.rel_tol = sp.rel_tol;
  QpSolution s = solve_qp_dense(p.P, p.q, p.G, p.h, settings);

  FitResult fr;
  fr.converged = s.converged;
  fr.infeasible = s.infeasible;
  if (s.infeasible) {
    fr.message = "infeasible; most violated: " + p.describe_row(s.most_violated_row);
    return fr;
  }
  fr.message = s.message;
  fr.alpha.assign(ms.dimension(), 0.0);
  for (int j = 0; j < p.n_alpha; ++j) fr.alpha[p.kept_columns[j]] = s.x[j];

  // exact post-hoc residuals (alpha as exact dyadics)
  std::vector<Rational> ax(ms.dimension(), Rational(0));
  for (int c = 0; c < ms.dimension(); ++c)
    if (fr.alpha[c] != 0) ax[c] = rational_from_double(fr.alpha[c]);
  Candidate cand = make_candidate(ms, r, ax, p.direction, "qp");
  CallOracle f = cand.oracle();
  Rational max_saf(0), max_ind(0);
  double obj = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    auto v = cand.eval(ts.points[i]);
    if (!v) continue;
    double res = to_double(*v - ts.values[i]);
    obj += res * res;
    Rational saf = p.direction == Direction::Upper ? ts.values[i] - *v : *v - ts.values[i];
    max_saf = std::max(max_saf, saf);
    if (p.flags.inductivity_on) {
      auto me = measure_at(r, f, ts.points[i]);
      if (me) {
        Rational ind = p.direction == Direction::Upper ? *me : -*me;
        max_ind = std::max(max_ind, ind);
      }
    }
  }
  fr.objective = obj;
  fr.max_safety_violation = to_double(max_saf);
  fr.max_inductivity_violation = to_double(max_ind);
  return fr;
}

std::vector<bool> feature_selection(const PiecewiseModelSpace& ms, const TrainingSet& ts,
                                    const Recurrence& r, Direction direction, QpFlags flags,
                                    const SelectionParams& sel, const SolverParams& sp) {
  std::vector<bool> mask(ms.dimension(), true);
  if (sel.lambda <= 0) return mask;  // no lasso, nothing dropped
  flags.lasso_lambda = sel.lambda;

  // deterministic subsample
  std::vector<std::size_t> idx(ts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(sel.seed ^ 0xda3e39cb94b95bdbull);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::max<std::size_t>(1, static_cast<std::size_t>(ts.size() * sel.subsample)));
  std::sort(idx.begin(), idx.end());
  TrainingSet sub;
  sub.bb = ts.bb;
  sub.brs = ts.brs;
  sub.seed = ts.seed;
  for (std::size_t i : idx) {
    sub.points.push_back(ts.points[i]);
    sub.values.push_back(ts.values[i]);
  }

  for (int round = 0; round < sel.rounds; ++round) {
    QpProblem qp = assemble(ms, sub, r, direction, flags, &mask, sp);
    if (qp.n_alpha == 0) break;
    FitResult fr = solve_qp(qp, ms, sub, r, sp);
    if (fr.infeasible || fr.alpha.empty()) break;
    double amax = 0;
    for (int c = 0; c < ms.dimension(); ++c)
      if (mask[c]) amax = std::max(amax, std::abs(fr.alpha[c]));
    if (amax == 0) break;
    bool changed = false;
    for (int c = 0; c < ms.dimension(); ++c) {
      if (!mask[c]) continue;
      if (std::abs(fr.alpha[c]) < sel.drop_threshold * amax) {
        mask[c] = false;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return mask;
}

FitBounds fit_bounds(const Recurrence& r, const TrainingSet& ts, const FeatureBank& bank,
                     Direction direction, std::optional<QpFlags> flags_override,
                     const SelectionParams& sel, const SolverParams& sp) {
  PiecewiseModelSpace ms = build_model_space(r, bank);
  QpFlags flags;
  if (flags_override) {
    flags = *flags_override;
  } else {
    EqClass k = classify(r);
    if (k.affine) {
      flags.inductivity_on = true;
      flags.positivity_on = false;
    } else {
      flags.inductivity_on = false;
      flags.positivity_on = true;
    }
  }
  std::vector<bool> mask = feature_selection(ms, ts, r, direction, flags, sel, sp);
  QpFlags final_flags = flags;
  final_flags.lasso_lambda = 0.0;  // refit without lasso on the selected features
  QpProblem qp = assemble(ms, ts, r, direction, final_flags, &mask, sp);
  FitResult fr = solve_qp(qp, ms, ts, r, sp);
  fr.selected = mask;

  FitBounds out;
  out.fit = std::move(fr);
  out.flags_used = final_flags;
  out.alpha_exact.assign(ms.dimension(), Rational(0));
  for (int c = 0; c < ms.dimension(); ++c)
    if (!out.fit.alpha.empty() && out.fit.alpha[c] != 0)
      out.alpha_exact[c] = rational_from_double(out.fit.alpha[c]);
  out.float_candidate = make_candidate(ms, r, out.alpha_exact, direction, "qp");
  return out;
}

Candidate make_candidate(const PiecewiseModelSpace& ms, const Recurrence& r,
                         const std::vector<Rational>& alpha, Direction direction,
                         const std::string& provenance) {
  Candidate c;
  c.direction = direction;
  c.provenance = provenance;
  const int nf = static_cast<int>(ms.bank.features.size());
  for (std::size_t ci = 0; ci < r.cases.size(); ++ci) {
    CandidatePiece piece;
    piece.guard = r.cases[ci].guard;
    if (!r.cases[ci].recursive) {
      piece.expr = ms.f_base_pieces[ci];
    } else {
      int slot = -1;
      for (std::size_t s = 0; s < ms.recursive_cases.size(); ++s)
        if (ms.recursive_cases[s] == static_cast<int>(ci)) slot = static_cast<int>(s);
      Expr acc = econst(0);
      for (int j = 0; j < nf; ++j) {
        const Rational& a = alpha.at(slot * nf + j);
        if (a == 0) continue;
        acc = simplify(eadd(acc, escale(a, ms.bank.features[j].expr)));
      }
      piece.expr = acc;
    }
    c.pieces.push_back(std::move(piece));
  }
  return c;
}

std::string dump_qp(const QpProblem& p) {
  std::ostringstream os;
  auto put = [&os](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%a", v);
    os << buf;
  };
  auto mat = [&](const char* name, const Eigen::MatrixXd& M) {
    os << name << " " << M.rows() << " " << M.cols() << "\n";
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        if (j) os << " ";
        put(M(i, j));
      }
      os << "\n";
    }
  };
  mat("P", p.P);
  mat("q", p.q);
  mat("G", p.G);
  mat("h", p.h);
  return os.str();
}

}  // namespace recbound
