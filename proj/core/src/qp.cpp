#include "cinestab/qp.hpp"

#include "cinestab/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace cinestab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-sided reformulation:  Ae x = be,  Ai x <= ui.
// Each finite upper bound contributes (+row, ub), each finite lower bound
// (-row, -lb); rows with lb == ub become equalities.
struct OneSided {
  Eigen::SparseMatrix<double> Ae, Ai;        // pe x n, mi x n
  Eigen::VectorXd be, ui;
  std::vector<int> eq_orig;                  // original row per equality
  std::vector<std::pair<int, int>> in_orig;  // (original row, +1 ub / -1 lb)
  int n = 0, pe = 0, mi = 0;
};

OneSided split_rows(const SparseQP& qp) {
  OneSided os;
  os.n = qp.num_vars();
  const int m = qp.num_constraints();
  Eigen::SparseMatrix<double, Eigen::RowMajor> ar(qp.A);

  std::vector<Eigen::Triplet<double>> te, ti;
  std::vector<double> be, ui;
  for (int r = 0; r < m; ++r) {
    const double lo = qp.lb[r];
    const double hi = qp.ub[r];
    const bool has_lo = std::isfinite(lo);
    const bool has_hi = std::isfinite(hi);
    if (!has_lo && !has_hi) continue;
    if (has_lo && has_hi && lo == hi) {
      const int k = static_cast<int>(be.size());
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, r);
           it; ++it)
        te.emplace_back(k, static_cast<int>(it.col()), it.value());
      be.push_back(lo);
      os.eq_orig.push_back(r);
      continue;
    }
    if (has_hi) {
      const int k = static_cast<int>(ui.size());
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, r);
           it; ++it)
        ti.emplace_back(k, static_cast<int>(it.col()), it.value());
      ui.push_back(hi);
      os.in_orig.emplace_back(r, +1);
    }
    if (has_lo) {
      const int k = static_cast<int>(ui.size());
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, r);
           it; ++it)
        ti.emplace_back(k, static_cast<int>(it.col()), -it.value());
      ui.push_back(-lo);
      os.in_orig.emplace_back(r, -1);
    }
  }
  os.pe = static_cast<int>(be.size());
  os.mi = static_cast<int>(ui.size());
  os.Ae.resize(os.pe, os.n);
  os.Ae.setFromTriplets(te.begin(), te.end());
  os.Ae.makeCompressed();
  os.Ai.resize(os.mi, os.n);
  os.Ai.setFromTriplets(ti.begin(), ti.end());
  os.Ai.makeCompressed();
  os.be = Eigen::Map<Eigen::VectorXd>(be.data(), os.pe);
  os.ui = Eigen::Map<Eigen::VectorXd>(ui.data(), os.mi);
  return os;
}

// Lower-triangular KKT matrix
//
//   [ P + dI    .        .     ]
//   [ Ae       -dI       .     ]
//   [ Ai        0   -S/Z - dI  ]
//
// kept compressed so the changing (3,3) diagonal can be updated in place.
class KktSystem {
 public:
  KktSystem(const SparseQP& qp, const OneSided& os, double delta)
      : n_(os.n), pe_(os.pe), mi_(os.mi), delta_(delta), qp_(qp), os_(os) {
    const int dim = n_ + pe_ + mi_;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(qp.P.nonZeros() + os.Ae.nonZeros() + os.Ai.nonZeros() + dim);
    for (int c = 0; c < qp.P.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(qp.P, c); it; ++it)
        if (it.row() >= it.col())
          t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                         it.value());
    for (int j = 0; j < n_; ++j) t.emplace_back(j, j, delta_);
    for (int c = 0; c < os.Ae.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(os.Ae, c); it; ++it)
        t.emplace_back(n_ + static_cast<int>(it.row()),
                       static_cast<int>(it.col()), it.value());
    for (int r = 0; r < pe_; ++r) t.emplace_back(n_ + r, n_ + r, -delta_);
    for (int c = 0; c < os.Ai.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(os.Ai, c); it; ++it)
        t.emplace_back(n_ + pe_ + static_cast<int>(it.row()),
                       static_cast<int>(it.col()), it.value());
    for (int r = 0; r < mi_; ++r)
      t.emplace_back(n_ + pe_ + r, n_ + pe_ + r, -1.0);
    k_.resize(dim, dim);
    k_.setFromTriplets(t.begin(), t.end());
    k_.makeCompressed();
    // In the lower triangle the slack and equality columns hold only their
    // diagonal entry, so it is the first value of the column.
    dpos_.resize(mi_);
    for (int r = 0; r < mi_; ++r) dpos_[r] = k_.outerIndexPtr()[n_ + pe_ + r];
    ldlt_.analyzePattern(k_);
  }

  // d = s ./ z barrier diagonal. Returns false if the factorization fails
  // even after increasing the regularization.
  //
  // The barrier diagonal is written without the static shift: it is strictly
  // negative on its own, and for an active constraint d vanishes like mu, so
  // any additive delta would eventually dwarf it and make the solver enforce
  // the wrong complementarity products (a corruption refinement cannot undo,
  // since it loses delta/d accuracy per round). Only failed factorizations
  // floor d, progressively.
  bool factorize(const Eigen::VectorXd& d) {
    double dfloor = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      for (int r = 0; r < mi_; ++r)
        k_.valuePtr()[dpos_[r]] = -std::max(d[r], dfloor);
      ldlt_.factorize(k_);
      if (ldlt_.info() == Eigen::Success) return true;
      dfloor = dfloor == 0.0 ? 1e-14 : dfloor * 1e3;
      bump_delta(delta_ * 10.0);
    }
    return false;
  }

  // Solves the *unregularized* system by iterative refinement against the
  // regularized factorization.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs,
                        const Eigen::VectorXd& d) const {
    Eigen::VectorXd x = ldlt_.solve(rhs);
    for (int round = 0; round < 2; ++round) {
      Eigen::VectorXd r = rhs - apply_true(x, d);
      x += ldlt_.solve(r);
    }
    return x;
  }

  double delta() const { return delta_; }

 private:
  void bump_delta(double nd) {
    // Shift the static regularization on the P and equality diagonals.
    const double shift = nd - delta_;
    for (int j = 0; j < n_; ++j) {
      const int pos = k_.outerIndexPtr()[j];
      // Column j of the lower triangle starts at its diagonal entry.
      k_.valuePtr()[pos] += shift;
    }
    for (int r = 0; r < pe_; ++r) {
      const int pos = k_.outerIndexPtr()[n_ + r];
      k_.valuePtr()[pos] -= shift;
    }
    delta_ = nd;
  }

  // True KKT operator (no regularization): block symmetric matvec.
  Eigen::VectorXd apply_true(const Eigen::VectorXd& v,
                             const Eigen::VectorXd& d) const {
    Eigen::VectorXd out(n_ + pe_ + mi_);
    const auto vx = v.head(n_);
    const auto vy = v.segment(n_, pe_);
    const auto vz = v.tail(mi_);
    out.head(n_) = qp_.P * vx + os_.Ae.transpose() * vy +
                   os_.Ai.transpose() * vz;
    out.segment(n_, pe_) = os_.Ae * vx;
    out.tail(mi_) = os_.Ai * vx - d.cwiseProduct(vz);
    return out;
  }

  int n_, pe_, mi_;
  double delta_;
  const SparseQP& qp_;
  const OneSided& os_;
  Eigen::SparseMatrix<double> k_;
  std::vector<int> dpos_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
};

// Largest step in [0, 1] keeping v + a*dv >= 0 elementwise.
double ratio_test(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double a = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  }
  return a;
}

// Folds one-sided duals back onto the original rows.
Eigen::VectorXd fold_duals(const OneSided& os, int m, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& z) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < os.pe; ++k) out[os.eq_orig[k]] += y[k];
  for (int k = 0; k < os.mi; ++k)
    out[os.in_orig[k].first] += os.in_orig[k].second * z[k];
  return out;
}

void format_value(std::string& line, double v) {
  if (v == kInf) {
    line += "inf";
  } else if (v == -kInf) {
    line += "-inf";
  } else {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
  }
}

}  // namespace

void SparseQP::validate() const {
  const int n = num_vars();
  const int m = num_constraints();
  if (P.cols() != n) throw ConfigError("SparseQP: P must be square");
  if (q.size() != n) throw ConfigError("SparseQP: q size mismatch");
  if (A.cols() != n && m > 0) throw ConfigError("SparseQP: A column mismatch");
  if (lb.size() != m || ub.size() != m)
    throw ConfigError("SparseQP: bound size mismatch");
  double asym = 0.0, scale = 1.0;
  const Eigen::SparseMatrix<double> pt = P.transpose();
  for (int c = 0; c < P.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(P, c); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  const Eigen::SparseMatrix<double> diff = P - pt;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, c); it; ++it)
      asym = std::max(asym, std::abs(it.value()));
  if (asym > 1e-12 * scale)
    throw ConfigError("SparseQP: P is not symmetric (max asymmetry " +
                      std::to_string(asym) + ")");
  for (int r = 0; r < m; ++r) {
    if (std::isnan(lb[r]) || std::isnan(ub[r]))
      throw ConfigError("SparseQP: NaN bound at row " + std::to_string(r));
    if (lb[r] > ub[r])
      throw ConfigError("SparseQP: lb > ub at row " + std::to_string(r));
  }
}

KktResiduals kkt_residuals(const SparseQP& qp, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y) {
  KktResiduals res;
  const Eigen::VectorXd ax = qp.A * x;
  for (int r = 0; r < qp.num_constraints(); ++r) {
    const double viol =
        std::max({qp.lb[r] - ax[r], ax[r] - qp.ub[r], 0.0});
    res.primal_res = std::max(res.primal_res, viol);
    if (y[r] > 0.0) {
      // Pushing against the upper bound; distance from it scales the gap.
      const double dist = std::isfinite(qp.ub[r]) ? std::abs(qp.ub[r] - ax[r])
                                                  : 1.0;
      res.comp_slack = std::max(res.comp_slack, y[r] * dist);
    } else if (y[r] < 0.0) {
      const double dist = std::isfinite(qp.lb[r]) ? std::abs(ax[r] - qp.lb[r])
                                                  : 1.0;
      res.comp_slack = std::max(res.comp_slack, -y[r] * dist);
    }
  }
  const Eigen::VectorXd rd = qp.P * x + qp.q + qp.A.transpose() * y;
  res.dual_res = rd.size() > 0 ? rd.cwiseAbs().maxCoeff() : 0.0;
  return res;
}

QpSolution solve(const SparseQP& qp, const SolverSettings& settings) {
  qp.validate();
  const int n = qp.num_vars();
  const int m = qp.num_constraints();
  const OneSided os = split_rows(qp);

  QpSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  sol.y = Eigen::VectorXd::Zero(m);

  const double delta0 = 1e-9;
  KktSystem kkt(qp, os, delta0);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(os.pe);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(os.mi);
  Eigen::VectorXd s(os.mi);
  for (int i = 0; i < os.mi; ++i) s[i] = std::clamp(os.ui[i], 1.0, 1e6);

  const int dim = n + os.pe + os.mi;
  Eigen::VectorXd rhs(dim), step(dim), corr(dim);

  auto finish = [&](SolveStatus st, int iters) {
    sol.status = st;
    sol.iterations = iters;
    sol.x = x;
    sol.y = fold_duals(os, m, y, z);
    const KktResiduals res = kkt_residuals(qp, sol.x, sol.y);
    sol.primal_res = res.primal_res;
    sol.dual_res = res.dual_res;
    return sol;
  };

  int iter = 0;
  for (; iter < settings.max_iterations; ++iter) {
    const Eigen::VectorXd rd =
        qp.P * x + qp.q + os.Ae.transpose() * y + os.Ai.transpose() * z;
    const Eigen::VectorXd re = os.Ae * x - os.be;
    const Eigen::VectorXd ai_x = os.Ai * x;
    const Eigen::VectorXd ri = ai_x + s - os.ui;

    double primal = re.size() > 0 ? re.cwiseAbs().maxCoeff() : 0.0;
    for (int i = 0; i < os.mi; ++i)
      primal = std::max(primal, ai_x[i] - os.ui[i]);
    const double dual = rd.size() > 0 ? rd.cwiseAbs().maxCoeff() : 0.0;
    const double mu = os.mi > 0 ? s.dot(z) / os.mi : 0.0;

    if (primal <= settings.eps_primal && dual <= settings.eps_dual &&
        (os.mi == 0 || mu <= settings.eps_comp)) {
      return finish(SolveStatus::Optimal, iter);
    }

    // Primal infeasibility certificate: (y, z >= 0) with A'y + Ai'z ~ 0 and
    // be'y + ui'z < 0. Scale-normalized against the dual magnitude.
    const double theta =
        std::max(y.size() > 0 ? y.cwiseAbs().maxCoeff() : 0.0,
                 z.size() > 0 ? z.cwiseAbs().maxCoeff() : 0.0);
    if (theta > 1e4) {
      const Eigen::VectorXd at =
          os.Ae.transpose() * y + os.Ai.transpose() * z;
      const double atn = at.size() > 0 ? at.cwiseAbs().maxCoeff() : 0.0;
      const double gap = os.be.dot(y) + os.ui.dot(z);
      if (atn <= settings.eps_infeasible * theta &&
          gap <= -settings.eps_infeasible * theta) {
        return finish(SolveStatus::Infeasible, iter);
      }
      // Degenerate pins keep the ray residual from vanishing completely, so
      // also accept a ray whose gap is macroscopically negative and dominates
      // the residual: refuting it would need a feasible x with |x|_1 >= 1e5.
      if (atn <= 1e-5 * theta && gap <= -1e-3 * theta && gap <= -1e5 * atn) {
        return finish(SolveStatus::Infeasible, iter);
      }
    }
    if (!std::isfinite(mu) || mu > 1e20 || theta > 1e14) {
      return finish(SolveStatus::MaxIterations, iter);
    }

    if (os.mi == 0) {
      // Pure (in)equality system: a Newton step is exact; keep iterating
      // only to let refinement drive the residuals below tolerance.
      Eigen::VectorXd d(0);
      if (!kkt.factorize(d)) return finish(SolveStatus::MaxIterations, iter);
      rhs.head(n) = -rd;
      rhs.segment(n, os.pe) = -re;
      step = kkt.solve(rhs, d);
      x += step.head(n);
      y += step.segment(n, os.pe);
      if (iter >= 8) return finish(SolveStatus::MaxIterations, iter);
      continue;
    }

    const Eigen::VectorXd d = s.cwiseQuotient(z);
    if (!kkt.factorize(d)) return finish(SolveStatus::MaxIterations, iter);

    // Predictor (affine scaling) direction.
    rhs.head(n) = -rd;
    rhs.segment(n, os.pe) = -re;
    rhs.tail(os.mi) = -ri + s;
    step = kkt.solve(rhs, d);
    const Eigen::VectorXd dz_aff = step.tail(os.mi);
    const Eigen::VectorXd ds_aff = -ri - os.Ai * step.head(n);

    const double a_aff = std::min(ratio_test(s, ds_aff), ratio_test(z, dz_aff));
    const double mu_aff =
        (s + a_aff * ds_aff).dot(z + a_aff * dz_aff) / os.mi;
    const double sigma =
        std::clamp(std::pow(mu_aff / std::max(mu, 1e-300), 3.0), 1e-12, 1.0);

    // Corrector with Mehrotra's second-order complementarity target.
    rhs.tail(os.mi) =
        -ri + s -
        (sigma * mu - ds_aff.cwiseProduct(dz_aff).array()).matrix().cwiseQuotient(z);
    corr = kkt.solve(rhs, d);
    const Eigen::VectorXd dx = corr.head(n);
    const Eigen::VectorXd dy = corr.segment(n, os.pe);
    const Eigen::VectorXd dz = corr.tail(os.mi);
    const Eigen::VectorXd ds = -ri - os.Ai * dx;

    const double tau = std::min(0.9995, std::max(0.995, 1.0 - mu));
    const double alpha =
        std::min(1.0, tau * std::min(ratio_test(s, ds), ratio_test(z, dz)));

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;

    // Wide-neighborhood safeguard. At degenerate corners (both epigraph rows
    // of a kink active) one factor of an (s, z) pair can race to the boundary
    // far ahead of mu; once a slack underflows to zero every ratio test
    // returns a zero step and the iteration locks. Lifting the smaller factor
    // keeps each product a vanishing fraction of mu, which perturbs nothing
    // at convergence but keeps the iterate strictly interior.
    const double mu_next = os.mi > 0 ? s.dot(z) / os.mi : 0.0;
    const double pfloor = 1e-7 * mu_next;
    if (pfloor > 0.0) {
      const double root = std::sqrt(pfloor);
      for (int i = 0; i < os.mi; ++i) {
        if (s[i] * z[i] >= pfloor) continue;
        if (std::max(s[i], z[i]) < root) {
          s[i] = root;
          z[i] = root;
        } else if (s[i] < z[i]) {
          s[i] = pfloor / z[i];
        } else {
          z[i] = pfloor / s[i];
        }
      }
    }
  }
  return finish(SolveStatus::MaxIterations, iter);
}

void dump_qp(const SparseQP& qp, std::ostream& os) {
  std::string line;
  os << "# cinestab qp v1\n";
  os << "dims " << qp.num_vars() << " " << qp.num_constraints() << "\n";
  for (int c = 0; c < qp.P.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.P, c); it; ++it) {
      line = "P " + std::to_string(it.row()) + " " + std::to_string(it.col()) +
             " ";
      format_value(line, it.value());
      os << line << "\n";
    }
  }
  for (int i = 0; i < qp.q.size(); ++i) {
    if (qp.q[i] == 0.0) continue;
    line = "q " + std::to_string(i) + " ";
    format_value(line, qp.q[i]);
    os << line << "\n";
  }
  for (int c = 0; c < qp.A.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.A, c); it; ++it) {
      line = "A " + std::to_string(it.row()) + " " + std::to_string(it.col()) +
             " ";
      format_value(line, it.value());
      os << line << "\n";
    }
  }
  for (int r = 0; r < qp.num_constraints(); ++r) {
    line = "b " + std::to_string(r) + " ";
    format_value(line, qp.lb[r]);
    line += " ";
    format_value(line, qp.ub[r]);
    os << line << "\n";
  }
}

}  // namespace cinestab
