#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>

namespace cinestab {

// Convex quadratic program
//
//   minimize    0.5 x'Px + q'x
//   subject to  lb <= Ax <= ub
//
// P must be symmetric positive semidefinite. Equality rows are expressed as
// lb = ub; one-sided rows use +/-infinity on the free side.
struct SparseQP {
  Eigen::SparseMatrix<double> P;  // n x n, symmetric PSD
  Eigen::VectorXd q;              // n
  Eigen::SparseMatrix<double> A;  // m x n
  Eigen::VectorXd lb, ub;         // m, entries may be +/-inf

  int num_vars() const { return static_cast<int>(P.rows()); }
  int num_constraints() const { return static_cast<int>(A.rows()); }

  // Checks dimensions, symmetry of P (within 1e-12 relative) and lb <= ub.
  // Throws ConfigError on violation.
  void validate() const;
};

struct SolverSettings {
  double eps_primal = 1e-6;
  double eps_dual = 1e-6;
  double eps_comp = 1e-8;       // mean complementarity gap target
  double eps_infeasible = 1e-7; // certificate tolerance
  int max_iterations = 20000;
};

enum class SolveStatus { Optimal, MaxIterations, Infeasible };

struct QpSolution {
  Eigen::VectorXd x;  // primal, size n
  Eigen::VectorXd y;  // dual per constraint row, size m; positive entries push
                      // against ub, negative against lb
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  double primal_res = 0.0;
  double dual_res = 0.0;
};

// Deterministic primal-dual interior-point solve (Mehrotra predictor-corrector
// on a sparse LDL' factorization of the reduced KKT system). Identical inputs
// produce bitwise-identical outputs. status == Optimal guarantees
// primal_res <= eps_primal and dual_res <= eps_dual.
QpSolution solve(const SparseQP& qp, const SolverSettings& settings = {});

struct KktResiduals {
  double primal_res = 0.0;  // max constraint violation, infinity norm
  double dual_res = 0.0;    // || Px + q + A'y ||_inf
  double comp_slack = 0.0;  // max_i |y_i| * distance of row i from its active bound
};

// Residuals of an arbitrary primal-dual pair against the QP's KKT conditions.
KktResiduals kkt_residuals(const SparseQP& qp, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y);

// Text dump: one line per nonzero (matrix row col value) plus dims and bounds.
// Infinite bounds print as -inf / inf. Intended for debugging and external
// solver cross-checks.
void dump_qp(const SparseQP& qp, std::ostream& os);

}  // namespace cinestab
