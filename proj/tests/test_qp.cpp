#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cinestab/errors.hpp"
#include "cinestab/qp.hpp"

#include "oracles.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <vector>

using namespace cinestab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SparseQP from_dense(const oracle::DenseQp& d) {
  SparseQP qp;
  qp.P = d.P.sparseView();
  qp.q = d.q;
  qp.A = d.A.sparseView();
  qp.lb = d.lb;
  qp.ub = d.ub;
  return qp;
}

// Feasible-by-construction random instance: bounds bracket A*x0 for an
// interior point x0. Rows mix two-sided, one-sided and equality kinds.
oracle::DenseQp random_instance(oracle::Rng& rng, int n, int m) {
  oracle::DenseQp d;
  Eigen::MatrixXd b(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) b(r, c) = rng.uniform(-1.0, 1.0);
  d.P = b.transpose() * b + 0.1 * Eigen::MatrixXd::Identity(n, n);
  d.q.resize(n);
  for (int i = 0; i < n; ++i) d.q[i] = rng.uniform(-1.0, 1.0);
  d.A.resize(m, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) d.A(r, c) = rng.uniform(-1.0, 1.0);
  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0[i] = rng.uniform(-0.5, 0.5);
  const Eigen::VectorXd ax = d.A * x0;
  d.lb.resize(m);
  d.ub.resize(m);
  int equalities = 0;
  for (int r = 0; r < m; ++r) {
    const double roll = rng.uniform(0.0, 1.0);
    if (roll < 0.15 && equalities < n - 1) {
      d.lb[r] = d.ub[r] = ax[r];
      ++equalities;
    } else if (roll < 0.40) {
      d.lb[r] = -kInf;
      d.ub[r] = ax[r] + rng.uniform(0.01, 0.8);
    } else if (roll < 0.65) {
      d.lb[r] = ax[r] - rng.uniform(0.01, 0.8);
      d.ub[r] = kInf;
    } else {
      d.lb[r] = ax[r] - rng.uniform(0.01, 0.8);
      d.ub[r] = ax[r] + rng.uniform(0.01, 0.8);
    }
  }
  return d;
}

SparseQP scalar_qp() {
  SparseQP qp;
  qp.P.resize(1, 1);
  qp.P.insert(0, 0) = 1.0;
  qp.q = Eigen::VectorXd::Zero(1);
  qp.A.resize(0, 1);
  qp.lb.resize(0);
  qp.ub.resize(0);
  return qp;
}

}  // namespace

TEST_CASE("unconstrained single variable minimizes at zero") {
  const QpSolution sol = solve(scalar_qp());
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.x[0]) <= 1e-8);
  CHECK(sol.primal_res <= 1e-6);
  CHECK(sol.dual_res <= 1e-6);
}

TEST_CASE("active bound is hit with a positive dual") {
  // min 0.5*(x-1)^2 subject to x <= 0.5.
  SparseQP qp;
  qp.P.resize(1, 1);
  qp.P.insert(0, 0) = 1.0;
  qp.q = Eigen::VectorXd::Constant(1, -1.0);
  qp.A.resize(1, 1);
  qp.A.insert(0, 0) = 1.0;
  qp.lb = Eigen::VectorXd::Constant(1, -kInf);
  qp.ub = Eigen::VectorXd::Constant(1, 0.5);
  const QpSolution sol = solve(qp);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.y[0] > 0.0);  // pushes against the upper bound
}

TEST_CASE("equality rows are expressed as lb equal to ub") {
  // min 0.5*||x||^2 subject to x0 + x1 = 1.
  SparseQP qp;
  qp.P.resize(2, 2);
  qp.P.insert(0, 0) = 1.0;
  qp.P.insert(1, 1) = 1.0;
  qp.q = Eigen::VectorXd::Zero(2);
  qp.A.resize(1, 2);
  qp.A.insert(0, 0) = 1.0;
  qp.A.insert(0, 1) = 1.0;
  qp.lb = Eigen::VectorXd::Constant(1, 1.0);
  qp.ub = Eigen::VectorXd::Constant(1, 1.0);
  const QpSolution sol = solve(qp);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.x[1] == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("random instances match the active-set enumeration oracle") {
  oracle::Rng rng(101);
  for (int i = 0; i < 12; ++i) {
    const int n = rng.integer(2, 6);
    const int m = rng.integer(2, 8);
    const oracle::DenseQp d = random_instance(rng, n, m);
    const SparseQP qp = from_dense(d);
    qp.validate();
    const QpSolution sol = solve(qp);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const Eigen::VectorXd want = oracle::active_set_optimum(d);
    CHECK((sol.x - want).cwiseAbs().maxCoeff() <= 1e-6);
    const KktResiduals res = kkt_residuals(qp, sol.x, sol.y);
    CHECK(res.primal_res <= 1e-6);
    CHECK(res.dual_res <= 1e-6);
  }
}

TEST_CASE("kkt_residuals quantify distance from optimality") {
  const SparseQP qp = scalar_qp();
  Eigen::VectorXd x(1), y(0);

  x[0] = 0.0;
  const KktResiduals at_opt = kkt_residuals(qp, x, y);
  CHECK(at_opt.primal_res <= 1e-12);
  CHECK(at_opt.dual_res <= 1e-12);
  CHECK(at_opt.comp_slack <= 1e-12);

  // Perturbing x away from the optimum shows up in the dual residual,
  // which is |x| for this instance.
  x[0] = 0.1;
  CHECK(kkt_residuals(qp, x, y).dual_res >= 0.09);

  // An infeasible point reports the constraint violation magnitude.
  SparseQP boxed = scalar_qp();
  boxed.A.resize(1, 1);
  boxed.A.insert(0, 0) = 1.0;
  boxed.lb = Eigen::VectorXd::Constant(1, -0.25);
  boxed.ub = Eigen::VectorXd::Constant(1, 0.25);
  Eigen::VectorXd y1 = Eigen::VectorXd::Zero(1);
  x[0] = 1.0;
  CHECK(kkt_residuals(boxed, x, y1).primal_res ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("row scaling leaves the primal solution unchanged") {
  oracle::Rng rng(103);
  const oracle::DenseQp d = random_instance(rng, 5, 7);
  const SparseQP qp = from_dense(d);
  const QpSolution base = solve(qp);
  REQUIRE(base.status == SolveStatus::Optimal);

  oracle::DenseQp scaled = d;
  for (int r = 0; r < scaled.A.rows(); ++r) {
    const double s = 0.1 + 3.0 * ((r * 37) % 5);
    scaled.A.row(r) *= s;
    scaled.lb[r] *= s;
    scaled.ub[r] *= s;
  }
  const QpSolution re = solve(from_dense(scaled));
  REQUIRE(re.status == SolveStatus::Optimal);
  CHECK((base.x - re.x).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("identical inputs solve bitwise identically") {
  oracle::Rng rng(107);
  const SparseQP qp = from_dense(random_instance(rng, 6, 9));
  const QpSolution a = solve(qp);
  const QpSolution b = solve(qp);
  CHECK(a.iterations == b.iterations);
  REQUIRE(a.x.size() == b.x.size());
  CHECK(std::memcmp(a.x.data(), b.x.data(), sizeof(double) * a.x.size()) == 0);
  CHECK(std::memcmp(a.y.data(), b.y.data(), sizeof(double) * a.y.size()) == 0);
}

TEST_CASE("contradictory rows are reported infeasible") {
  SparseQP qp;
  qp.P.resize(1, 1);
  qp.P.insert(0, 0) = 1.0;
  qp.q = Eigen::VectorXd::Zero(1);
  qp.A.resize(2, 1);
  qp.A.insert(0, 0) = 1.0;
  qp.A.insert(1, 0) = 1.0;
  qp.lb.resize(2);
  qp.ub.resize(2);
  qp.lb[0] = -kInf;
  qp.ub[0] = -1.0;  // x <= -1
  qp.lb[1] = 1.0;   // x >= 1
  qp.ub[1] = kInf;
  const QpSolution sol = solve(qp);
  CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("validate rejects malformed problems") {
  SparseQP qp = scalar_qp();
  qp.q.resize(2);  // wrong length
  CHECK_THROWS_AS(qp.validate(), ConfigError);

  SparseQP asym;
  asym.P.resize(2, 2);
  asym.P.insert(0, 1) = 1.0;  // no mirrored entry
  asym.q = Eigen::VectorXd::Zero(2);
  asym.A.resize(0, 2);
  asym.lb.resize(0);
  asym.ub.resize(0);
  CHECK_THROWS_AS(asym.validate(), ConfigError);

  SparseQP crossed = scalar_qp();
  crossed.A.resize(1, 1);
  crossed.A.insert(0, 0) = 1.0;
  crossed.lb = Eigen::VectorXd::Constant(1, 1.0);
  crossed.ub = Eigen::VectorXd::Constant(1, -1.0);
  CHECK_THROWS_AS(crossed.validate(), ConfigError);
}

TEST_CASE("dump_qp writes one line per nonzero") {
  oracle::Rng rng(109);
  const SparseQP qp = from_dense(random_instance(rng, 3, 4));
  std::ostringstream os;
  dump_qp(qp, os);
  const std::string text = os.str();
  CHECK(text.find("dims") != std::string::npos);
  // Every structural nonzero of P and A appears.
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines >= static_cast<std::size_t>(qp.P.nonZeros() + qp.A.nonZeros()));
}
