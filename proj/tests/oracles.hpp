#pragma once

// Reference implementations the tests compare library output against.
// Everything here recomputes results from first principles and never calls
// the code under test, so an agreement is evidence rather than tautology.

#include "cinestab/lie.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) {  // inclusive range
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

// Random trace-zero log-homography with ||h||_inf <= bound.
inline cinestab::LogHomography random_log(Rng& rng, double bound) {
  cinestab::Vec9 v;
  for (int i = 0; i < 8; ++i) v[i] = rng.uniform(-bound, bound);
  v[8] = -(v[0] + v[4]);
  const double m = v.cwiseAbs().maxCoeff();
  if (m > bound) v *= bound / m;
  return cinestab::LogHomography{v};
}

// Central finite-difference gradient of a scalar function.
inline Eigen::VectorXd central_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += step;
    lo[i] -= step;
    g[i] = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

// Quad area as the sum of the triangles (c0,c1,c2) and (c0,c2,c3); agrees
// with the shoelace formula for simple counter-clockwise quads.
inline double triangulated_area(const cinestab::CornerSet& c) {
  const auto tri = [](const cinestab::Point2& a, const cinestab::Point2& b,
                      const cinestab::Point2& d) {
    return 0.5 * ((b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y));
  };
  return tri(c.corners[0], c.corners[1], c.corners[2]) +
         tri(c.corners[0], c.corners[2], c.corners[3]);
}

struct DenseQp {
  Eigen::MatrixXd P;  // symmetric positive definite
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd lb, ub;  // entries may be +/-inf; lb == ub marks an equality
};

// Globally optimal x of a small strictly convex QP by enumerating candidate
// active sets: equality rows are always active, every other subset of rows
// (each pinned at one finite bound) yields an equality-constrained problem
// solved through its KKT system, and the feasible candidate with the lowest
// objective is the optimum. Throws std::runtime_error if no candidate is
// feasible (the instance generator is expected to guarantee feasibility).
Eigen::VectorXd active_set_optimum(const DenseQp& qp);

// Exact minimizer of the scalar trend-filter objective
//   0.5*w0*sum_t p_t^2 + w1*sum|e1| + w2*sum|e2| + w3*sum|e3|
// for scalar increments f, by enumerating the sign pattern of every absolute
// term: the pattern of the true optimum turns the problem into an
// equality-constrained quadratic whose solution is that optimum, so the
// candidate with the lowest true objective is exact.
std::vector<double> scalar_trend_optimum(const std::vector<double>& f,
                                         double w0, double w1, double w2,
                                         double w3);

}  // namespace oracle
