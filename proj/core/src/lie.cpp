#include "cinestab/lie.hpp"

#include "cinestab/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace cinestab {

namespace {

constexpr double kDetFloor = 1e-12;
constexpr double kBranchMargin = 1e-9;
constexpr double kWFloor = 1e-12;
constexpr double kEdgeFloor = 1e-12;

}  // namespace

LogHomography LogHomography::from_matrix(const Eigen::Matrix3d& m) {
  LogHomography h;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.v[3 * r + c] = m(r, c);
  return h;
}

Eigen::Matrix3d LogHomography::to_matrix() const {
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[3 * r + c];
  return m;
}

CornerSet CornerSet::rectangle(double half_w, double half_h) {
  CornerSet c;
  c.corners[0] = {-half_w, half_h};
  c.corners[1] = {-half_w, -half_h};
  c.corners[2] = {half_w, -half_h};
  c.corners[3] = {half_w, half_h};
  return c;
}

Vec8 CornerSet::to_vec() const {
  Vec8 v;
  for (int i = 0; i < 4; ++i) {
    v[2 * i] = corners[i].x;
    v[2 * i + 1] = corners[i].y;
  }
  return v;
}

Homography normalize_det1(const Eigen::Matrix3d& m) {
  const double det = m.determinant();
  if (det <= kDetFloor) {
    throw NonPositiveDeterminant("normalize_det1: determinant " +
                                 std::to_string(det) + " is not positive");
  }
  return Homography{m / std::cbrt(det)};
}

LogHomography log_h(const Homography& h) {
  // The principal log exists iff no eigenvalue lies on the closed negative
  // real axis. Check eigenvalues explicitly before delegating to the
  // Pade-based matrix logarithm, which assumes that domain.
  Eigen::EigenSolver<Eigen::Matrix3d> es(h.m, /*computeEigenvectors=*/false);
  for (int i = 0; i < 3; ++i) {
    const std::complex<double> ev = es.eigenvalues()[i];
    if (ev.real() < 0.0 && std::abs(ev.imag()) < kBranchMargin) {
      throw LogDomain("log_h: eigenvalue (" + std::to_string(ev.real()) + ", " +
                      std::to_string(ev.imag()) +
                      ") lies on the negative real axis");
    }
    if (std::abs(ev) < kBranchMargin) {
      throw LogDomain("log_h: eigenvalue magnitude " +
                      std::to_string(std::abs(ev)) + " too close to zero");
    }
  }
  const Eigen::Matrix3d lg = h.m.log();
  return LogHomography::from_matrix(lg);
}

Homography exp_h(const LogHomography& h) {
  const Eigen::Matrix3d e = h.to_matrix().exp();
  return Homography{e};
}

Point2 apply(const Homography& h, const Point2& p) {
  const Eigen::Vector3d q = h.m * Eigen::Vector3d(p.x, p.y, 1.0);
  if (std::abs(q[2]) < kWFloor) {
    throw PointAtInfinity("apply: point (" + std::to_string(p.x) + ", " +
                          std::to_string(p.y) + ") maps to infinity");
  }
  return Point2{q[0] / q[2], q[1] / q[2]};
}

CornerSet transform(const Homography& h, const CornerSet& c) {
  CornerSet out;
  for (int i = 0; i < 4; ++i) out.corners[i] = apply(h, c.corners[i]);
  return out;
}

Eigen::Matrix<double, 2, 9> displacement_jacobian(const Point2& p) {
  const double x = p.x;
  const double y = p.y;
  Eigen::Matrix<double, 2, 9> j;
  j.setZero();
  // d/dh of apply(exp(h), p) at h = 0; the projective division contributes
  // the -x*(x,y,1) and -y*(x,y,1) terms in the bottom-row columns.
  j(0, 0) = x;
  j(0, 1) = y;
  j(0, 2) = 1.0;
  j(0, 6) = -x * x;
  j(0, 7) = -x * y;
  j(0, 8) = -x;
  j(1, 3) = x;
  j(1, 4) = y;
  j(1, 5) = 1.0;
  j(1, 6) = -x * y;
  j(1, 7) = -y * y;
  j(1, 8) = -y;
  return j;
}

Eigen::Matrix<double, 8, 9> corner_jacobian(const CornerSet& c) {
  Eigen::Matrix<double, 8, 9> j;
  for (int i = 0; i < 4; ++i) {
    j.block<2, 9>(2 * i, 0) = displacement_jacobian(c.corners[i]);
  }
  return j;
}

double quad_area(const CornerSet& c) {
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point2& a = c.corners[i];
    const Point2& b = c.corners[(i + 1) % 4];
    sum += a.x * b.y - b.x * a.y;
  }
  if (sum <= 0.0) {
    throw NegativeArea("quad_area: shoelace sum " + std::to_string(sum) +
                       " is not positive (corners must be counter-clockwise)");
  }
  return 0.5 * sum;
}

Vec8 area_gradient(const CornerSet& c) {
  Vec8 g;
  for (int i = 0; i < 4; ++i) {
    const Point2& prev = c.corners[(i + 3) % 4];
    const Point2& next = c.corners[(i + 1) % 4];
    g[2 * i] = 0.5 * (next.y - prev.y);
    g[2 * i + 1] = 0.5 * (prev.x - next.x);
  }
  return g;
}

std::array<double, 4> sidelengths(const CornerSet& c) {
  std::array<double, 4> out;
  for (int i = 0; i < 4; ++i) {
    const Point2& a = c.corners[i];
    const Point2& b = c.corners[(i + 1) % 4];
    out[i] = std::hypot(b.x - a.x, b.y - a.y);
  }
  return out;
}

Eigen::Matrix<double, 4, 8> sidelength_gradients(const CornerSet& c) {
  Eigen::Matrix<double, 4, 8> g;
  g.setZero();
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    const double dx = c.corners[j].x - c.corners[i].x;
    const double dy = c.corners[j].y - c.corners[i].y;
    const double len = std::hypot(dx, dy);
    if (len < kEdgeFloor) {
      throw DegenerateEdge("sidelength_gradients: edge " + std::to_string(i) +
                           " has near-zero length");
    }
    g(i, 2 * i) = -dx / len;
    g(i, 2 * i + 1) = -dy / len;
    g(i, 2 * j) = dx / len;
    g(i, 2 * j + 1) = dy / len;
  }
  return g;
}

}  // namespace cinestab
