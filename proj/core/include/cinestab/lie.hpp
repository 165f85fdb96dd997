#pragma once

#include <Eigen/Dense>

#include <array>

namespace cinestab {

// Conventions used throughout:
//
//  * Homographies act on normalized frame coordinates: the origin is the frame
//    center, x spans [-1, 1] and y spans [-aspect, aspect] with
//    aspect = height / width.
//  * A log-homography is the 3x3 trace-zero matrix log of a det-1 homography,
//    flattened row-major into 9 doubles. Under that layout indices 0,1,3,4 are
//    the affine block, 2 and 5 are x/y translation, 6 and 7 are the keystone
//    (perspective) pair and index 8 is pinned by the zero trace.
//  * Corner sets are counter-clockwise (positive shoelace sum) starting at the
//    top-left corner, i.e. rectangle order (-w,+h), (-w,-h), (+w,-h), (+w,+h).

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// A 3x3 homography, determinant normalized to 1 by construction.
struct Homography {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
};

// Element of the Lie algebra sl(3): trace-zero 3x3, stored row-major.
struct LogHomography {
  Vec9 v = Vec9::Zero();

  static LogHomography zero() { return LogHomography{}; }
  static LogHomography from_matrix(const Eigen::Matrix3d& m);
  Eigen::Matrix3d to_matrix() const;
  double trace() const { return v[0] + v[4] + v[8]; }
};

inline LogHomography operator+(const LogHomography& a, const LogHomography& b) {
  return LogHomography{a.v + b.v};
}
inline LogHomography operator-(const LogHomography& a, const LogHomography& b) {
  return LogHomography{a.v - b.v};
}
inline LogHomography operator*(double s, const LogHomography& a) {
  return LogHomography{s * a.v};
}

struct CornerSet {
  std::array<Point2, 4> corners;

  // Axis-aligned rectangle centered at the origin with the given half extents,
  // in the canonical counter-clockwise order.
  static CornerSet rectangle(double half_w, double half_h);

  // Corners flattened as (x0, y0, x1, y1, x2, y2, x3, y3).
  Vec8 to_vec() const;
};

// Scales a matrix with positive determinant to determinant 1.
// Throws NonPositiveDeterminant when det(m) <= 1e-12.
Homography normalize_det1(const Eigen::Matrix3d& m);

// Principal matrix logarithm of a det-1 homography; the result is trace-zero.
// Throws LogDomain when an eigenvalue lies within 1e-9 of the closed negative
// real axis (the principal branch is undefined there).
LogHomography log_h(const Homography& h);

// Matrix exponential; inverse of log_h on its domain. Always det-1 for
// trace-zero input.
Homography exp_h(const LogHomography& h);

// Projective action on a point. Throws PointAtInfinity when |w'| < 1e-12.
Point2 apply(const Homography& h, const Point2& p);

// Applies the homography to all four corners.
CornerSet transform(const Homography& h, const CornerSet& c);

// Jacobian at h = 0 of the point displacement d(h; p) = apply(exp_h(h), p) - p
// with respect to the 9 log-homography elements. Rows are (dx, dy).
Eigen::Matrix<double, 2, 9> displacement_jacobian(const Point2& p);

// Stacked displacement Jacobians of the four corners (8x9, corner-major).
Eigen::Matrix<double, 8, 9> corner_jacobian(const CornerSet& c);

// Shoelace area of the quad. Throws NegativeArea when the sum is not positive.
double quad_area(const CornerSet& c);

// Gradient of quad_area with respect to the 8 corner coordinates.
Vec8 area_gradient(const CornerSet& c);

// Euclidean lengths of the four edges (corner i to corner i+1 mod 4).
std::array<double, 4> sidelengths(const CornerSet& c);

// Gradients of the four edge lengths with respect to the 8 corner coordinates,
// one row per edge. Throws DegenerateEdge when an edge is shorter than 1e-12.
Eigen::Matrix<double, 4, 8> sidelength_gradients(const CornerSet& c);

}  // namespace cinestab
