#pragma once

#include <stdexcept>
#include <string>

namespace cinestab {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// normalize_det1: input determinant is <= 0 (or numerically indistinguishable from 0).
struct NonPositiveDeterminant : Error {
  using Error::Error;
};

// log_h: an eigenvalue sits on (or too close to) the negative real axis, so the
// principal logarithm is not defined.
struct LogDomain : Error {
  using Error::Error;
};

// apply: the mapped point has homogeneous w ~ 0 (point sent to infinity).
struct PointAtInfinity : Error {
  using Error::Error;
};

// quad_area: corner set is not counter-clockwise (shoelace sum <= 0).
struct NegativeArea : Error {
  using Error::Error;
};

// sidelength_gradients: an edge has (near) zero length.
struct DegenerateEdge : Error {
  using Error::Error;
};

// Sequence lengths that must agree do not.
struct LengthMismatch : Error {
  using Error::Error;
};

// crop_window_from_fraction: fraction or margin outside the valid range.
struct InvalidFraction : Error {
  using Error::Error;
};

// Window parameters violate l_s >= 4 or l_s < l_w.
struct BadWindowParams : Error {
  using Error::Error;
};

// A config field is out of range.
struct ConfigError : Error {
  using Error::Error;
};

// Hard saliency inclusion made the problem infeasible.
struct InfeasibleSaliency : Error {
  using Error::Error;
};

// A window subproblem failed to solve; carries the window range in the message.
struct WindowInfeasible : Error {
  using Error::Error;
};

// extract_plan called with a solution whose status is not Optimal.
struct NotOptimal : Error {
  using Error::Error;
};

// The QP solver stopped without a usable solution.
struct SolverFailure : Error {
  using Error::Error;
};

// File format violation; message names the offending frame/field.
struct ParseError : Error {
  using Error::Error;
};

// Filesystem problem (missing file, unwritable output).
struct IoError : Error {
  using Error::Error;
};

}  // namespace cinestab
