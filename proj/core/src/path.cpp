#include "cinestab/path.hpp"

#include "cinestab/errors.hpp"

#include <cmath>
#include <string>

namespace cinestab {

namespace {
constexpr double kTraceTol = 1e-10;
}

void AnalysisPath::validate() const {
  if (f.empty()) throw ConfigError("AnalysisPath: needs at least one frame");
  if (!(frame_aspect > 0.0))
    throw ConfigError("AnalysisPath: aspect must be positive");
  for (std::size_t t = 0; t < f.size(); ++t) {
    if (std::abs(f[t].trace()) > kTraceTol) {
      throw ConfigError("AnalysisPath: increment " + std::to_string(t) +
                        " has trace " + std::to_string(f[t].trace()));
    }
  }
}

void FrameGeometry::validate() const {
  if (!(crop_fraction > 0.0 && crop_fraction <= 0.5))
    throw InvalidFraction("FrameGeometry: crop_fraction out of (0, 0.5]");
  const double aw = quad_area(crop_window);
  const double af = quad_area(frame_corners);
  const double floor = (1.0 - crop_fraction) * (1.0 - crop_fraction) * af;
  if (aw + 1e-12 < floor)
    throw InvalidFraction("FrameGeometry: window area below the FOV floor");
  // Strict containment, assuming both rectangles are centered and
  // axis-aligned (the only geometry this library constructs).
  for (const Point2& c : crop_window.corners) {
    if (std::abs(c.x) >= std::abs(frame_corners.corners[0].x) ||
        std::abs(c.y) >= std::abs(frame_corners.corners[0].y))
      throw InvalidFraction("FrameGeometry: window not strictly inside frame");
  }
}

std::vector<LogHomography> cumulative_path(const AnalysisPath& path) {
  std::vector<LogHomography> out;
  out.reserve(path.f.size());
  LogHomography acc = LogHomography::zero();
  for (const LogHomography& inc : path.f) {
    acc = acc + inc;
    out.push_back(acc);
  }
  return out;
}

DerivativeTraces derivatives(const std::vector<LogHomography>& p,
                             const std::vector<LogHomography>& f) {
  if (p.size() != f.size()) {
    throw LengthMismatch("derivatives: p has " + std::to_string(p.size()) +
                         " frames, f has " + std::to_string(f.size()));
  }
  const int n = static_cast<int>(p.size());
  DerivativeTraces out;
  if (n >= 2) {
    out.e1.reserve(n - 1);
    for (int t = 0; t + 1 < n; ++t) {
      out.e1.push_back(p[t + 1].v + f[t + 1].v - p[t].v);
    }
  }
  if (n >= 3) {
    out.e2.reserve(n - 2);
    for (int t = 0; t + 2 < n; ++t) {
      out.e2.push_back(p[t + 2].v + f[t + 2].v - 2.0 * p[t + 1].v -
                       f[t + 1].v + p[t].v);
    }
  }
  if (n >= 4) {
    out.e3.reserve(n - 3);
    for (int t = 0; t + 3 < n; ++t) {
      out.e3.push_back(p[t + 3].v + f[t + 3].v - 3.0 * p[t + 2].v -
                       2.0 * f[t + 2].v + 3.0 * p[t + 1].v + f[t + 1].v -
                       p[t].v);
    }
  }
  return out;
}

FrameGeometry crop_window_from_fraction(double crop_fraction, double aspect,
                                        double margin) {
  if (!(crop_fraction > 0.0 && crop_fraction <= 0.5)) {
    throw InvalidFraction("crop_window_from_fraction: crop_fraction " +
                          std::to_string(crop_fraction) +
                          " outside (0, 0.5]");
  }
  if (!(margin >= 0.0 && margin < crop_fraction)) {
    throw InvalidFraction("crop_window_from_fraction: margin " +
                          std::to_string(margin) +
                          " outside [0, crop_fraction)");
  }
  if (!(aspect > 0.0)) {
    throw InvalidFraction("crop_window_from_fraction: aspect must be positive");
  }
  const double s = 1.0 - crop_fraction + margin;
  FrameGeometry g;
  g.crop_fraction = crop_fraction;
  g.frame_corners = CornerSet::rectangle(1.0, aspect);
  g.crop_window = CornerSet::rectangle(s, s * aspect);
  return g;
}

}  // namespace cinestab
