#pragma once

#include "cinestab/lie.hpp"

#include <vector>

namespace cinestab {

// Per-frame motion of the input video. f[t] is the log-homography mapping
// frame t coordinates to frame t-1 coordinates (frame-to-previous-frame
// increments). All entries are trace-zero.
struct AnalysisPath {
  std::vector<LogHomography> f;
  double frame_aspect = 9.0 / 16.0;

  int size() const { return static_cast<int>(f.size()); }
  void validate() const;  // throws ConfigError / LengthMismatch on violation
};

// Crop window and frame rectangle, both centered at the origin in normalized
// coordinates. The window is strictly inside the frame and its area is at
// least (1 - crop_fraction)^2 times the frame area.
struct FrameGeometry {
  double crop_fraction = 0.2;
  CornerSet crop_window;
  CornerSet frame_corners;

  void validate() const;
};

// Forward differences of the stabilized path, per the trend-filter objective.
// With s[t] = cumulative(f)[t] + p[t]:
//   e1[t] = s[t+1] - s[t]                  (length n-1)
//   e2[t] = s[t+2] - 2 s[t+1] + s[t]       (length n-2)
//   e3[t] = s[t+3] - 3 s[t+2] + 3 s[t+1] - s[t]   (length n-3)
// Orders whose length would be non-positive are left empty.
struct DerivativeTraces {
  std::vector<Vec9> e1, e2, e3;
};

// Running sums of the increments: result[t] = f[0] + ... + f[t], the
// first-order approximation of log of the frame-t-to-frame-0 homography.
std::vector<LogHomography> cumulative_path(const AnalysisPath& path);

// Derivative traces of the corrected path given corrections p and input
// increments f. Expanded in increments these are
//   e1[t] = p[t+1] + f[t+1] - p[t]
//   e2[t] = p[t+2] + f[t+2] - 2 p[t+1] - f[t+1] + p[t]
//   e3[t] = p[t+3] + f[t+3] - 3 p[t+2] - 2 f[t+2] + 3 p[t+1] + f[t+1] - p[t]
// Throws LengthMismatch when p and f differ in length.
DerivativeTraces derivatives(const std::vector<LogHomography>& p,
                             const std::vector<LogHomography>& f);

// Builds the frame rectangle (half extents 1 x aspect) and a centered crop
// window with sidelength factor (1 - crop_fraction + margin). Margin trades
// retained field of view against correction headroom; margin = 0 puts the
// window exactly at the FOV lower bound.
// Requires 0 < crop_fraction <= 0.5 and 0 <= margin < crop_fraction
// (throws InvalidFraction otherwise).
FrameGeometry crop_window_from_fraction(double crop_fraction, double aspect,
                                        double margin);

}  // namespace cinestab
