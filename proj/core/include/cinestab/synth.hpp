#pragma once

#include "cinestab/path.hpp"
#include "cinestab/problem.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace cinestab {

enum class MotionKind { Static, ConstantVelocity, ConstantAcceleration };

// One segment of scripted camera motion. rate is the per-frame increment
// (ConstantVelocity) or the per-frame increment growth (ConstantAcceleration);
// it is ignored for Static. Index 8 is overwritten by the trace projection.
struct SynthSegment {
  int frames = 0;
  MotionKind kind = MotionKind::Static;
  Vec9 rate = Vec9::Zero();
};

// Scripted camera path plus additive hand-shake jitter. Jitter perturbs the
// cumulative pose: frame t's pose is the scripted pose plus eta_t, with eta_t
// drawn i.i.d. N(0, jitter_sigma[j]^2) per element, so the emitted increments
// carry eta_t - eta_{t-1} and the noise never accumulates along the path.
struct SynthSpec {
  std::vector<SynthSegment> segments;
  std::array<double, 9> jitter_sigma{};  // index 8 ignored (trace projection)
  std::uint64_t seed = 0;
  double aspect = 9.0 / 16.0;

  int total_frames() const;
  void validate() const;  // throws ConfigError
};

// Deterministic standard-normal stream: mt19937_64 output mapped to (0, 1]
// uniforms as ((bits >> 11) + 1) * 2^-53 and converted by the Box-Muller
// transform, draws cached in pairs. The algorithm is spelled out (instead of
// using std::normal_distribution) so sequences match across platforms.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}
  double next();

 private:
  double uniform();
  std::mt19937_64 rng_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

struct SynthResult {
  AnalysisPath path;               // jittered frame-to-frame increments
  std::vector<LogHomography> clean;  // scripted increments, no jitter
};

// Deterministic for a given spec (eight normal draws per frame whenever any
// jitter sigma is nonzero, none otherwise).
SynthResult generate(const SynthSpec& spec);

// Plan quality measured against the input it corrected.
struct QualityReport {
  // Fraction of derivative components with magnitude > tau (0 when the
  // trace is empty); low values mean the trend filter flattened the path.
  double e1_above_tau = 0.0;
  double e2_above_tau = 0.0;
  double e3_above_tau = 0.0;
  double rms_correction = 0.0;  // sqrt(mean_t ||p_t||^2)
  // min over frames of sqrt(area(corrected window) / frame area): the
  // retained linear field of view.
  double fov_ratio = 0.0;
  // Largest per-coordinate gap between a corner displaced by the exact
  // correction homography and by the linearized displacement.
  double max_linearization_residual = 0.0;
};

QualityReport quality(const CorrectionPlan& plan, const AnalysisPath& path,
                      const FrameGeometry& geom, double tau);

struct PathDelta {
  double max_abs = 0.0;  // max element difference over all frames
  double rms = 0.0;      // sqrt(mean_t ||a_t - b_t||^2)
};

// Elementwise comparison of two log-homography sequences of equal length.
PathDelta compare_paths(const std::vector<LogHomography>& a,
                        const std::vector<LogHomography>& b);

}  // namespace cinestab
