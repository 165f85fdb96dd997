#include "cinestab/synth.hpp"

#include "cinestab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace cinestab {

namespace {

double fraction_above(const std::vector<Vec9>& trace, double tau) {
  if (trace.empty()) return 0.0;
  int above = 0;
  for (const Vec9& e : trace)
    for (int j = 0; j < 9; ++j)
      if (std::abs(e[j]) > tau) ++above;
  return static_cast<double>(above) /
         static_cast<double>(9 * trace.size());
}

}  // namespace

int SynthSpec::total_frames() const {
  int n = 0;
  for (const SynthSegment& s : segments) n += s.frames;
  return n;
}

void SynthSpec::validate() const {
  if (segments.empty())
    throw ConfigError("SynthSpec: needs at least one segment");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].frames < 1)
      throw ConfigError("SynthSpec: segment " + std::to_string(i) +
                        " has no frames");
  }
  for (double s : jitter_sigma)
    if (!(s >= 0.0)) throw ConfigError("SynthSpec: jitter sigma must be >= 0");
  if (!(aspect > 0.0)) throw ConfigError("SynthSpec: aspect must be positive");
}

double GaussianStream::uniform() {
  // 53-bit mantissa draw shifted into (0, 1] so log() below stays finite.
  const std::uint64_t bits = rng_();
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

double GaussianStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  SynthResult out;
  out.path.frame_aspect = spec.aspect;
  const int n = spec.total_frames();

  out.clean.reserve(n);
  Vec9 vel = Vec9::Zero();
  for (const SynthSegment& seg : spec.segments) {
    Vec9 rate = seg.rate;
    rate[8] = -(rate[0] + rate[4]);
    for (int i = 0; i < seg.frames; ++i) {
      switch (seg.kind) {
        case MotionKind::Static:
          vel.setZero();
          break;
        case MotionKind::ConstantVelocity:
          vel = rate;
          break;
        case MotionKind::ConstantAcceleration:
          vel += rate;
          break;
      }
      out.clean.push_back(LogHomography{vel});
    }
  }

  bool any_jitter = false;
  for (int j = 0; j < 8; ++j) any_jitter |= spec.jitter_sigma[j] != 0.0;

  GaussianStream g(spec.seed);
  Vec9 prev = Vec9::Zero();
  out.path.f.reserve(n);
  for (int t = 0; t < n; ++t) {
    Vec9 eta = Vec9::Zero();
    if (any_jitter) {
      for (int j = 0; j < 8; ++j) eta[j] = spec.jitter_sigma[j] * g.next();
      eta[8] = -(eta[0] + eta[4]);
    }
    out.path.f.push_back(LogHomography{out.clean[t].v + eta - prev});
    prev = eta;
  }
  return out;
}

QualityReport quality(const CorrectionPlan& plan, const AnalysisPath& path,
                      const FrameGeometry& geom, double tau) {
  const int n = path.size();
  if (static_cast<int>(plan.log_corrections.size()) != n)
    throw LengthMismatch("quality: plan and path disagree on frame count");
  QualityReport rep;
  const DerivativeTraces tr = derivatives(plan.log_corrections, path.f);
  rep.e1_above_tau = fraction_above(tr.e1, tau);
  rep.e2_above_tau = fraction_above(tr.e2, tau);
  rep.e3_above_tau = fraction_above(tr.e3, tau);

  double sum = 0.0;
  for (const LogHomography& p : plan.log_corrections)
    sum += p.v.squaredNorm();
  rep.rms_correction = std::sqrt(sum / n);

  const double frame_area = quad_area(geom.frame_corners);
  const Eigen::Matrix<double, 8, 9> jac = corner_jacobian(geom.crop_window);
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_resid = 0.0;
  for (int t = 0; t < n; ++t) {
    const CornerSet moved = transform(plan.corrections[t], geom.crop_window);
    min_ratio = std::min(min_ratio, quad_area(moved) / frame_area);
    const Vec8 lin = jac * plan.log_corrections[t].v;
    for (int c = 0; c < 4; ++c) {
      const Point2& orig = geom.crop_window.corners[c];
      const double ex = moved.corners[c].x - orig.x;
      const double ey = moved.corners[c].y - orig.y;
      max_resid = std::max({max_resid, std::abs(ex - lin[2 * c]),
                            std::abs(ey - lin[2 * c + 1])});
    }
  }
  rep.fov_ratio = std::sqrt(min_ratio);
  rep.max_linearization_residual = max_resid;
  return rep;
}

PathDelta compare_paths(const std::vector<LogHomography>& a,
                        const std::vector<LogHomography>& b) {
  if (a.size() != b.size())
    throw LengthMismatch("compare_paths: sequences differ in length");
  PathDelta d;
  if (a.empty()) return d;
  double sum = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const Vec9 diff = a[t].v - b[t].v;
    d.max_abs = std::max(d.max_abs, diff.cwiseAbs().maxCoeff());
    sum += diff.squaredNorm();
  }
  d.rms = std::sqrt(sum / static_cast<double>(a.size()));
  return d;
}

}  // namespace cinestab
