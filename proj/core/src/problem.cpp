#include "cinestab/problem.hpp"

#include "cinestab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cinestab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kActiveTol = 1e-6;

int saliency_points(const SaliencyTrack& track, int t) {
  if (t < 0 || t >= static_cast<int>(track.points.size())) return 0;
  return static_cast<int>(track.points[t].size());
}

Point2 mean_point(const std::vector<Point2>& pts) {
  Point2 m;
  for (const Point2& p : pts) {
    m.x += p.x;
    m.y += p.y;
  }
  m.x /= static_cast<double>(pts.size());
  m.y /= static_cast<double>(pts.size());
  return m;
}

}  // namespace

StabilizerConfig::StabilizerConfig()
    : bound_lo(default_bound_lo()), bound_hi(default_bound_hi()) {}

std::array<double, 9> StabilizerConfig::default_bound_lo() {
  return {-0.15, -0.15, -0.5, -0.15, -0.15, -0.5, -0.2, -0.2, -kInf};
}

std::array<double, 9> StabilizerConfig::default_bound_hi() {
  return {0.15, 0.15, 0.5, 0.15, 0.15, 0.5, 0.2, 0.2, kInf};
}

std::vector<double> StabilizerConfig::fidelity_weights(int n) const {
  if (!w0_per_frame.empty()) {
    if (static_cast<int>(w0_per_frame.size()) != n)
      throw ConfigError("StabilizerConfig: w0_per_frame size " +
                        std::to_string(w0_per_frame.size()) +
                        " does not match frame count " + std::to_string(n));
    return w0_per_frame;
  }
  return std::vector<double>(n, w0);
}

void StabilizerConfig::validate(int n) const {
  if (n < 1) throw ConfigError("StabilizerConfig: needs at least one frame");
  const auto weights = fidelity_weights(n);
  for (double w : weights)
    if (!(w > 0.0)) throw ConfigError("StabilizerConfig: w0 must be positive");
  if (w1 < 0 || w2 < 0 || w3 < 0)
    throw ConfigError("StabilizerConfig: derivative weights must be >= 0");
  if (!(crop_fraction > 0.0 && crop_fraction <= 0.5))
    throw InvalidFraction("StabilizerConfig: crop_fraction outside (0, 0.5]");
  if (!(window_margin >= 0.0 && window_margin < crop_fraction))
    throw InvalidFraction(
        "StabilizerConfig: window_margin outside [0, crop_fraction)");
  for (int j = 0; j < 9; ++j) {
    if (bound_lo[j] > 0.0 || bound_hi[j] < 0.0)
      throw ConfigError("StabilizerConfig: element bounds must contain 0");
  }
  if (w_diag < 0 || w_offdiag < 0 || keystone_ratio_weight < 0 ||
      saliency_penalty < 0 || center_weight < 0)
    throw ConfigError("StabilizerConfig: penalty weights must be >= 0");
  if (window.l_s < 4)
    throw BadWindowParams("StabilizerConfig: window l_s must be >= 4");
  if (window.l_s >= window.l_w)
    throw BadWindowParams("StabilizerConfig: window l_s must be < l_w");
  if (tau < 0) throw ConfigError("StabilizerConfig: tau must be >= 0");
}

VariableLayout VariableLayout::make(int n, const StabilizerConfig& cfg,
                                    int fixed) {
  if (fixed < 0 || fixed >= n)
    throw LengthMismatch(
        "VariableLayout: pinned prefix must leave at least one free frame");
  VariableLayout l;
  l.n = n;
  l.fixed = fixed;
  l.p_base = 0;
  int next = 9 * (n - fixed);
  const double w[3] = {cfg.w1, cfg.w2, cfg.w3};
  for (int k = 0; k < 3; ++k) {
    l.u_first[k] = std::max(0, fixed - (k + 1));
    const int count = n - (k + 1) - l.u_first[k];
    if (w[k] > 0.0 && count > 0) {
      l.u_base[k] = next;
      l.u_count[k] = 9 * count;
      next += l.u_count[k];
    }
  }
  l.slack_start.assign(n, -1);
  if (cfg.saliency && cfg.saliency_mode == SaliencyMode::SoftInclude) {
    l.slack_base = next;
    for (int t = fixed; t < n; ++t) {
      const int pts = saliency_points(*cfg.saliency, t);
      if (pts > 0) {
        l.slack_start[t] = next;
        next += 4 * pts;
      }
    }
  }
  l.num_vars = next;
  return l;
}

const char* row_kind_name(RowKind kind) {
  switch (kind) {
    case RowKind::Trace: return "trace";
    case RowKind::Box: return "box";
    case RowKind::Epigraph: return "epigraph";
    case RowKind::ValidPixel: return "valid_pixel";
    case RowKind::FovArea: return "fov_area";
    case RowKind::FovSide: return "fov_side";
    case RowKind::SaliencyInclude: return "saliency_include";
    case RowKind::SlackNonneg: return "slack_nonneg";
  }
  return "unknown";
}

ProblemAccumulator::ProblemAccumulator(int num_vars) : num_vars_(num_vars) {
  q_ = Eigen::VectorXd::Zero(num_vars);
}

void ProblemAccumulator::add_quad(int i, int j, double v) {
  p_triplets_.emplace_back(i, j, v);
  if (i != j) p_triplets_.emplace_back(j, i, v);
}

void ProblemAccumulator::add_lin(int i, double v) { q_[i] += v; }

int ProblemAccumulator::add_row(RowKind kind, int frame, double lo, double hi) {
  const int r = static_cast<int>(row_info_.size());
  row_info_.push_back({kind, frame});
  lb_.push_back(lo);
  ub_.push_back(hi);
  return r;
}

void ProblemAccumulator::add_entry(int row, int col, double v) {
  if (v != 0.0) a_triplets_.emplace_back(row, col, v);
}

SparseQP ProblemAccumulator::finalize() const {
  SparseQP qp;
  qp.P.resize(num_vars_, num_vars_);
  qp.P.setFromTriplets(p_triplets_.begin(), p_triplets_.end());
  qp.P.makeCompressed();
  qp.q = q_;
  const int m = num_rows();
  qp.A.resize(m, num_vars_);
  qp.A.setFromTriplets(a_triplets_.begin(), a_triplets_.end());
  qp.A.makeCompressed();
  qp.lb = Eigen::Map<const Eigen::VectorXd>(lb_.data(), m);
  qp.ub = Eigen::Map<const Eigen::VectorXd>(ub_.data(), m);
  return qp;
}

void build_fidelity(const VariableLayout& layout, const std::vector<double>& w0,
                    ProblemAccumulator& acc) {
  if (static_cast<int>(w0.size()) != layout.n)
    throw LengthMismatch("build_fidelity: weight count mismatch");
  for (int t = layout.fixed; t < layout.n; ++t)
    for (int j = 0; j < 9; ++j) acc.add_quad(layout.p_index(t, j),
                                             layout.p_index(t, j), w0[t]);
}

void build_l1_epigraph(const std::vector<LogHomography>& f,
                       const VariableLayout& layout, double w1, double w2,
                       double w3, ProblemAccumulator& acc,
                       const std::vector<LogHomography>* pinned) {
  const int n = layout.n;
  if (static_cast<int>(f.size()) != n)
    throw LengthMismatch("build_l1_epigraph: increment count mismatch");
  if (layout.fixed > 0 &&
      (!pinned || static_cast<int>(pinned->size()) < layout.fixed))
    throw LengthMismatch("build_l1_epigraph: pin values missing");
  const double w[3] = {w1, w2, w3};
  for (int k = 0; k < 3; ++k) {
    if (layout.u_base[k] < 0) continue;
    const int count = n - (k + 1);
    for (int t = layout.u_first[k]; t < count; ++t) {
      for (int j = 0; j < 9; ++j) {
        // Coefficients of e_{k+1}(t) element j over corrections, plus the
        // constant contributed by the input increments.
        int pidx[4];
        double pco[4];
        int terms = 0;
        double cst = 0.0;
        switch (k) {
          case 0:
            pidx[0] = t + 1; pco[0] = 1.0;
            pidx[1] = t;     pco[1] = -1.0;
            terms = 2;
            cst = f[t + 1].v[j];
            break;
          case 1:
            pidx[0] = t + 2; pco[0] = 1.0;
            pidx[1] = t + 1; pco[1] = -2.0;
            pidx[2] = t;     pco[2] = 1.0;
            terms = 3;
            cst = f[t + 2].v[j] - f[t + 1].v[j];
            break;
          default:
            pidx[0] = t + 3; pco[0] = 1.0;
            pidx[1] = t + 2; pco[1] = -3.0;
            pidx[2] = t + 1; pco[2] = 3.0;
            pidx[3] = t;     pco[3] = -1.0;
            terms = 4;
            cst = f[t + 3].v[j] - 2.0 * f[t + 2].v[j] + f[t + 1].v[j];
            break;
        }
        const int u = layout.u_index(k, t, j);
        acc.add_lin(u, w[k]);
        // Pinned frames contribute constants, not coefficients.
        for (int i = 0; i < terms; ++i)
          if (pidx[i] < layout.fixed) cst += pco[i] * (*pinned)[pidx[i]].v[j];
        const int hi_row = acc.add_row(RowKind::Epigraph, t, -kInf, -cst);
        const int lo_row = acc.add_row(RowKind::Epigraph, t, -cst, kInf);
        for (int i = 0; i < terms; ++i) {
          if (pidx[i] < layout.fixed) continue;
          acc.add_entry(hi_row, layout.p_index(pidx[i], j), pco[i]);
          acc.add_entry(lo_row, layout.p_index(pidx[i], j), pco[i]);
        }
        acc.add_entry(hi_row, u, -1.0);
        acc.add_entry(lo_row, u, 1.0);
      }
    }
  }
}

void build_trace_and_bounds(const VariableLayout& layout,
                            const std::array<double, 9>& lo,
                            const std::array<double, 9>& hi,
                            ProblemAccumulator& acc) {
  for (int t = layout.fixed; t < layout.n; ++t) {
    const int r = acc.add_row(RowKind::Trace, t, 0.0, 0.0);
    acc.add_entry(r, layout.p_index(t, 0), 1.0);
    acc.add_entry(r, layout.p_index(t, 4), 1.0);
    acc.add_entry(r, layout.p_index(t, 8), 1.0);
    for (int j = 0; j < 9; ++j) {
      if (!std::isfinite(lo[j]) && !std::isfinite(hi[j])) continue;
      const int b = acc.add_row(RowKind::Box, t, lo[j], hi[j]);
      acc.add_entry(b, layout.p_index(t, j), 1.0);
    }
  }
}

void build_valid_pixel(const FrameGeometry& geom, const VariableLayout& layout,
                       ProblemAccumulator& acc) {
  const Eigen::Matrix<double, 8, 9> jac = corner_jacobian(geom.crop_window);
  const Vec8 c = geom.crop_window.to_vec();
  const double fx = std::abs(geom.frame_corners.corners[3].x);
  const double fy = std::abs(geom.frame_corners.corners[3].y);
  for (int t = layout.fixed; t < layout.n; ++t) {
    for (int i = 0; i < 8; ++i) {
      const double lim = (i % 2 == 0) ? fx : fy;
      const int r =
          acc.add_row(RowKind::ValidPixel, t, -lim - c[i], lim - c[i]);
      for (int j = 0; j < 9; ++j)
        acc.add_entry(r, layout.p_index(t, j), jac(i, j));
    }
  }
}

void build_fov(const FrameGeometry& geom, const VariableLayout& layout,
               ProblemAccumulator& acc) {
  const Eigen::Matrix<double, 8, 9> jac = corner_jacobian(geom.crop_window);
  const double shrink = 1.0 - geom.crop_fraction;

  const Vec8 ga = area_gradient(geom.crop_window);
  const Eigen::Matrix<double, 9, 1> area_row = jac.transpose() * ga;
  const double area_floor =
      shrink * shrink * quad_area(geom.frame_corners) -
      quad_area(geom.crop_window);

  const Eigen::Matrix<double, 4, 8> gs = sidelength_gradients(geom.crop_window);
  const std::array<double, 4> side_w = sidelengths(geom.crop_window);
  const std::array<double, 4> side_f = sidelengths(geom.frame_corners);
  Eigen::Matrix<double, 4, 9> side_rows;
  std::array<double, 4> side_floor;
  for (int e = 0; e < 4; ++e) {
    side_rows.row(e) = gs.row(e) * jac;
    side_floor[e] = shrink * side_f[e] - side_w[e];
  }

  for (int t = layout.fixed; t < layout.n; ++t) {
    const int r = acc.add_row(RowKind::FovArea, t, area_floor, kInf);
    for (int j = 0; j < 9; ++j)
      acc.add_entry(r, layout.p_index(t, j), area_row[j]);
    for (int e = 0; e < 4; ++e) {
      const int rs = acc.add_row(RowKind::FovSide, t, side_floor[e], kInf);
      for (int j = 0; j < 9; ++j)
        acc.add_entry(rs, layout.p_index(t, j), side_rows(e, j));
    }
  }
}

void build_distortion(const VariableLayout& layout, double w_diag,
                      double w_offdiag, ProblemAccumulator& acc) {
  for (int t = layout.fixed; t < layout.n; ++t) {
    const int i0 = layout.p_index(t, 0);
    const int i1 = layout.p_index(t, 1);
    const int i3 = layout.p_index(t, 3);
    const int i4 = layout.p_index(t, 4);
    if (w_diag > 0.0) {
      acc.add_quad(i0, i0, 2.0 * w_diag);
      acc.add_quad(i4, i4, 2.0 * w_diag);
      acc.add_quad(i0, i4, -2.0 * w_diag);
    }
    if (w_offdiag > 0.0) {
      acc.add_quad(i1, i1, 2.0 * w_offdiag);
      acc.add_quad(i3, i3, 2.0 * w_offdiag);
      acc.add_quad(i1, i3, 2.0 * w_offdiag);
    }
  }
}

Eigen::Vector2d estimate_keystone_ratio(const AnalysisPath& path) {
  Eigen::Vector2d r = Eigen::Vector2d::Zero();
  const int n = path.size();
  if (n < 8) return r;
  const int axes[2][2] = {{2, 6}, {5, 7}};
  for (int a = 0; a < 2; ++a) {
    const int ti = axes[a][0];
    const int ki = axes[a][1];
    double tt = 0.0, kt = 0.0, kk = 0.0;
    for (const LogHomography& f : path.f) {
      tt += f.v[ti] * f.v[ti];
      kt += f.v[ki] * f.v[ti];
      kk += f.v[ki] * f.v[ki];
    }
    if (tt < 1e-8) continue;
    const double slope = kt / tt;
    // Reject the fit when most of the keystone energy is unexplained.
    const double resid2 = kk - 2.0 * slope * kt + slope * slope * tt;
    if (kk > 1e-30 &&
        std::sqrt(std::max(resid2, 0.0)) > 0.5 * std::sqrt(kk)) {
      continue;
    }
    r[a] = slope;
  }
  return r;
}

void build_keystone_ratio(const VariableLayout& layout,
                          const Eigen::Vector2d& ratio, double weight,
                          ProblemAccumulator& acc) {
  if (weight <= 0.0) return;
  const int axes[2][2] = {{2, 6}, {5, 7}};
  for (int t = layout.fixed; t < layout.n; ++t) {
    for (int a = 0; a < 2; ++a) {
      const int ti = layout.p_index(t, axes[a][0]);
      const int ki = layout.p_index(t, axes[a][1]);
      const double rr = ratio[a];
      acc.add_quad(ki, ki, 2.0 * weight);
      if (rr != 0.0) {
        acc.add_quad(ti, ti, 2.0 * weight * rr * rr);
        acc.add_quad(ki, ti, -2.0 * weight * rr);
      }
    }
  }
}

void build_saliency_inclusion(const SaliencyTrack& track,
                              const FrameGeometry& geom,
                              const VariableLayout& layout, SaliencyMode mode,
                              double penalty, ProblemAccumulator& acc) {
  if (mode == SaliencyMode::Center) return;
  const double wx = std::abs(geom.crop_window.corners[3].x);
  const double wy = std::abs(geom.crop_window.corners[3].y);
  for (int t = layout.fixed; t < layout.n; ++t) {
    const int pts = saliency_points(track, t);
    for (int pi = 0; pi < pts; ++pi) {
      const Point2 s = track.points[t][pi];
      const Eigen::Matrix<double, 2, 9> jac = displacement_jacobian(s);
      const double lo[2] = {s.x - wx, s.y - wy};
      const double hi[2] = {s.x + wx, s.y + wy};
      for (int axis = 0; axis < 2; ++axis) {
        if (mode == SaliencyMode::HardInclude) {
          const int r =
              acc.add_row(RowKind::SaliencyInclude, t, lo[axis], hi[axis]);
          for (int j = 0; j < 9; ++j)
            acc.add_entry(r, layout.p_index(t, j), jac(axis, j));
        } else {
          // Soft: slack relaxes each side; inclusion holds up to the slack.
          const int s_lo = layout.slack_index(t, pi, 2 * axis);
          const int s_hi = layout.slack_index(t, pi, 2 * axis + 1);
          const int r_lo =
              acc.add_row(RowKind::SaliencyInclude, t, lo[axis], kInf);
          const int r_hi =
              acc.add_row(RowKind::SaliencyInclude, t, -kInf, hi[axis]);
          for (int j = 0; j < 9; ++j) {
            acc.add_entry(r_lo, layout.p_index(t, j), jac(axis, j));
            acc.add_entry(r_hi, layout.p_index(t, j), jac(axis, j));
          }
          acc.add_entry(r_lo, s_lo, 1.0);
          acc.add_entry(r_hi, s_hi, -1.0);
          acc.add_lin(s_lo, penalty);
          acc.add_lin(s_hi, penalty);
          const int nn_lo = acc.add_row(RowKind::SlackNonneg, t, 0.0, kInf);
          acc.add_entry(nn_lo, s_lo, 1.0);
          const int nn_hi = acc.add_row(RowKind::SlackNonneg, t, 0.0, kInf);
          acc.add_entry(nn_hi, s_hi, 1.0);
        }
      }
    }
  }
}

void build_centering(const SaliencyTrack& track, const VariableLayout& layout,
                     double weight, ProblemAccumulator& acc) {
  if (weight <= 0.0) return;
  for (int t = layout.fixed; t < layout.n; ++t) {
    if (saliency_points(track, t) == 0) continue;
    const Point2 m = mean_point(track.points[t]);
    Vec9 target = Vec9::Zero();
    target[2] = m.x;
    target[5] = m.y;
    for (int j = 0; j < 9; ++j) {
      const int idx = layout.p_index(t, j);
      acc.add_quad(idx, idx, 2.0 * weight);
      if (target[j] != 0.0) acc.add_lin(idx, -2.0 * weight * target[j]);
    }
  }
}

AssembledProblem assemble(const AnalysisPath& path, const FrameGeometry& geom,
                          const StabilizerConfig& cfg,
                          const std::vector<LogHomography>* fixed_prefix) {
  path.validate();
  geom.validate();
  const int n = path.size();
  cfg.validate(n);

  const int fixed = fixed_prefix ? static_cast<int>(fixed_prefix->size()) : 0;
  if (fixed >= n)
    throw LengthMismatch("assemble: fixed prefix must leave a free frame");

  AssembledProblem prob;
  prob.layout = VariableLayout::make(n, cfg, fixed);
  if (fixed_prefix) prob.pinned = *fixed_prefix;
  ProblemAccumulator acc(prob.layout.num_vars);

  build_fidelity(prob.layout, cfg.fidelity_weights(n), acc);
  if (cfg.w_diag > 0.0 || cfg.w_offdiag > 0.0)
    build_distortion(prob.layout, cfg.w_diag, cfg.w_offdiag, acc);
  prob.keystone_ratio = cfg.keystone_ratio_override
                            ? *cfg.keystone_ratio_override
                            : estimate_keystone_ratio(path);
  build_keystone_ratio(prob.layout, prob.keystone_ratio,
                       cfg.keystone_ratio_weight, acc);
  build_l1_epigraph(path.f, prob.layout, cfg.w1, cfg.w2, cfg.w3, acc,
                    fixed_prefix);
  build_trace_and_bounds(prob.layout, cfg.bound_lo, cfg.bound_hi, acc);
  build_valid_pixel(geom, prob.layout, acc);
  build_fov(geom, prob.layout, acc);
  if (cfg.saliency) {
    const double fx = std::abs(geom.frame_corners.corners[3].x);
    const double fy = std::abs(geom.frame_corners.corners[3].y);
    const auto& pts = cfg.saliency->points;
    for (int t = 0; t < n && t < static_cast<int>(pts.size()); ++t) {
      for (const Point2& s : pts[t]) {
        if (std::abs(s.x) > fx || std::abs(s.y) > fy)
          throw ConfigError("saliency point outside the frame at frame " +
                            std::to_string(t));
      }
    }
    if (cfg.saliency_mode == SaliencyMode::Center) {
      build_centering(*cfg.saliency, prob.layout, cfg.center_weight, acc);
    } else {
      build_saliency_inclusion(*cfg.saliency, geom, prob.layout,
                               cfg.saliency_mode, cfg.saliency_penalty, acc);
    }
  }
  prob.rows = acc.rows();
  prob.qp = acc.finalize();
  return prob;
}

ObjectiveBreakdown evaluate_objective(const AnalysisPath& path,
                                      const FrameGeometry& geom,
                                      const StabilizerConfig& cfg,
                                      const Eigen::Vector2d& keystone_ratio,
                                      const std::vector<LogHomography>& p) {
  const int n = path.size();
  if (static_cast<int>(p.size()) != n)
    throw LengthMismatch("evaluate_objective: correction count mismatch");
  ObjectiveBreakdown b;
  const auto w0 = cfg.fidelity_weights(n);
  for (int t = 0; t < n; ++t)
    b.fidelity += 0.5 * w0[t] * p[t].v.squaredNorm();
  const DerivativeTraces tr = derivatives(p, path.f);
  for (const Vec9& e : tr.e1) b.e1 += cfg.w1 * e.cwiseAbs().sum();
  for (const Vec9& e : tr.e2) b.e2 += cfg.w2 * e.cwiseAbs().sum();
  for (const Vec9& e : tr.e3) b.e3 += cfg.w3 * e.cwiseAbs().sum();
  for (int t = 0; t < n; ++t) {
    const Vec9& v = p[t].v;
    b.distortion += cfg.w_diag * (v[0] - v[4]) * (v[0] - v[4]) +
                    cfg.w_offdiag * (v[1] + v[3]) * (v[1] + v[3]);
    b.keystone +=
        cfg.keystone_ratio_weight *
        ((v[6] - keystone_ratio[0] * v[2]) * (v[6] - keystone_ratio[0] * v[2]) +
         (v[7] - keystone_ratio[1] * v[5]) * (v[7] - keystone_ratio[1] * v[5]));
  }
  if (cfg.saliency) {
    const SaliencyTrack& track = *cfg.saliency;
    if (cfg.saliency_mode == SaliencyMode::Center) {
      for (int t = 0; t < n; ++t) {
        if (saliency_points(track, t) == 0) continue;
        const Point2 m = mean_point(track.points[t]);
        Vec9 target = Vec9::Zero();
        target[2] = m.x;
        target[5] = m.y;
        b.centering += cfg.center_weight * (p[t].v - target).squaredNorm();
      }
    } else if (cfg.saliency_mode == SaliencyMode::SoftInclude) {
      const double wx = std::abs(geom.crop_window.corners[3].x);
      const double wy = std::abs(geom.crop_window.corners[3].y);
      for (int t = 0; t < n; ++t) {
        const int pts = saliency_points(track, t);
        for (int pi = 0; pi < pts; ++pi) {
          const Point2 s = track.points[t][pi];
          const Eigen::Vector2d moved =
              displacement_jacobian(s) * p[t].v;
          const double lo[2] = {s.x - wx, s.y - wy};
          const double hi[2] = {s.x + wx, s.y + wy};
          for (int axis = 0; axis < 2; ++axis) {
            const double v = moved[axis];
            b.saliency_slack += cfg.saliency_penalty *
                                (std::max(0.0, lo[axis] - v) +
                                 std::max(0.0, v - hi[axis]));
          }
        }
      }
    }
  }
  return b;
}

CorrectionPlan extract_plan(const AnalysisPath& path, const FrameGeometry& geom,
                            const StabilizerConfig& cfg,
                            const AssembledProblem& prob,
                            const QpSolution& sol) {
  if (sol.status != SolveStatus::Optimal) {
    throw NotOptimal("extract_plan: solver status is not Optimal");
  }
  const int n = path.size();
  CorrectionPlan plan;
  plan.crop_window = geom.crop_window;
  plan.log_corrections.reserve(n);
  plan.corrections.reserve(n);
  plan.inverse_corrections.reserve(n);
  for (int t = 0; t < n; ++t) {
    LogHomography p;
    p.v = prob.correction(sol.x, t);
    plan.log_corrections.push_back(p);
    const Homography h = exp_h(p);
    plan.corrections.push_back(h);
    plan.inverse_corrections.push_back(Homography{h.m.inverse()});
  }

  PlanDiagnostics& d = plan.diagnostics;
  d.traces = derivatives(plan.log_corrections, path.f);
  d.objective = evaluate_objective(path, geom, cfg, prob.keystone_ratio,
                                   plan.log_corrections);
  const Eigen::VectorXd ax = prob.qp.A * sol.x;
  for (std::size_t r = 0; r < prob.rows.size(); ++r) {
    ActiveConstraintCount& c = d.active[prob.rows[r].kind];
    c.total += 1;
    const double lo = prob.qp.lb[r];
    const double hi = prob.qp.ub[r];
    const bool at_lo = std::isfinite(lo) && std::abs(ax[r] - lo) <= kActiveTol;
    const bool at_hi = std::isfinite(hi) && std::abs(ax[r] - hi) <= kActiveTol;
    if (at_lo || at_hi) c.active += 1;
  }
  d.keystone_ratio = prob.keystone_ratio;
  d.status = sol.status;
  d.iterations = sol.iterations;
  d.primal_res = sol.primal_res;
  d.dual_res = sol.dual_res;
  d.num_windows = 1;
  d.max_problem_vars = prob.qp.num_vars();
  d.max_problem_rows = prob.qp.num_constraints();
  return plan;
}

}  // namespace cinestab
