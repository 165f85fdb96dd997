#include "cinestab/window.hpp"

#include "cinestab/errors.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace cinestab {

namespace {

constexpr int kOverlap = 3;  // frames shared between consecutive spans

bool has_saliency(const StabilizerConfig& cfg, int start, int end) {
  if (!cfg.saliency) return false;
  const auto& pts = cfg.saliency->points;
  const int hi = std::min<int>(end, static_cast<int>(pts.size()));
  for (int t = start; t < hi; ++t)
    if (!pts[t].empty()) return true;
  return false;
}

[[noreturn]] void throw_for_status(SolveStatus status,
                                   const StabilizerConfig& cfg, int start,
                                   int end) {
  const std::string range =
      "frames [" + std::to_string(start) + ", " + std::to_string(end) + ")";
  if (status == SolveStatus::Infeasible) {
    if (cfg.saliency_mode == SaliencyMode::HardInclude &&
        has_saliency(cfg, start, end)) {
      throw InfeasibleSaliency(
          "hard saliency inclusion is infeasible over " + range);
    }
    throw WindowInfeasible("constraints are infeasible over " + range);
  }
  throw SolverFailure("solver stopped before reaching tolerance over " + range);
}

CorrectionPlan identity_plan(const AnalysisPath& path,
                             const FrameGeometry& geom,
                             const StabilizerConfig& cfg) {
  CorrectionPlan plan;
  plan.crop_window = geom.crop_window;
  const int n = path.size();
  plan.log_corrections.assign(n, LogHomography::zero());
  plan.corrections.assign(n, Homography{});
  plan.inverse_corrections.assign(n, Homography{});
  PlanDiagnostics& d = plan.diagnostics;
  d.traces = derivatives(plan.log_corrections, path.f);
  const Eigen::Vector2d ratio = cfg.keystone_ratio_override
                                    ? *cfg.keystone_ratio_override
                                    : estimate_keystone_ratio(path);
  d.objective =
      evaluate_objective(path, geom, cfg, ratio, plan.log_corrections);
  d.keystone_ratio = ratio;
  d.status = SolveStatus::Optimal;
  d.num_windows = 1;
  return plan;
}

}  // namespace

WindowSchedule make_schedule(int n, int l_w, int l_s) {
  if (n < 1) throw BadWindowParams("make_schedule: needs at least one frame");
  if (l_s < 4) throw BadWindowParams("make_schedule: l_s must be >= 4");
  if (l_s >= l_w) throw BadWindowParams("make_schedule: l_s must be < l_w");
  WindowSchedule sched;
  sched.l_w = l_w;
  sched.l_s = l_s;
  int start = 0;
  int prefix = 0;
  for (;;) {
    WindowSpan span;
    span.start = start;
    span.end = std::min(start + l_w, n);
    span.fixed_prefix = prefix;
    if (span.end == n) {
      span.fix_count = span.end - span.start;
      sched.spans.push_back(span);
      break;
    }
    span.fix_count = l_s;
    sched.spans.push_back(span);
    start += l_s - kOverlap;
    prefix = kOverlap;
    // Unreachable while l_s < l_w (the remainder is then always at least
    // l_w - l_s + 4 frames), kept as a guard: a tail too short to carry
    // third differences past the pinned prefix folds into the last span.
    if (n - start < kOverlap + 1) {
      sched.spans.back().end = n;
      sched.spans.back().fix_count = n - sched.spans.back().start;
      break;
    }
  }
  return sched;
}

CorrectionPlan solve_global(const AnalysisPath& path, const FrameGeometry& geom,
                            const StabilizerConfig& cfg) {
  const int n = path.size();
  if (n == 1 && !has_saliency(cfg, 0, 1)) {
    path.validate();
    geom.validate();
    cfg.validate(n);
    return identity_plan(path, geom, cfg);
  }
  const AssembledProblem prob = assemble(path, geom, cfg);
  const QpSolution sol = solve(prob.qp, cfg.solver);
  if (sol.status != SolveStatus::Optimal)
    throw_for_status(sol.status, cfg, 0, n);
  return extract_plan(path, geom, cfg, prob, sol);
}

CorrectionPlan solve_windowed(const AnalysisPath& path,
                              const FrameGeometry& geom,
                              const StabilizerConfig& cfg) {
  path.validate();
  geom.validate();
  const int n = path.size();
  cfg.validate(n);
  const WindowSchedule sched =
      make_schedule(n, cfg.window.l_w, cfg.window.l_s);
  if (sched.spans.size() == 1) return solve_global(path, geom, cfg);

  const Eigen::Vector2d ratio = cfg.keystone_ratio_override
                                    ? *cfg.keystone_ratio_override
                                    : estimate_keystone_ratio(path);
  const std::vector<double> w0 = cfg.fidelity_weights(n);

  std::vector<LogHomography> committed(n);
  PlanDiagnostics agg;
  agg.num_windows = static_cast<int>(sched.spans.size());

  for (const WindowSpan& span : sched.spans) {
    AnalysisPath sub;
    sub.frame_aspect = path.frame_aspect;
    sub.f.assign(path.f.begin() + span.start, path.f.begin() + span.end);

    StabilizerConfig wcfg = cfg;
    wcfg.keystone_ratio_override = ratio;
    wcfg.w0_per_frame.assign(w0.begin() + span.start, w0.begin() + span.end);
    if (cfg.saliency) {
      SaliencyTrack slice;
      slice.points.resize(span.end - span.start);
      const auto& pts = cfg.saliency->points;
      for (int t = span.start; t < span.end; ++t) {
        if (t < static_cast<int>(pts.size()))
          slice.points[t - span.start] = pts[t];
      }
      wcfg.saliency = std::move(slice);
    }

    std::vector<LogHomography> prefix;
    const std::vector<LogHomography>* prefix_ptr = nullptr;
    if (span.fixed_prefix > 0) {
      prefix.assign(committed.begin() + span.start,
                    committed.begin() + span.start + span.fixed_prefix);
      prefix_ptr = &prefix;
    }

    const AssembledProblem prob = assemble(sub, geom, wcfg, prefix_ptr);
    const QpSolution sol = solve(prob.qp, cfg.solver);
    if (sol.status != SolveStatus::Optimal)
      throw_for_status(sol.status, cfg, span.start, span.end);
    const CorrectionPlan wp = extract_plan(sub, geom, wcfg, prob, sol);

    for (int t = span.fixed_prefix; t < span.fix_count; ++t)
      committed[span.start + t] = wp.log_corrections[t];

    agg.iterations += wp.diagnostics.iterations;
    agg.primal_res = std::max(agg.primal_res, wp.diagnostics.primal_res);
    agg.dual_res = std::max(agg.dual_res, wp.diagnostics.dual_res);
    agg.max_problem_vars =
        std::max(agg.max_problem_vars, wp.diagnostics.max_problem_vars);
    agg.max_problem_rows =
        std::max(agg.max_problem_rows, wp.diagnostics.max_problem_rows);
    for (const auto& [kind, count] : wp.diagnostics.active) {
      agg.active[kind].active += count.active;
      agg.active[kind].total += count.total;
    }
  }

  CorrectionPlan plan;
  plan.crop_window = geom.crop_window;
  plan.log_corrections = std::move(committed);
  plan.corrections.reserve(n);
  plan.inverse_corrections.reserve(n);
  for (const LogHomography& p : plan.log_corrections) {
    const Homography h = exp_h(p);
    plan.corrections.push_back(h);
    plan.inverse_corrections.push_back(Homography{h.m.inverse()});
  }
  agg.traces = derivatives(plan.log_corrections, path.f);
  agg.objective =
      evaluate_objective(path, geom, cfg, ratio, plan.log_corrections);
  agg.keystone_ratio = ratio;
  agg.status = SolveStatus::Optimal;
  plan.diagnostics = std::move(agg);
  return plan;
}

}  // namespace cinestab
