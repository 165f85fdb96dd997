#pragma once

#include "cinestab/path.hpp"
#include "cinestab/qp.hpp"

#include <array>
#include <map>
#include <optional>
#include <vector>

namespace cinestab {

// How salient points influence the solve:
//  * HardInclude: inclusion rows are hard constraints (may be infeasible).
//  * SoftInclude: inclusion rows get nonnegative slacks with a linear penalty.
//  * Center: no inclusion rows; a quadratic objective pulls the correction
//    toward the pure translation whose inverse recenters the salient point.
enum class SaliencyMode { HardInclude, SoftInclude, Center };

// Per-frame salient points in normalized coordinates. Frames beyond
// points.size() (or with an empty list) contribute no terms.
struct SaliencyTrack {
  std::vector<std::vector<Point2>> points;
};

struct WindowParams {
  int l_w = 1800;  // window length
  int l_s = 1500;  // frames fixed per window
};

struct StabilizerConfig {
  // Objective weights: fidelity, and L1 weights of the first, second and
  // third path derivatives.
  double w0 = 1.0;
  std::vector<double> w0_per_frame;  // optional override, size n when set
  double w1 = 10.0;
  double w2 = 1.0;
  double w3 = 100.0;

  double crop_fraction = 0.2;
  // Extra sidelength the crop window keeps above the FOV floor; headroom the
  // solver may spend on corrections that shrink the visible region.
  double window_margin = 0.05;

  // Per-element box bounds on the correction log. Index 8 is unconstrained
  // (pinned by the trace-zero rows instead).
  std::array<double, 9> bound_lo;
  std::array<double, 9> bound_hi;

  // Distortion control: quadratic penalties on asymmetric diagonal scale and
  // on non-skew-symmetric off-diagonals of the affine block.
  double w_diag = 10.0;
  double w_offdiag = 10.0;

  // Keystone-to-translation coupling penalty. The per-axis ratio is estimated
  // from the input increments unless overridden (window solves pass the
  // globally estimated value through the override).
  double keystone_ratio_weight = 10.0;
  std::optional<Eigen::Vector2d> keystone_ratio_override;

  std::optional<SaliencyTrack> saliency;
  SaliencyMode saliency_mode = SaliencyMode::SoftInclude;
  double saliency_penalty = 50.0;  // linear cost per unit of inclusion slack
  double center_weight = 100.0;    // quadratic centering weight

  WindowParams window;
  SolverSettings solver;
  double tau = 1e-4;  // |derivative| threshold used by quality reports

  StabilizerConfig();
  static std::array<double, 9> default_bound_lo();
  static std::array<double, 9> default_bound_hi();

  // Resolves w0/w0_per_frame to one value per frame.
  std::vector<double> fidelity_weights(int n) const;

  // Throws ConfigError / InvalidFraction / BadWindowParams on violations.
  void validate(int n) const;
};

// Variable order: 9 correction elements per free frame, then epigraph
// variables for each enabled derivative order, then saliency slacks (4 per
// point, soft mode). The first `fixed` frames are pinned to known values
// (window overlap) and own no variables at all; builders substitute the pin
// values as constants. Index accessors are only valid for free frames /
// differences that touch a free frame.
struct VariableLayout {
  int n = 0;
  int fixed = 0;  // leading pinned frames without variables
  int p_base = 0;
  std::array<int, 3> u_base{-1, -1, -1};
  // First difference index of each order that involves a free frame; earlier
  // differences are fully determined by the pins and carry no variables.
  std::array<int, 3> u_first{0, 0, 0};
  std::array<int, 3> u_count{0, 0, 0};
  int slack_base = -1;
  std::vector<int> slack_start;  // per frame; -1 when the frame has no slacks
  int num_vars = 0;

  int p_index(int t, int j) const { return p_base + 9 * (t - fixed) + j; }
  // k = 0, 1, 2 selects the e1/e2/e3 block; t indexes the difference, j the
  // matrix element.
  int u_index(int k, int t, int j) const {
    return u_base[k] + 9 * (t - u_first[k]) + j;
  }
  int slack_index(int t, int point, int which) const {
    return slack_start[t] + 4 * point + which;
  }

  static VariableLayout make(int n, const StabilizerConfig& cfg,
                             int fixed = 0);
};

enum class RowKind {
  Trace,
  Box,
  Epigraph,
  ValidPixel,
  FovArea,
  FovSide,
  SaliencyInclude,
  SlackNonneg,
};

const char* row_kind_name(RowKind kind);

struct RowInfo {
  RowKind kind;
  int frame;
};

// Collects quadratic/linear objective terms and constraint rows, then bakes
// them into a SparseQP. add_quad(i, j, v) adds v to P(i,j) (mirrored when
// i != j), i.e. v*x_i*x_j enters the objective as written for i != j and as
// 0.5*v*x_i^2 on the diagonal.
class ProblemAccumulator {
 public:
  explicit ProblemAccumulator(int num_vars);

  void add_quad(int i, int j, double v);
  void add_lin(int i, double v);
  int add_row(RowKind kind, int frame, double lo, double hi);
  void add_entry(int row, int col, double v);

  int num_vars() const { return num_vars_; }
  int num_rows() const { return static_cast<int>(row_info_.size()); }
  const std::vector<RowInfo>& rows() const { return row_info_; }

  SparseQP finalize() const;

 private:
  int num_vars_;
  std::vector<Eigen::Triplet<double>> p_triplets_;
  Eigen::VectorXd q_;
  std::vector<Eigen::Triplet<double>> a_triplets_;
  std::vector<double> lb_, ub_;
  std::vector<RowInfo> row_info_;
};

// Individual objective/constraint builders. All take the layout so tests can
// assemble any subset into a standalone QP. Every builder contributes terms
// and rows only for free frames (t >= layout.fixed); pinned frames have no
// variables to reference.

// 0.5 * w0[t] * ||p_t||^2.
void build_fidelity(const VariableLayout& layout, const std::vector<double>& w0,
                    ProblemAccumulator& acc);

// Epigraph encoding of w1*||e1||_1 + w2*||e2||_1 + w3*||e3||_1. For every
// derivative component two rows bound it by its slack variable u; the u cost
// is linear. Orders with zero weight (or too few frames) are skipped entirely.
// Differences reaching into the pinned prefix fold the pin values (from
// `pinned`, required when layout.fixed > 0) into the row constants;
// differences entirely inside the prefix are constants and are dropped.
void build_l1_epigraph(const std::vector<LogHomography>& f,
                       const VariableLayout& layout, double w1, double w2,
                       double w3, ProblemAccumulator& acc,
                       const std::vector<LogHomography>* pinned = nullptr);

// Per-frame trace(p_t) = 0 equality plus element box rows for finite bounds.
void build_trace_and_bounds(const VariableLayout& layout,
                            const std::array<double, 9>& lo,
                            const std::array<double, 9>& hi,
                            ProblemAccumulator& acc);

// Linearized containment of the transformed crop window in the frame:
// each window corner, displaced by the correction, stays inside the frame
// rectangle (two-sided row per corner coordinate).
void build_valid_pixel(const FrameGeometry& geom, const VariableLayout& layout,
                       ProblemAccumulator& acc);

// Linearized FOV floor: transformed window area at least
// (1-crop_fraction)^2 of the frame area, each side length at least
// (1-crop_fraction) of the matching frame side.
void build_fov(const FrameGeometry& geom, const VariableLayout& layout,
               ProblemAccumulator& acc);

// w_diag*(p0-p4)^2 + w_offdiag*(p1+p3)^2 per frame.
void build_distortion(const VariableLayout& layout, double w_diag,
                      double w_offdiag, ProblemAccumulator& acc);

// Per-axis least-squares slope of keystone against translation over the input
// increments: R = sum(k*t) / sum(t^2), zeroed when sum(t^2) < 1e-8, when the
// relative residual exceeds 0.5, or when fewer than 8 frames are available.
Eigen::Vector2d estimate_keystone_ratio(const AnalysisPath& path);

// weight * ((p6 - Rx*p2)^2 + (p7 - Ry*p5)^2) per frame. With R = 0 this is a
// direct keystone penalty.
void build_keystone_ratio(const VariableLayout& layout,
                          const Eigen::Vector2d& ratio, double weight,
                          ProblemAccumulator& acc);

// Keeps each salient point, moved by the inverse correction (linearized as
// s - grad_d(0, s) p), inside the crop window. Soft mode adds a nonnegative
// slack per row side with a linear penalty.
void build_saliency_inclusion(const SaliencyTrack& track,
                              const FrameGeometry& geom,
                              const VariableLayout& layout, SaliencyMode mode,
                              double penalty, ProblemAccumulator& acc);

// weight * ||p_t - p_target||^2 where p_target is the log of the pure
// translation whose inverse moves the frame's mean salient point to the
// origin (translation entries equal to the mean point coordinates).
void build_centering(const SaliencyTrack& track, const VariableLayout& layout,
                     double weight, ProblemAccumulator& acc);

struct AssembledProblem {
  SparseQP qp;
  VariableLayout layout;
  std::vector<RowInfo> rows;
  // Pin values for the leading layout.fixed frames (empty otherwise).
  std::vector<LogHomography> pinned;
  Eigen::Vector2d keystone_ratio = Eigen::Vector2d::Zero();

  // Correction of frame t: the pin value for pinned frames, the solution
  // segment otherwise.
  Vec9 correction(const Eigen::VectorXd& x, int t) const {
    if (t < layout.fixed) return pinned[t].v;
    return x.segment<9>(layout.p_index(t, 0));
  }
};

// Builds the full QP for the given path. When fixed_prefix is non-null its
// entries pin that many leading frames (window overlap). Pinned frames are
// eliminated by substitution: they own no variables or rows, and their values
// enter only as constants in the difference rows that straddle the boundary.
// Representing pins as equality rows instead would duplicate constraints the
// previous window solved exactly at a bound and leave the solver a
// rank-deficient or knife-edge set to fight. The prefix must leave at least
// one free frame.
AssembledProblem assemble(const AnalysisPath& path, const FrameGeometry& geom,
                          const StabilizerConfig& cfg,
                          const std::vector<LogHomography>* fixed_prefix = nullptr);

struct ObjectiveBreakdown {
  double fidelity = 0, e1 = 0, e2 = 0, e3 = 0;
  double distortion = 0, keystone = 0, centering = 0, saliency_slack = 0;
  double total() const {
    return fidelity + e1 + e2 + e3 + distortion + keystone + centering +
           saliency_slack;
  }
};

struct ActiveConstraintCount {
  int active = 0;
  int total = 0;
};

struct PlanDiagnostics {
  DerivativeTraces traces;
  ObjectiveBreakdown objective;
  std::map<RowKind, ActiveConstraintCount> active;
  Eigen::Vector2d keystone_ratio = Eigen::Vector2d::Zero();
  SolveStatus status = SolveStatus::Optimal;
  int iterations = 0;
  double primal_res = 0, dual_res = 0;
  int num_windows = 1;
  int max_problem_vars = 0, max_problem_rows = 0;
};

struct CorrectionPlan {
  std::vector<LogHomography> log_corrections;
  std::vector<Homography> corrections;
  std::vector<Homography> inverse_corrections;
  CornerSet crop_window;
  PlanDiagnostics diagnostics;
};

// Evaluates every objective term directly from the corrections (saliency slack
// as the linearized inclusion violation, which the optimal slacks equal).
ObjectiveBreakdown evaluate_objective(const AnalysisPath& path,
                                      const FrameGeometry& geom,
                                      const StabilizerConfig& cfg,
                                      const Eigen::Vector2d& keystone_ratio,
                                      const std::vector<LogHomography>& p);

// Turns an Optimal solution into a plan (exponentiated corrections, exact
// inverses, derivative traces, active-constraint and objective diagnostics).
// Throws NotOptimal for any other status.
CorrectionPlan extract_plan(const AnalysisPath& path, const FrameGeometry& geom,
                            const StabilizerConfig& cfg,
                            const AssembledProblem& prob,
                            const QpSolution& sol);

}  // namespace cinestab
