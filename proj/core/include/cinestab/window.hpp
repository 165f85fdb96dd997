#pragma once

#include "cinestab/path.hpp"
#include "cinestab/problem.hpp"

#include <vector>

namespace cinestab {

// Half-open span of frames solved as one subproblem. The first fixed_prefix
// frames are pinned to corrections already committed by the previous span;
// the first fix_count frames of the span's solution become final.
struct WindowSpan {
  int start = 0;
  int end = 0;
  int fixed_prefix = 0;
  int fix_count = 0;
};

struct WindowSchedule {
  int l_w = 0;
  int l_s = 0;
  std::vector<WindowSpan> spans;
};

// Splits n frames into overlapping spans at most l_w long, committing l_s
// frames per span. Consecutive spans overlap by three frames (pinned in the
// later span) so third differences stay consistent across the seam.
// Requires l_s >= 4 and l_s < l_w; throws BadWindowParams otherwise.
WindowSchedule make_schedule(int n, int l_w, int l_s);

// Solves the whole path as a single problem, ignoring cfg.window.
// Throws InfeasibleSaliency when hard saliency inclusion is infeasible,
// SolverFailure when the solver stops without an optimal point.
CorrectionPlan solve_global(const AnalysisPath& path, const FrameGeometry& geom,
                            const StabilizerConfig& cfg);

// Solves spans per cfg.window in order and stitches the committed segments
// into one plan. The keystone ratio is estimated once over the full path so
// every span penalizes the same coupling. Equivalent to solve_global when the
// path fits in one window.
CorrectionPlan solve_windowed(const AnalysisPath& path,
                              const FrameGeometry& geom,
                              const StabilizerConfig& cfg);

}  // namespace cinestab
