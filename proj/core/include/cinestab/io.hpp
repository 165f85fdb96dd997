#pragma once

#include "cinestab/path.hpp"
#include "cinestab/problem.hpp"
#include "cinestab/synth.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace cinestab {

// All readers take the raw file text and throw ParseError (or the per-frame
// normalization errors, prefixed with the frame index) on bad input. JSON
// numbers are emitted with shortest-roundtrip formatting, so emit/parse pairs
// reproduce doubles exactly; infinite bounds serialize as null.

struct PixelSize {
  double width = 0.0;
  double height = 0.0;
};

struct TrajectoryData {
  AnalysisPath path;
  // Set when the input was in pixel coordinates; plan output then also
  // reports the crop window in pixels.
  std::optional<PixelSize> pixel_size;
};

// Trajectory file: {"version": 1, "coordinates": "normalized" | "pixels",
//  "aspect": a | "width": w, "height": h, "frames": [[9 row-major], ...]}.
// Frame t's matrix maps frame t coordinates to frame t-1 coordinates.
// Pixel-coordinate input (center origin, y up, units of pixels) is conjugated
// into normalized coordinates by the uniform scale 2/width.
TrajectoryData parse_trajectory(const std::string& text);

// Normalized-coordinate trajectory of the exponentials of path.f.
std::string emit_trajectory(const AnalysisPath& path);

// Saliency file: a top-level array with one entry per frame, each null or a
// list of [x, y] points in normalized coordinates.
SaliencyTrack parse_saliency(const std::string& text);

// Synthetic-path file: {"seed": u64, "aspect": a,
//  "jitter_sigma": s | [9 values],
//  "segments": [{"frames": n, "kind": "static" | "constant_velocity" |
//                "constant_acceleration",
//                "rate": [9] | "translation": [dx, dy]}, ...]}.
SynthSpec parse_synth_spec(const std::string& text);

// Full plan report: corrections (forward, inverse and log), the crop window
// in normalized and, when known, pixel coordinates, the effective config
// (including the keystone ratio the solve used), diagnostics and quality.
std::string emit_plan_json(const CorrectionPlan& plan,
                           const StabilizerConfig& cfg,
                           const QualityReport& quality,
                           const std::optional<PixelSize>& pixel_size);

// Reads back the geometry and the three correction sequences of a plan file.
// Diagnostics, config echo and quality are not reconstructed.
CorrectionPlan parse_plan(const std::string& text);

// Per-frame table, 55 columns: frame, input increment f0-f8, correction
// p0-p8, stabilized increment s0-s8 (f_t + p_t - p_{t-1}), then |e1|, |e2|,
// |e3| per element, zero-padded on the trailing frames where a difference
// does not exist. Values print as %.17g.
std::string emit_plan_csv(const CorrectionPlan& plan, const AnalysisPath& path);

std::string read_file(const std::string& file_path);  // throws IoError
void write_file(const std::string& file_path, const std::string& content);

struct PipelineOptions {
  std::string trajectory_path;  // exactly one of trajectory_path / synth_path
  std::string synth_path;
  std::string saliency_path;  // optional
  std::string out_json = "-";  // "-" writes the plan JSON to the out stream
  std::string out_csv;         // optional
  std::string dump_qp_path;    // optional; dumps the whole-path QP
  bool global_solve = false;   // bypass windowing
  std::optional<std::uint64_t> seed_override;  // replaces the synth spec seed
  StabilizerConfig cfg;
};

// Runs parse -> solve -> report. Returns a process exit code and prints
// "error[category]: message" to err on failure:
//   0 success
//   2 unreadable or malformed input (io/parse, including log-domain and
//     determinant failures while decoding frames)
//   3 infeasible constraints
//   4 solver failure
//   5 invalid configuration
int run_pipeline(const PipelineOptions& opts, std::ostream& out,
                 std::ostream& err);

}  // namespace cinestab
