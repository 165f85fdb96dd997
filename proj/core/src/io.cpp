#include "cinestab/io.hpp"

#include "cinestab/errors.hpp"
#include "cinestab/qp.hpp"
#include "cinestab/window.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

namespace cinestab {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ParseError(std::string(what) + ": not valid JSON");
  return j;
}

const json& require(const json& j, const char* key, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ParseError(what + ": missing field '" + key + "'");
  return *it;
}

double require_number(const json& j, const char* key, const std::string& what) {
  const json& v = require(j, key, what);
  if (!v.is_number())
    throw ParseError(what + ": field '" + key + "' must be a number");
  return v.get<double>();
}

Vec9 parse_vec9(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 9)
    throw ParseError(what + ": expected an array of 9 numbers");
  Vec9 out;
  for (int i = 0; i < 9; ++i) {
    if (!v[i].is_number())
      throw ParseError(what + ": entry " + std::to_string(i) +
                       " is not a number");
    out[i] = v[i].get<double>();
  }
  return out;
}

Eigen::Matrix3d matrix_from_rowmajor(const Vec9& v) {
  Eigen::Matrix3d m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return m;
}

json rowmajor_array(const Eigen::Matrix3d& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

json vec9_array(const Vec9& v) {
  json a = json::array();
  for (int i = 0; i < 9; ++i) a.push_back(v[i]);
  return a;
}

json corners_array(const CornerSet& c, double scale) {
  json a = json::array();
  for (const Point2& p : c.corners)
    a.push_back(json::array({p.x * scale, p.y * scale}));
  return a;
}

json bound_array(const std::array<double, 9>& b) {
  // JSON has no infinities; unbounded entries serialize as null.
  json a = json::array();
  for (double v : b) {
    if (std::isfinite(v))
      a.push_back(v);
    else
      a.push_back(nullptr);
  }
  return a;
}

const char* mode_name(SaliencyMode m) {
  switch (m) {
    case SaliencyMode::HardInclude: return "hard";
    case SaliencyMode::SoftInclude: return "soft";
    case SaliencyMode::Center: return "center";
  }
  return "soft";
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TrajectoryData parse_trajectory(const std::string& text) {
  const json j = parse_json(text, "trajectory");
  if (!j.is_object())
    throw ParseError("trajectory: top level must be an object");
  const json& ver = require(j, "version", "trajectory");
  if (!ver.is_number_integer() || ver.get<int>() != 1)
    throw ParseError("trajectory: unsupported version");
  const json& coords = require(j, "coordinates", "trajectory");
  if (!coords.is_string())
    throw ParseError("trajectory: 'coordinates' must be a string");
  const std::string mode = coords.get<std::string>();

  TrajectoryData out;
  Eigen::Matrix3d norm = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d norm_inv = Eigen::Matrix3d::Identity();
  bool conjugate = false;
  if (mode == "normalized") {
    const double aspect = require_number(j, "aspect", "trajectory");
    if (!(aspect > 0.0))
      throw ParseError("trajectory: aspect must be positive");
    out.path.frame_aspect = aspect;
  } else if (mode == "pixels") {
    const double w = require_number(j, "width", "trajectory");
    const double h = require_number(j, "height", "trajectory");
    if (!(w > 0.0) || !(h > 0.0))
      throw ParseError("trajectory: width and height must be positive");
    out.path.frame_aspect = h / w;
    out.pixel_size = PixelSize{w, h};
    const double s = 2.0 / w;
    norm.diagonal() << s, s, 1.0;
    norm_inv.diagonal() << 1.0 / s, 1.0 / s, 1.0;
    conjugate = true;
  } else {
    throw ParseError("trajectory: coordinates must be 'normalized' or 'pixels'");
  }

  const json& frames = require(j, "frames", "trajectory");
  if (!frames.is_array() || frames.empty())
    throw ParseError("trajectory: 'frames' must be a non-empty array");
  out.path.f.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const std::string what = "trajectory frame " + std::to_string(t);
    Eigen::Matrix3d m = matrix_from_rowmajor(parse_vec9(frames[t], what));
    if (conjugate) m = norm * m * norm_inv;
    try {
      out.path.f.push_back(log_h(normalize_det1(m)));
    } catch (const NonPositiveDeterminant& e) {
      throw NonPositiveDeterminant(what + ": " + e.what());
    } catch (const LogDomain& e) {
      throw LogDomain(what + ": " + e.what());
    }
  }
  return out;
}

std::string emit_trajectory(const AnalysisPath& path) {
  json j;
  j["version"] = 1;
  j["coordinates"] = "normalized";
  j["aspect"] = path.frame_aspect;
  json frames = json::array();
  for (const LogHomography& f : path.f)
    frames.push_back(rowmajor_array(exp_h(f).m));
  j["frames"] = std::move(frames);
  return j.dump(2) + "\n";
}

SaliencyTrack parse_saliency(const std::string& text) {
  const json j = parse_json(text, "saliency");
  if (!j.is_array())
    throw ParseError("saliency: top level must be an array, one entry per frame");
  SaliencyTrack track;
  track.points.reserve(j.size());
  for (std::size_t t = 0; t < j.size(); ++t) {
    const std::string what = "saliency frame " + std::to_string(t);
    std::vector<Point2> pts;
    const json& e = j[t];
    if (e.is_null()) {
      track.points.push_back(std::move(pts));
      continue;
    }
    if (!e.is_array())
      throw ParseError(what + ": expected null or an array of [x, y] points");
    for (const json& q : e) {
      if (!q.is_array() || q.size() != 2 || !q[0].is_number() ||
          !q[1].is_number())
        throw ParseError(what + ": points must be [x, y] pairs");
      pts.push_back({q[0].get<double>(), q[1].get<double>()});
    }
    track.points.push_back(std::move(pts));
  }
  return track;
}

SynthSpec parse_synth_spec(const std::string& text) {
  const json j = parse_json(text, "synth spec");
  if (!j.is_object())
    throw ParseError("synth spec: top level must be an object");
  SynthSpec spec;
  if (j.contains("seed")) {
    const json& s = j["seed"];
    if (!s.is_number_integer() && !s.is_number_unsigned())
      throw ParseError("synth spec: 'seed' must be an integer");
    if (s.is_number_integer() && s.get<std::int64_t>() < 0)
      throw ParseError("synth spec: 'seed' must be non-negative");
    spec.seed = s.get<std::uint64_t>();
  }
  if (j.contains("aspect"))
    spec.aspect = require_number(j, "aspect", "synth spec");
  if (j.contains("jitter_sigma")) {
    const json& s = j["jitter_sigma"];
    if (s.is_number()) {
      spec.jitter_sigma.fill(s.get<double>());
      spec.jitter_sigma[8] = 0.0;
    } else if (s.is_array()) {
      const Vec9 v = parse_vec9(s, "synth spec jitter_sigma");
      for (int i = 0; i < 9; ++i) spec.jitter_sigma[i] = v[i];
    } else {
      throw ParseError(
          "synth spec: 'jitter_sigma' must be a number or an array of 9");
    }
  }
  const json& segs = require(j, "segments", "synth spec");
  if (!segs.is_array() || segs.empty())
    throw ParseError("synth spec: 'segments' must be a non-empty array");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string what = "synth segment " + std::to_string(i);
    const json& e = segs[i];
    if (!e.is_object()) throw ParseError(what + ": expected an object");
    SynthSegment seg;
    const json& fr = require(e, "frames", what);
    if (!fr.is_number_integer() || fr.get<int>() < 1)
      throw ParseError(what + ": 'frames' must be a positive integer");
    seg.frames = fr.get<int>();
    const json& kind = require(e, "kind", what);
    const std::string k = kind.is_string() ? kind.get<std::string>() : "";
    if (k == "static") {
      seg.kind = MotionKind::Static;
    } else if (k == "constant_velocity") {
      seg.kind = MotionKind::ConstantVelocity;
    } else if (k == "constant_acceleration") {
      seg.kind = MotionKind::ConstantAcceleration;
    } else {
      throw ParseError(what +
                       ": 'kind' must be static, constant_velocity or "
                       "constant_acceleration");
    }
    const bool has_rate = e.contains("rate");
    const bool has_trans = e.contains("translation");
    if (has_rate && has_trans)
      throw ParseError(what + ": give 'rate' or 'translation', not both");
    if (has_rate) {
      seg.rate = parse_vec9(e["rate"], what + " rate");
    } else if (has_trans) {
      const json& tr = e["translation"];
      if (!tr.is_array() || tr.size() != 2 || !tr[0].is_number() ||
          !tr[1].is_number())
        throw ParseError(what + ": 'translation' must be [dx, dy]");
      seg.rate[2] = tr[0].get<double>();
      seg.rate[5] = tr[1].get<double>();
    }
    spec.segments.push_back(seg);
  }
  return spec;
}

std::string emit_plan_json(const CorrectionPlan& plan,
                           const StabilizerConfig& cfg,
                           const QualityReport& quality,
                           const std::optional<PixelSize>& pixel_size) {
  json j;
  j["version"] = 1;
  j["frames"] = plan.log_corrections.size();

  json win;
  win["normalized"] = corners_array(plan.crop_window, 1.0);
  if (pixel_size)
    win["pixels"] = corners_array(plan.crop_window, pixel_size->width / 2.0);
  else
    win["pixels"] = nullptr;
  j["crop_window"] = std::move(win);

  json cor = json::array(), inv = json::array(), logs = json::array();
  for (std::size_t t = 0; t < plan.log_corrections.size(); ++t) {
    cor.push_back(rowmajor_array(plan.corrections[t].m));
    inv.push_back(rowmajor_array(plan.inverse_corrections[t].m));
    logs.push_back(vec9_array(plan.log_corrections[t].v));
  }
  j["corrections"] = std::move(cor);
  j["inverse_corrections"] = std::move(inv);
  j["log_corrections"] = std::move(logs);

  json c;
  c["w0"] = cfg.w0;
  if (!cfg.w0_per_frame.empty()) c["w0_per_frame"] = cfg.w0_per_frame;
  c["w1"] = cfg.w1;
  c["w2"] = cfg.w2;
  c["w3"] = cfg.w3;
  c["crop_fraction"] = cfg.crop_fraction;
  c["window_margin"] = cfg.window_margin;
  c["bound_lo"] = bound_array(cfg.bound_lo);
  c["bound_hi"] = bound_array(cfg.bound_hi);
  c["w_diag"] = cfg.w_diag;
  c["w_offdiag"] = cfg.w_offdiag;
  c["keystone_ratio_weight"] = cfg.keystone_ratio_weight;
  c["keystone_ratio"] = json::array({plan.diagnostics.keystone_ratio[0],
                                     plan.diagnostics.keystone_ratio[1]});
  c["saliency_mode"] =
      cfg.saliency ? json(mode_name(cfg.saliency_mode)) : json(nullptr);
  c["saliency_penalty"] = cfg.saliency_penalty;
  c["center_weight"] = cfg.center_weight;
  c["window"] = {{"l_w", cfg.window.l_w}, {"l_s", cfg.window.l_s}};
  c["solver"] = {{"eps_primal", cfg.solver.eps_primal},
                 {"eps_dual", cfg.solver.eps_dual},
                 {"eps_comp", cfg.solver.eps_comp},
                 {"eps_infeasible", cfg.solver.eps_infeasible},
                 {"max_iterations", cfg.solver.max_iterations}};
  c["tau"] = cfg.tau;
  j["config"] = std::move(c);

  const PlanDiagnostics& d = plan.diagnostics;
  json dg;
  dg["status"] = status_name(d.status);
  dg["iterations"] = d.iterations;
  dg["primal_res"] = d.primal_res;
  dg["dual_res"] = d.dual_res;
  dg["num_windows"] = d.num_windows;
  dg["max_problem_vars"] = d.max_problem_vars;
  dg["max_problem_rows"] = d.max_problem_rows;
  dg["objective"] = {{"fidelity", d.objective.fidelity},
                     {"e1", d.objective.e1},
                     {"e2", d.objective.e2},
                     {"e3", d.objective.e3},
                     {"distortion", d.objective.distortion},
                     {"keystone", d.objective.keystone},
                     {"centering", d.objective.centering},
                     {"saliency_slack", d.objective.saliency_slack},
                     {"total", d.objective.total()}};
  json act;
  for (const auto& [kind, count] : d.active)
    act[row_kind_name(kind)] = {{"active", count.active},
                                {"total", count.total}};
  dg["active_constraints"] = std::move(act);
  j["diagnostics"] = std::move(dg);

  j["quality"] = {{"e1_above_tau", quality.e1_above_tau},
                  {"e2_above_tau", quality.e2_above_tau},
                  {"e3_above_tau", quality.e3_above_tau},
                  {"rms_correction", quality.rms_correction},
                  {"fov_ratio", quality.fov_ratio},
                  {"max_linearization_residual",
                   quality.max_linearization_residual}};
  return j.dump(2) + "\n";
}

CorrectionPlan parse_plan(const std::string& text) {
  const json j = parse_json(text, "plan");
  if (!j.is_object()) throw ParseError("plan: top level must be an object");
  const json& ver = require(j, "version", "plan");
  if (!ver.is_number_integer() || ver.get<int>() != 1)
    throw ParseError("plan: unsupported version");

  CorrectionPlan plan;
  const json& win = require(j, "crop_window", "plan");
  const json& norm = require(win, "normalized", "plan crop_window");
  if (!norm.is_array() || norm.size() != 4)
    throw ParseError("plan crop_window: expected 4 corners");
  for (int i = 0; i < 4; ++i) {
    const json& p = norm[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
        !p[1].is_number())
      throw ParseError("plan crop_window: corners must be [x, y]");
    plan.crop_window.corners[i] = {p[0].get<double>(), p[1].get<double>()};
  }

  const json& logs = require(j, "log_corrections", "plan");
  const json& cor = require(j, "corrections", "plan");
  const json& inv = require(j, "inverse_corrections", "plan");
  if (!logs.is_array() || !cor.is_array() || !inv.is_array() ||
      logs.size() != cor.size() || cor.size() != inv.size())
    throw ParseError("plan: correction arrays must have equal lengths");
  for (std::size_t t = 0; t < logs.size(); ++t) {
    const std::string at = " frame " + std::to_string(t);
    plan.log_corrections.push_back(
        LogHomography{parse_vec9(logs[t], "plan log_corrections" + at)});
    plan.corrections.push_back(Homography{
        matrix_from_rowmajor(parse_vec9(cor[t], "plan corrections" + at))});
    plan.inverse_corrections.push_back(Homography{matrix_from_rowmajor(
        parse_vec9(inv[t], "plan inverse_corrections" + at))});
  }
  return plan;
}

std::string emit_plan_csv(const CorrectionPlan& plan,
                          const AnalysisPath& path) {
  const int n = path.size();
  if (static_cast<int>(plan.log_corrections.size()) != n)
    throw LengthMismatch("emit_plan_csv: plan and path disagree on frame count");
  const DerivativeTraces tr = derivatives(plan.log_corrections, path.f);

  std::string out = "frame";
  for (const char* prefix : {"f", "p", "s", "e1_abs", "e2_abs", "e3_abs"})
    for (int i = 0; i < 9; ++i)
      out += "," + std::string(prefix) + std::to_string(i);
  out += "\n";

  const Vec9 zero = Vec9::Zero();
  const auto append = [&out](const Vec9& v) {
    for (int i = 0; i < 9; ++i) {
      out += ',';
      out += fmt17(v[i]);
    }
  };
  for (int t = 0; t < n; ++t) {
    out += std::to_string(t);
    const Vec9& f = path.f[t].v;
    const Vec9& p = plan.log_corrections[t].v;
    Vec9 s = f + p;
    if (t > 0) s -= plan.log_corrections[t - 1].v;
    append(f);
    append(p);
    append(s);
    append(t < static_cast<int>(tr.e1.size()) ? Vec9(tr.e1[t].cwiseAbs())
                                              : zero);
    append(t < static_cast<int>(tr.e2.size()) ? Vec9(tr.e2[t].cwiseAbs())
                                              : zero);
    append(t < static_cast<int>(tr.e3.size()) ? Vec9(tr.e3[t].cwiseAbs())
                                              : zero);
    out += "\n";
  }
  return out;
}

std::string read_file(const std::string& file_path) {
  std::ifstream in(file_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + file_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + file_path);
  return ss.str();
}

void write_file(const std::string& file_path, const std::string& content) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) throw IoError("cannot open " + file_path + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("cannot write " + file_path);
}

int run_pipeline(const PipelineOptions& opts, std::ostream& out,
                 std::ostream& err) {
  const auto fail = [&err](const char* category, const std::string& msg,
                           int code) {
    err << "error[" << category << "]: " << msg << "\n";
    return code;
  };
  try {
    if (opts.trajectory_path.empty() == opts.synth_path.empty())
      throw ConfigError(
          "give exactly one input: a trajectory file or a synth spec");
    StabilizerConfig cfg = opts.cfg;

    TrajectoryData data;
    if (!opts.synth_path.empty()) {
      SynthSpec spec = parse_synth_spec(read_file(opts.synth_path));
      if (opts.seed_override) spec.seed = *opts.seed_override;
      data.path = generate(spec).path;
    } else {
      data = parse_trajectory(read_file(opts.trajectory_path));
    }
    const int n = data.path.size();

    if (!opts.saliency_path.empty()) {
      SaliencyTrack track = parse_saliency(read_file(opts.saliency_path));
      if (static_cast<int>(track.points.size()) > n)
        throw ParseError("saliency: lists " +
                         std::to_string(track.points.size()) +
                         " frames but the trajectory has " +
                         std::to_string(n));
      cfg.saliency = std::move(track);
    }

    // Margin never eats more than half the crop budget; the echoed config
    // reports the value actually used.
    cfg.window_margin = std::min(cfg.window_margin, cfg.crop_fraction / 2.0);
    const FrameGeometry geom = crop_window_from_fraction(
        cfg.crop_fraction, data.path.frame_aspect, cfg.window_margin);

    const CorrectionPlan plan = opts.global_solve
                                    ? solve_global(data.path, geom, cfg)
                                    : solve_windowed(data.path, geom, cfg);
    const QualityReport rep = quality(plan, data.path, geom, cfg.tau);

    if (!opts.dump_qp_path.empty()) {
      StabilizerConfig dump_cfg = cfg;
      dump_cfg.keystone_ratio_override = plan.diagnostics.keystone_ratio;
      const AssembledProblem prob = assemble(data.path, geom, dump_cfg);
      std::ostringstream os;
      dump_qp(prob.qp, os);
      write_file(opts.dump_qp_path, os.str());
    }

    const std::string plan_json =
        emit_plan_json(plan, cfg, rep, data.pixel_size);
    if (opts.out_json == "-")
      out << plan_json;
    else if (!opts.out_json.empty())
      write_file(opts.out_json, plan_json);
    if (!opts.out_csv.empty())
      write_file(opts.out_csv, emit_plan_csv(plan, data.path));
    return 0;
  } catch (const IoError& e) {
    return fail("io", e.what(), 2);
  } catch (const ParseError& e) {
    return fail("parse", e.what(), 2);
  } catch (const NonPositiveDeterminant& e) {
    return fail("parse", e.what(), 2);
  } catch (const LogDomain& e) {
    return fail("parse", e.what(), 2);
  } catch (const InfeasibleSaliency& e) {
    return fail("infeasible", e.what(), 3);
  } catch (const WindowInfeasible& e) {
    return fail("infeasible", e.what(), 3);
  } catch (const SolverFailure& e) {
    return fail("solver", e.what(), 4);
  } catch (const NotOptimal& e) {
    return fail("solver", e.what(), 4);
  } catch (const Error& e) {
    return fail("config", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 4);
  }
}

}  // namespace cinestab
