#include "cinestab/io.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{
      "Computes per-frame corrective homographies that smooth a camera "
      "trajectory into piecewise constant / linear / parabolic motion while "
      "keeping the crop window valid."};

  cinestab::PipelineOptions opts;
  std::vector<double> weights;
  std::vector<int> window;
  std::string saliency_mode;
  std::uint64_t seed = 0;

  auto* input = app.add_option("--input", opts.trajectory_path,
                               "Trajectory JSON (per-frame homographies)");
  auto* synth = app.add_option("--synth", opts.synth_path,
                               "Synthetic trajectory spec JSON");
  input->excludes(synth);
  synth->excludes(input);

  app.add_option("--crop", opts.cfg.crop_fraction,
                 "Crop fraction in (0, 0.5]")
      ->capture_default_str();
  app.add_option("--margin", opts.cfg.window_margin,
                 "Window sidelength kept above the FOV floor")
      ->capture_default_str();
  app.add_option("--window", window,
                 "Window solve parameters: length,fixed (e.g. 1800,1500)")
      ->expected(2)
      ->delimiter(',');
  app.add_flag("--global", opts.global_solve,
               "Solve the whole path as a single problem");
  app.add_option("--saliency", opts.saliency_path,
                 "Salient point track JSON");
  app.add_option("--saliency-mode", saliency_mode,
                 "How salient points constrain the solve")
      ->check(CLI::IsMember({"hard", "soft", "center"}));
  app.add_option("--weights", weights,
                 "Objective weights w0,w1,w2,w3")
      ->expected(4)
      ->delimiter(',');
  app.add_option("--w-diag", opts.cfg.w_diag, "Anisotropic scale penalty")
      ->capture_default_str();
  app.add_option("--w-offdiag", opts.cfg.w_offdiag, "Skew penalty")
      ->capture_default_str();
  app.add_option("--w-keystone", opts.cfg.keystone_ratio_weight,
                 "Keystone-to-translation coupling penalty")
      ->capture_default_str();
  app.add_option("--saliency-penalty", opts.cfg.saliency_penalty,
                 "Linear cost per unit of inclusion slack (soft mode)")
      ->capture_default_str();
  app.add_option("--center-weight", opts.cfg.center_weight,
                 "Quadratic centering weight (center mode)")
      ->capture_default_str();
  auto* seed_opt =
      app.add_option("--seed", seed, "Overrides the synth spec seed");
  app.add_option("--out", opts.out_json,
                 "Plan JSON output path ('-' writes to stdout)")
      ->capture_default_str();
  app.add_option("--csv", opts.out_csv, "Per-frame table output path");
  app.add_option("--dump-qp", opts.dump_qp_path,
                 "Writes the assembled whole-path QP as text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (!weights.empty()) {
    opts.cfg.w0 = weights[0];
    opts.cfg.w1 = weights[1];
    opts.cfg.w2 = weights[2];
    opts.cfg.w3 = weights[3];
  }
  if (!window.empty()) {
    opts.cfg.window.l_w = window[0];
    opts.cfg.window.l_s = window[1];
  }
  if (saliency_mode == "hard") {
    opts.cfg.saliency_mode = cinestab::SaliencyMode::HardInclude;
  } else if (saliency_mode == "soft") {
    opts.cfg.saliency_mode = cinestab::SaliencyMode::SoftInclude;
  } else if (saliency_mode == "center") {
    opts.cfg.saliency_mode = cinestab::SaliencyMode::Center;
  }
  if (seed_opt->count() > 0) opts.seed_override = seed;

  return cinestab::run_pipeline(opts, std::cout, std::cerr);
}
