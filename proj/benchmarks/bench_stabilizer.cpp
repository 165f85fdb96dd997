#include <benchmark/benchmark.h>

#include <vector>

#include "cinestab/lie.hpp"
#include "cinestab/path.hpp"
#include "cinestab/problem.hpp"
#include "cinestab/qp.hpp"
#include "cinestab/synth.hpp"
#include "cinestab/window.hpp"

using namespace cinestab;

namespace {

AnalysisPath shaky_path(int frames) {
  SynthSpec spec;
  SynthSegment seg;
  seg.frames = frames;
  seg.kind = MotionKind::ConstantVelocity;
  seg.rate = Vec9::Zero();
  seg.rate[2] = 0.002;
  spec.segments = {seg};
  spec.jitter_sigma.fill(0.001);
  spec.seed = 17;
  return generate(spec).path;
}

FrameGeometry geometry() { return crop_window_from_fraction(0.2, 9.0 / 16.0, 0.05); }

}  // namespace

static void BM_ExpLogRoundtrip(benchmark::State& state) {
  GaussianStream g(3);
  LogHomography h = LogHomography::zero();
  for (int j = 0; j < 8; ++j) h.v[j] = 0.02 * g.next();
  h.v[8] = -(h.v[0] + h.v[4]);
  for (auto _ : state) {
    const LogHomography back = log_h(exp_h(h));
    benchmark::DoNotOptimize(back.v.data());
  }
}
BENCHMARK(BM_ExpLogRoundtrip);

static void BM_Assemble(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0));
  const AnalysisPath path = shaky_path(frames);
  const FrameGeometry geom = geometry();
  const StabilizerConfig cfg;
  for (auto _ : state) {
    const AssembledProblem prob = assemble(path, geom, cfg);
    benchmark::DoNotOptimize(prob.qp.q.data());
  }
  state.SetComplexityN(frames);
}
BENCHMARK(BM_Assemble)->Arg(60)->Arg(120)->Arg(240)->Complexity();

static void BM_SolveGlobal(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0));
  const AnalysisPath path = shaky_path(frames);
  const FrameGeometry geom = geometry();
  const StabilizerConfig cfg;
  for (auto _ : state) {
    const CorrectionPlan plan = solve_global(path, geom, cfg);
    benchmark::DoNotOptimize(plan.log_corrections.data());
  }
  state.SetComplexityN(frames);
}
BENCHMARK(BM_SolveGlobal)->Arg(60)->Arg(120)->Arg(240)->Unit(benchmark::kMillisecond)->Complexity();

static void BM_SolveWindowed(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0));
  const AnalysisPath path = shaky_path(frames);
  const FrameGeometry geom = geometry();
  StabilizerConfig cfg;
  cfg.window.l_w = 120;
  cfg.window.l_s = 90;
  for (auto _ : state) {
    const CorrectionPlan plan = solve_windowed(path, geom, cfg);
    benchmark::DoNotOptimize(plan.log_corrections.data());
  }
  state.SetComplexityN(frames);
}
BENCHMARK(BM_SolveWindowed)->Arg(240)->Arg(480)->Arg(960)->Unit(benchmark::kMillisecond)->Complexity();

BENCHMARK_MAIN();
