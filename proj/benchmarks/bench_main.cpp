#include "qsync/block_tensor.hpp"
#include "qsync/joint.hpp"
#include "qsync/quadsync.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace qsync;

BlockTensor4 quads(int n, double noise) {
  const CameraStack c = generate_cameras(n, CameraLayout::generic, 1);
  return build_noisy_block_tensor4(c, full_observation(n).quads, noise, 2, true);
}

void BM_BuildBlockTensor4(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CameraStack c = generate_cameras(n, CameraLayout::generic, 1);
  const Observation o = full_observation(n);
  for (auto _ : state) benchmark::DoNotOptimize(build_block_tensor4(c, o.quads, true));
  state.counters["blocks"] = static_cast<double>(o.quads.size());
}
BENCHMARK(BM_BuildBlockTensor4)->Arg(8)->Arg(13)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_HosvdInit(benchmark::State& state) {
  const QuadTerm term(quads(static_cast<int>(state.range(0)), 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(hosvd_camera_init(term));
}
BENCHMARK(BM_HosvdInit)->Arg(8)->Arg(13)->Unit(benchmark::kMillisecond);

// C update with all columns (m = 0) or m sampled columns per row
void BM_CameraUpdate(benchmark::State& state) {
  QuadSyncConfig cfg;
  cfg.subsample_m = static_cast<int>(state.range(1));
  QuadSyncSolver s(quads(static_cast<int>(state.range(0)), 1.0), cfg);
  for (auto _ : state) {
    for (int mode = 0; mode < 4; ++mode) s.update_camera_factor(mode);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_CameraUpdate)->Args({13, 0})->Args({13, 30})->Args({13, 100})->Unit(benchmark::kMillisecond);

void BM_ScaleUpdate(benchmark::State& state) {
  QuadSyncSolver s(quads(static_cast<int>(state.range(0)), 1.0), {});
  for (auto _ : state) {
    s.solve_scales();
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_ScaleUpdate)->Arg(13)->Unit(benchmark::kMillisecond);

void BM_QuadSync(benchmark::State& state) {
  const BlockTensor4 q = quads(static_cast<int>(state.range(0)), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(run_quadsync(q));
}
BENCHMARK(BM_QuadSync)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_JointAlternate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CameraStack c = generate_cameras(n, CameraLayout::generic, 1);
  const Observation o = full_observation(n);
  JointSolver s(build_noisy_block_tensor4(c, o.quads, 1.0, 2, true), build_noisy_block_tensor3(c, o.triples, 1.0, 3, true),
                build_noisy_block_matrix(c, o.pairs, 1.0, 4, true), {});
  for (auto _ : state) {
    s.alternate();
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_JointAlternate)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
