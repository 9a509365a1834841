// Serial reference vs OpenMP build of the per-frame kernels, plus one full
// pipeline step for context.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "skyfuse/kernels.hpp"
#include "skyfuse/pipeline.hpp"
#include "skyfuse/sim.hpp"

namespace {

using namespace skyfuse;

const CameraIntrinsics kIntr{};

std::vector<double> boundary() {
  return horizon_rows(RollPitch{deg2rad(12.0), deg2rad(-4.0)}, kIntr, kIntr.cy);
}

template <auto Kernel>
void BM_Render(benchmark::State& state) {
  const auto rows = boundary();
  BinaryMask mask(kIntr.image_width, kIntr.image_height);
  for (auto _ : state) {
    Kernel(rows, mask);
    benchmark::DoNotOptimize(mask.data().data());
  }
  state.SetItemsProcessed(state.iterations() * kIntr.image_width * kIntr.image_height);
}

template <auto Kernel>
void BM_Scan(benchmark::State& state) {
  BinaryMask mask(kIntr.image_width, kIntr.image_height);
  kernels::serial::render_boundary(boundary(), mask);
  std::vector<int> cols;
  for (int c = 0; c < kIntr.image_width; c += static_cast<int>(state.range(0))) cols.push_back(c);
  std::vector<double> predicted(cols.size(), 200.0);
  std::vector<int> rows(cols.size());
  for (auto _ : state) {
    Kernel(mask, cols, predicted, 25, rows);
    benchmark::DoNotOptimize(rows.data());
  }
}

template <auto Kernel>
void BM_Reweight(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<double> roll(n), pitch(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    roll[i] = g(rng);
    pitch[i] = g(rng);
  }
  for (auto _ : state) {
    std::fill(w.begin(), w.end(), 1.0);
    Kernel(roll, pitch, RollPitch{0.01, -0.02}, 1e-4, w);
    benchmark::DoNotOptimize(w.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_PipelineStep(benchmark::State& state) {
  RunConfig cfg;
  cfg.scenario.trajectory.pattern = Pattern::kMixed;
  cfg.scenario.trajectory.angular_speed = 9.0;
  cfg.scenario.trajectory.duration = 60.0;
  GeneratedSource source(cfg);
  Pipeline pipeline(source, MethodSet{});
  BinaryMask mask;
  std::size_t k = 0;
  for (auto _ : state) {
    if (k == source.size()) {
      state.PauseTiming();
      pipeline = Pipeline(source, MethodSet{});
      k = 0;
      state.ResumeTiming();
    }
    source.mask_into(k, mask);
    benchmark::DoNotOptimize(pipeline.step(source.sample(k), mask));
    ++k;
  }
}

}  // namespace

BENCHMARK(BM_Render<kernels::serial::render_boundary>)->Name("render_boundary/serial");
BENCHMARK(BM_Render<kernels::parallel::render_boundary>)->Name("render_boundary/parallel");
BENCHMARK(BM_Scan<kernels::serial::scan_columns>)->Name("scan_columns/serial")->Arg(8)->Arg(1);
BENCHMARK(BM_Scan<kernels::parallel::scan_columns>)->Name("scan_columns/parallel")->Arg(8)->Arg(1);
BENCHMARK(BM_Reweight<kernels::serial::reweight>)->Name("reweight/serial")->Arg(1200)->Arg(1 << 16);
BENCHMARK(BM_Reweight<kernels::parallel::reweight>)->Name("reweight/parallel")->Arg(1200)->Arg(1 << 16);
BENCHMARK(BM_PipelineStep)->Name("pipeline_step");

BENCHMARK_MAIN();
