#include "cdrpipe/fom.hpp"
#include "cdrpipe/kernel.hpp"
#include "cdrpipe/pod.hpp"
#include "cdrpipe/rom.hpp"
#include "cdrpipe/sampling.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>

namespace {

using namespace cdr;

constexpr double kEnd = 3.0;

struct Fixture {
  AffineOperatorSet ops;
  ReducedOperatorSet rom;
  KernelModel ml;
  KernelModel ml_compressed;
  int steps;

  Fixture(int intervals, int num_steps) : ops(assemble(Grid1D(intervals))), steps(num_steps) {
    const ParameterDomain box;
    IncrementalHapod hapod(ops.free_block(ops.h1_product).to_sparse(), 1e-4, 0.75, 4 * (steps + 1),
                           PodErrorMode::kAbsoluteMean);
    const StateSink sink = [&](const Eigen::Ref<const Eigen::MatrixXd>& b) { hapod.push(b); };
    for (const Parameter& mu : corner_parameters(box)) (void)solve_fom_qoi(ops, mu, steps, kEnd, sink);
    rom = project(ops, hapod.finalize());
    const auto train = sample_parameters(box, 100, 1);
    Eigen::MatrixXd y(100, steps + 1);
    for (Eigen::Index i = 0; i < 100; ++i) y.row(i) = solve_rom(rom, train[static_cast<std::size_t>(i)], steps, kEnd).transpose();
    ml = fit_fgreedy(train, y, KernelConfig{});
    KernelConfig compressed;
    compressed.output_tol = 1e-6;
    ml_compressed = fit_fgreedy(train, y, compressed);
  }
};

const Fixture& fixture(int intervals, int steps) {
  static std::map<std::pair<int, int>, std::unique_ptr<Fixture>> cache;
  auto& f = cache[{intervals, steps}];
  if (!f) f = std::make_unique<Fixture>(intervals, steps);
  return *f;
}

void BM_FomSolve(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_fom_qoi(f.ops, {0.5, 0.5}, f.steps, kEnd));
}

void BM_RomSolve(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  state.counters["N_rb"] = static_cast<double>(f.rom.size());
  for (auto _ : state) benchmark::DoNotOptimize(solve_rom(f.rom, {0.5, 0.5}, f.steps, kEnd));
}

void BM_Predict(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  state.counters["centers"] = static_cast<double>(f.ml.num_centers());
  Eigen::VectorXd out(f.ml.d_out);
  for (auto _ : state) {
    predict_into(f.ml, {0.5, 0.5}, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_PredictCompressed(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  state.counters["centers"] = static_cast<double>(f.ml_compressed.num_centers());
  state.counters["modes"] = static_cast<double>(f.ml_compressed.output_basis.cols());
  Eigen::VectorXd out(f.ml_compressed.d_out);
  for (auto _ : state) {
    predict_into(f.ml_compressed, {0.5, 0.5}, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_Assemble(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(assemble(Grid1D(static_cast<int>(state.range(0)))));
}

}  // namespace

BENCHMARK(BM_Assemble)->Arg(64)->Arg(1024);
BENCHMARK(BM_FomSolve)->Args({64, 4096})->Args({64, 24576})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RomSolve)->Args({64, 4096})->Args({64, 24576})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Predict)->Args({64, 4096})->Args({64, 24576})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PredictCompressed)->Args({64, 4096})->Args({64, 24576})->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
