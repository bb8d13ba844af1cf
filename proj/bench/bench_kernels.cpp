// Serial reference vs OpenMP kernels on one full-size batch (100 samples, 250-interval mesh).

#include <benchmark/benchmark.h>

#include <cmath>

#include "nodencg/baseline.hpp"
#include "nodencg/datasets.hpp"
#include "nodencg/gradient.hpp"
#include "nodencg/line_search.hpp"
#include "nodencg/model.hpp"

using namespace nodencg;

namespace {

struct Fixture {
  LabeledSet batch = gen_moons(100, 0.07, 1);
  ParamTrajectory params = init_params(1, 2);
  GradientField direction{TimeMesh{}, 2};
  CostWeights weights = CostWeights::squared_distance();
  SolverOptions opts{.mode = StepMode::fixed_rk4};
  std::vector<DenseSolution> forward;
  CostateTrajectory costates;

  Fixture() {
    for (std::size_t i = 0; i < params.node_count(); ++i) {
      const double t = params.mesh().node(i);
      for (std::size_t j = 0; j < params.param_dim(); ++j) params.node(i)[j] += 0.3 * std::sin(t + static_cast<double>(j));
    }
    for (std::size_t i = 0; i < direction.node_count(); ++i) direction.node(i)[4] = 0.1;
    forward = solve_forward(params, batch, opts, Exec::serial);
    costates = solve_adjoint(params, batch, weights, forward, opts, Exec::serial);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_Forward(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(solve_forward(f.params, f.batch, f.opts, exec_of(state)));
}

void BM_ForwardAdaptive(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(solve_forward(f.params, f.batch, SolverOptions{}, exec_of(state)));
}

void BM_Adjoint(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_adjoint(f.params, f.batch, f.weights, f.forward, f.opts, exec_of(state)));
  }
}

void BM_L2Gradient(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(l2_gradient(f.params, f.batch, f.weights, f.forward, f.costates, exec_of(state)));
  }
}

void BM_Sensitivity(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_sensitivity(f.params, f.batch, f.direction, f.forward, f.opts, exec_of(state)));
  }
}

void BM_Backprop(benchmark::State& state) {
  const auto& f = fixture();
  const auto net = net_from_trajectory(f.params);
  for (auto _ : state) benchmark::DoNotOptimize(backprop_discrete(net, f.batch, f.weights, exec_of(state)));
}

void BM_Accuracy(benchmark::State& state) {
  const auto& f = fixture();
  const auto noisy = gen_moons(1000, 0.06, 3);
  for (auto _ : state) benchmark::DoNotOptimize(accuracy(f.params, noisy, f.opts, exec_of(state)));
}

}  // namespace

// Argument 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_Forward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardAdaptive)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Adjoint)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_L2Gradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sensitivity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Backprop)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Accuracy)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
