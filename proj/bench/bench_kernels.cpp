// Serial reference against the OpenMP kernels on the same inputs.
#include <benchmark/benchmark.h>

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "spherekit/kernels.hpp"
#include "spherekit/rng.hpp"
#include "spherekit/space.hpp"
#include "spherekit/spherical.hpp"

using namespace spherekit;

namespace {

const Space& grid(int R) {
  static std::vector<std::unique_ptr<Space>> cache(257);
  if (!cache[R]) cache[R] = std::make_unique<Space>(generate_grid(2, R, 0.0));
  return *cache[R];
}

std::vector<double> t_of(const Space& X) {
  std::vector<double> t(X.size());
  for (Index i = 0; i < X.size(); ++i) t[i] = 1.0 / (1.0 + X.remoteness(i));
  return t;
}

kernels::EdgeSystem system_of(const Space& X) {
  kernels::EdgeSystem sys;
  sys.vertices = X.size();
  for (const auto& e : X.edges()) {
    sys.u.push_back(static_cast<std::uint32_t>(e.u));
    sys.v.push_back(static_cast<std::uint32_t>(e.v));
    sys.kappa.push_back(1.0);
  }
  sys.finalize();
  return sys;
}

std::vector<double> field(std::size_t n) {
  Rng rng(3, 0);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

kernels::Exec exec_of(const benchmark::State& s) {
  return s.range(1) ? kernels::Exec::Parallel : kernels::Exec::Serial;
}

void BM_ChainSSSP(benchmark::State& state) {
  const Space& X = grid(static_cast<int>(state.range(0)));
  const auto t = t_of(X);
  std::vector<double> dist;
  for (auto _ : state) {
    kernels::chain_sssp(exec_of(state), X, t, X.base(), std::numeric_limits<double>::infinity(), dist);
    benchmark::DoNotOptimize(dist.data());
  }
  state.SetLabel(state.range(1) ? "parallel" : "serial");
}

void BM_SmoothedGradient(benchmark::State& state) {
  const Space& X = grid(static_cast<int>(state.range(0)));
  const auto sys = system_of(X);
  const auto x = field(X.size());
  std::vector<double> g(X.size());
  for (auto _ : state) {
    kernels::smoothed_gradient(exec_of(state), sys, x, 3.0, 1e-9, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetLabel(state.range(1) ? "parallel" : "serial");
}

void BM_SmoothedEnergy(benchmark::State& state) {
  const Space& X = grid(static_cast<int>(state.range(0)));
  const auto sys = system_of(X);
  const auto x = field(X.size());
  for (auto _ : state) benchmark::DoNotOptimize(kernels::smoothed_energy(exec_of(state), sys, x, 3.0, 1e-9));
  state.SetLabel(state.range(1) ? "parallel" : "serial");
}

void BM_LaplacianApply(benchmark::State& state) {
  const Space& X = grid(static_cast<int>(state.range(0)));
  const auto sys = system_of(X);
  const auto x = field(X.size());
  const std::vector<double> h(sys.edges(), 1.0);
  std::vector<double> y(X.size());
  for (auto _ : state) {
    kernels::laplacian_apply(exec_of(state), sys, h, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetLabel(state.range(1) ? "parallel" : "serial");
}

void BM_BallMeasures(benchmark::State& state) {
  const Space& X = grid(static_cast<int>(state.range(0)));
  std::vector<BallQuery> qs;
  Rng rng(5, 0);
  for (int k = 0; k < 256; ++k) qs.push_back({rng.index(X.size()), rng.uniform(1.0, 16.0), false});
  std::vector<double> out(qs.size());
  for (auto _ : state) {
    kernels::ball_measures(exec_of(state), X, qs, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(state.range(1) ? "parallel" : "serial");
}

}  // namespace

BENCHMARK(BM_ChainSSSP)->ArgsProduct({{32, 64}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmoothedGradient)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SmoothedEnergy)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LaplacianApply)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BallMeasures)->ArgsProduct({{64}, {0, 1}})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
