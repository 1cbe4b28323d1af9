// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

#include "macroreal/kernels.hpp"

using namespace macroreal;
namespace k = macroreal::kernels;

namespace {

struct TraceInput {
  ComplexMatrix w;
  RealVector e;
  std::vector<double> taus;
};

TraceInput trace_input(int n, int samples) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  TraceInput in;
  in.w = ComplexMatrix(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) in.w(i, j) = Complex(g(rng), g(rng));
  in.w = (in.w + in.w.adjoint()).eval();
  in.e = RealVector::LinSpaced(n, 0.0, 1.0);
  for (int s = 0; s < samples; ++s) in.taus.push_back(0.1 * s);
  return in;
}

template <bool Parallel>
void correlation_trace(benchmark::State& state) {
  const auto in = trace_input(static_cast<int>(state.range(0)), 256);
  for (auto _ : state) {
    RealVector out = Parallel ? k::parallel::correlation_trace<Complex>(in.w, in.e, in.taus)
                              : k::serial::correlation_trace<Complex>(in.w, in.e, in.taus);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void dephased_populations(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix t(n, n);
  ComplexVector c(n);
  for (int j = 0; j < n; ++j) {
    c[j] = Complex(g(rng), g(rng));
    for (int i = 0; i < n; ++i) t(i, j) = Complex(g(rng), g(rng));
  }
  const RealMatrix gk = k::dephasing_kernel(RealVector::LinSpaced(n, -1.0, 1.0), 0.1);
  for (auto _ : state) {
    RealVector out = Parallel ? k::parallel::dephased_populations(t, c, gk) : k::serial::dephased_populations(t, c, gk);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void gaussian_mixture(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RealVector p = RealVector::Constant(n, 1.0 / n);
  const RealVector b = RealVector::LinSpaced(n, -100.0, 100.0);
  const RealVector y = RealVector::LinSpaced(8192, -120.0, 120.0);
  for (auto _ : state) {
    RealVector out = Parallel ? k::parallel::gaussian_mixture(p, b, 2.0, y) : k::serial::gaussian_mixture(p, b, 2.0, y);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void joint_density(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix phi(n, 1024);
  for (int j = 0; j < phi.cols(); ++j)
    for (int i = 0; i < n; ++i) phi(i, j) = Complex(g(rng), g(rng));
  const RealVector b = RealVector::LinSpaced(n, -5.0, 5.0);
  const RealVector y = RealVector::LinSpaced(1024, -8.0, 8.0);
  for (auto _ : state) {
    RealMatrix out = Parallel ? k::parallel::joint_density(phi, b, 0.5, y) : k::serial::joint_density(phi, b, 0.5, y);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(correlation_trace<false>)->Name("correlation_trace/serial")->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(correlation_trace<true>)->Name("correlation_trace/parallel")->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(dephased_populations<false>)->Name("dephased_populations/serial")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(dephased_populations<true>)->Name("dephased_populations/parallel")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(gaussian_mixture<false>)->Name("gaussian_mixture/serial")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(gaussian_mixture<true>)->Name("gaussian_mixture/parallel")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(joint_density<false>)->Name("joint_density/serial")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(joint_density<true>)->Name("joint_density/parallel")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
