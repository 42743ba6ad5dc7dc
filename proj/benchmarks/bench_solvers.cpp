#include <benchmark/benchmark.h>

#include <cmath>

#include "fracdiff/elliptic.hpp"
#include "fracdiff/parabolic.hpp"

using namespace fracdiff;

namespace {

Field bump(const UniformGrid& g) {
  return Field::sample(g, [](const std::vector<double>& x) { return std::exp(-x[0] * x[0]); });
}

// Direct summation up to 1024 nodes, FFT convolution above.
void BM_OperatorApply(benchmark::State& state) {
  const UniformGrid g(1, 20.0, static_cast<std::size_t>(state.range(0)));
  const auto op = DiscreteOperator::build({0.4, OperatorKind::TruncatedQuadrature, g});
  const auto f = bump(g);
  std::vector<double> out(g.size());
  for (auto _ : state) {
    op.apply(f.values(), out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_OperatorApply)->RangeMultiplier(4)->Range(256, 16384);

void BM_PeriodicApply(benchmark::State& state) {
  const UniformGrid g(1, 20.0, static_cast<std::size_t>(state.range(0)), Topology::Periodic);
  const auto op = DiscreteOperator::build({0.4, OperatorKind::PeriodicSpectral, g});
  const auto f = bump(g);
  std::vector<double> out(g.size());
  for (auto _ : state) {
    op.apply(f.values(), out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_PeriodicApply)->RangeMultiplier(4)->Range(256, 16384);

void BM_EllipticSolve(benchmark::State& state) {
  const UniformGrid g(1, 20.0, static_cast<std::size_t>(state.range(0)));
  const auto f = bump(g);
  EllipticProblem p{DiscreteOperator::build({0.5, OperatorKind::TruncatedQuadrature, g}),
                    RegularizedNonlinearity(Nonlinearity::power(1.0), 1e-3), f};
  for (auto _ : state) {
    const auto sol = solve_elliptic(p);
    if (!sol.report.converged) state.SkipWithError("not converged");
    benchmark::DoNotOptimize(sol.v.values().data());
  }
}
BENCHMARK(BM_EllipticSolve)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_ParabolicRun(benchmark::State& state) {
  const UniformGrid g(1, 20.0, static_cast<std::size_t>(state.range(0)));
  ParabolicProblem p;
  p.op_spec = {0.5, OperatorKind::TruncatedQuadrature, g};
  p.nl = Nonlinearity::logarithmic();
  p.eps = 1e-3;
  p.initial = bump(g);
  p.t_end = 0.1;
  p.dt = 0.01;
  for (auto _ : state) {
    const auto tr = evolve(p, {0.0, 0.1});
    if (tr.failed) state.SkipWithError("step failed");
    benchmark::DoNotOptimize(tr.steps);
  }
}
BENCHMARK(BM_ParabolicRun)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
