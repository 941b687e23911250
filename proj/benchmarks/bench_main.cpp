#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "implicit/expr.hpp"
#include "implicit/gensol.hpp"
#include "implicit/integrate.hpp"

namespace {

using namespace implicit;

ImplicitSystem sphere() {
  Vector lo = Vector::Constant(3, -2.0);
  Vector hi = Vector::Constant(3, 2.0);
  Vector seed(3);
  seed << 1, 0, 0;
  return {{parse("x1^2 + x2^2 + x3^2 - 1", 3)}, Box(lo, hi), seed};
}

void BM_Gradient(benchmark::State& state) {
  const auto f = parse("piecewise{ x1 < 0 and x2 <= -x1 and x2 >= x1 : x1^2 * (x2^2 - x1^2)^2; otherwise : 0 }", 2);
  std::vector<double> x{-0.5, 0.1};
  double g[2];
  for (auto _ : state) {
    f.gradient(x, g);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_Gradient);

void BM_Hessian(benchmark::State& state) {
  const auto f = parse("sin(x1) * exp(x2) + x1 * x2 * x3^2", 3);
  std::vector<double> x{0.3, -0.2, 0.7};
  for (auto _ : state) benchmark::DoNotOptimize(f.hessian(x));
}
BENCHMARK(BM_Hessian);

// Sphere chain; the argument is the number of steps per half-interval.
void BM_SphereChain(benchmark::State& state) {
  const auto sys = sphere();
  ChainConfig c;
  const double h = 0.3 / static_cast<double>(state.range(0));
  c.spans = {0.3, 0.3};
  c.steps = {h, h};
  for (auto _ : state) benchmark::DoNotOptimize(integrate_chain(sys, c).data().data());
  const auto n = 2 * state.range(0) + 1;
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_SphereChain)->Arg(30)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Hausdorff(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> a(2 * n), b(2 * n);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng);
  const Box box(Vector::Constant(2, -100.0), Vector::Constant(2, 100.0));
  const PointCloud pa(box, a, 0.0), pb(box, b, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff(pa, pb));
}
BENCHMARK(BM_Hausdorff)->Arg(2000)->Arg(20000)->Arg(200000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
