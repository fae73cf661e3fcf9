#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "lyapkit/characteristics.hpp"
#include "lyapkit/energy.hpp"
#include "lyapkit/g_provider.hpp"
#include "lyapkit/quadrature.hpp"

using namespace lyapkit;

static void BM_AdaptiveSimpsonLog(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(integrate([](double s) { return std::log(s); }, 0.0, 1.0));
}
BENCHMARK(BM_AdaptiveSimpsonLog);

static void BM_Characteristic(benchmark::State& state) {
  const ProblemSpec s = instantiate(InverseMcf{});
  for (auto _ : state) benchmark::DoNotOptimize(integrate_characteristics(s, {0.0, 0.5, 0.0, 0.0}));
}
BENCHMARK(BM_Characteristic);

static void BM_Tabulate(benchmark::State& state) {
  const ProblemSpec s = instantiate(McfPoly{1.0});
  TabulationControls c;
  c.workers = static_cast<unsigned>(state.range(0));
  SeedGrid seeds;
  for (int i = 0; i < 9; ++i) seeds.u0.push_back(-1.0 + 0.25 * i);
  for (int i = 0; i < 9; ++i) seeds.p0.push_back(0.2 + 0.2 * i);
  for (auto _ : state) benchmark::DoNotOptimize(GProvider::tabulate(s, seeds, c).sample_count());
}
BENCHMARK(BM_Tabulate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_EnergyOfFrame(benchmark::State& state) {
  const BuiltinModel m = RhoLaplacianPoly{3.0, 1.0};
  const ProblemSpec s = instantiate(m);
  const Lagrangian lag = Lagrangian::build(s, GProvider::from_oracle(m));
  const Grid1D g(static_cast<int>(state.range(0)));
  StateFrame f;
  for (std::size_t i = 0; i < g.nodes(); ++i) f.u.push_back(g.x(i) + 0.1 * std::sin(std::numbers::pi * g.x(i)));
  f.ut = evaluate_rhs(s, g, f.u);
  for (auto _ : state) benchmark::DoNotOptimize(energy_of_frame(lag, g, f));
}
BENCHMARK(BM_EnergyOfFrame)->Arg(64)->Arg(256);

static void BM_SolverStep(benchmark::State& state) {
  const ProblemSpec s = instantiate(PorousMedium{2.0});
  const Grid1D g(static_cast<int>(state.range(0)));
  std::vector<double> u;
  for (std::size_t i = 0; i < g.nodes(); ++i) u.push_back(std::max(0.0, 0.5 - 8 * (g.x(i) - 0.5) * (g.x(i) - 0.5)));
  const StateFrame f = initial_frame(s, g, u);
  const double dt = stable_dt(s, g, f.u);
  for (auto _ : state) benchmark::DoNotOptimize(step(s, g, f, dt));
}
BENCHMARK(BM_SolverStep)->Arg(128)->Arg(1024);
BENCHMARK_MAIN();
