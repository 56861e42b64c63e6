#include <benchmark/benchmark.h>

#include "cisim/driven_frame.hpp"
#include "cisim/hamiltonians.hpp"
#include "cisim/lindblad.hpp"
#include "cisim/phase_space.hpp"

using namespace cisim;

namespace {

LindbladSpec lvc_spec(int na, int nb, double t_end) {
  LVCParams p;
  p.delta_a = FrequencyParam::khz(125.8);
  p.delta_b = FrequencyParam::khz(0);
  p.g_x = FrequencyParam::khz(158);
  p.g_y = FrequencyParam::khz(115);
  p.layout = SubsystemLayout({2, na, nb});
  LindbladSpec s;
  s.layout = p.layout;
  s.hamiltonian = build_lvc(p);
  s.collapse = {{embed(annihilation(nb), 2, p.layout), FrequencyParam::khz(320), "kappa_b"},
                {embed(pauli(Axis::Y), 0, p.layout), FrequencyParam::rad_per_us(1.0 / (2 * 51.7)), "gamma_y"}};
  s.initial = tensor({qubit_minus(), coherent_state(alpha_g(p.g_x, p.delta_a), na), basis_state(nb, 0)});
  s.t_grid = linspace(0.0, t_end, 11);
  s.observables = {{"sx", embed(pauli(Axis::X), 0, p.layout)}};
  return s;
}

// Generator assembly plus one application on the full model; range(0) is the mode-a truncation.
void BM_GeneratorBuildAndApply(benchmark::State& state) {
  const auto s = lvc_spec(int(state.range(0)), 8, 1.0);
  const Mat rho = s.initial.density();
  for (auto _ : state) benchmark::DoNotOptimize(lindblad_rhs(s, 0.0, rho));
  state.counters["dim"] = double(rho.rows());
}
BENCHMARK(BM_GeneratorBuildAndApply)->Arg(14)->Arg(20)->Arg(35)->Unit(benchmark::kMillisecond);

void BM_EvolveLVC(benchmark::State& state) {
  const auto s = lvc_spec(int(state.range(0)), 6, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(evolve(s));
}
BENCHMARK(BM_EvolveLVC)->Arg(14)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_WignerGrid(benchmark::State& state) {
  const auto psi = coherent_state(2.0, 30);
  const auto axis = linspace(-4, 4, int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(wigner_grid(psi, axis, axis));
}
BENCHMARK(BM_WignerGrid)->Arg(31)->Arg(61)->Unit(benchmark::kMillisecond);

void BM_NullCrossKerr(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(driven::null_cross_kerr(FrequencyParam::mhz(244), FrequencyParam::mhz(80), 8));
}
BENCHMARK(BM_NullCrossKerr)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
