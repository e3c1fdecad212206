#include <benchmark/benchmark.h>

#include "wavelab/assembly.hpp"
#include "wavelab/formulations.hpp"

using namespace wavelab;

static void BM_MassCG(benchmark::State& state) {
  const auto mesh = build_interval_mesh(0, 1, state.range(0));
  const FunctionSpace v = make_space(mesh, Family::continuous_lagrange, static_cast<int>(state.range(1)),
                                     BoundaryCondition::dirichlet);
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_mass(v, 1.0));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MassCG)->ArgsProduct({{256, 1024, 4096}, {1, 2}})->Complexity();

static void BM_CouplingGrad(benchmark::State& state) {
  const auto mesh = build_interval_mesh(0, 1, state.range(0));
  const FunctionSpace v = make_space(mesh, Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
  const FunctionSpace w = derivative_space(v);
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_coupling_grad(w, v));
  }
}
BENCHMARK(BM_CouplingGrad)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_BuildRT0(benchmark::State& state) {
  FormulationSpec spec;
  spec.kind = FormulationKind::mixed_div;
  spec.mesh = build_rect_mesh({0, 1}, {0, 1}, state.range(0), state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_formulation(spec));
  }
}
BENCHMARK(BM_BuildRT0)->Arg(8)->Arg(16)->Arg(32);
