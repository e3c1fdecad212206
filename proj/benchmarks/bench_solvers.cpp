#include <vector>

#include <benchmark/benchmark.h>

#include "wavelab/assembly.hpp"
#include "wavelab/solvers.hpp"

using namespace wavelab;

namespace {

SparseMatrix poisson(Index n) {
  const auto mesh = build_interval_mesh(0, 1, n);
  const FunctionSpace v = make_space(mesh, Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
  return assemble_stiffness_grad(v, 1.0);
}

void run_solve(benchmark::State& state, SolverMethod method) {
  const SparseMatrix k = poisson(state.range(0));
  const Vector b(static_cast<std::size_t>(k.rows()), 1.0);
  SolverConfig cfg;
  cfg.method = method;
  cfg.tolerance = 1e-8;
  cfg.max_iterations = 100000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_spd(k, b, cfg));
  }
}

}  // namespace

static void BM_SolveBanded(benchmark::State& state) { run_solve(state, SolverMethod::banded); }
static void BM_SolveCG(benchmark::State& state) { run_solve(state, SolverMethod::cg); }
BENCHMARK(BM_SolveBanded)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(BM_SolveCG)->Arg(256)->Arg(1024);

static void BM_PowerIteration(benchmark::State& state) {
  const auto mesh = build_interval_mesh(0, 1, state.range(0));
  const FunctionSpace v = make_space(mesh, Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
  const SparseMatrix k = assemble_stiffness_grad(v, 1.0);
  const SparseMatrix m = assemble_mass(v, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(power_iteration_genevp(k, m, 1e-10));
  }
}
BENCHMARK(BM_PowerIteration)->Arg(64)->Arg(256);
