#include <benchmark/benchmark.h>

#include "wavelab/formulations.hpp"

using namespace wavelab;

namespace {

void run_steps(benchmark::State& state, FormulationKind kind, Scheme scheme) {
  FormulationSpec spec;
  spec.kind = kind;
  spec.mesh = build_interval_mesh(0, 1, state.range(0));
  const auto sys = build_formulation(spec);
  const double dt = 0.5 * critical_time_step(*sys);
  IntegratorConfig cfg =
      scheme == Scheme::implicit_midpoint ? IntegratorConfig::midpoint(dt, 100) : IntegratorConfig::leapfrog(dt, 100);
  cfg.scheme = scheme;
  const auto stepper = make_stepper(*sys, cfg);
  const SchemeState init = stepper->start(initial_conditions(*sys, Profile{}));
  for (auto _ : state) {
    SchemeState s = init;
    for (int i = 0; i < 100; ++i) {
      stepper->step(s);
    }
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * 100);
}

}  // namespace

static void BM_LagrangianLeapfrog(benchmark::State& state) {
  run_steps(state, FormulationKind::lagrangian, Scheme::leapfrog);
}
static void BM_MixedGradVerlet(benchmark::State& state) {
  run_steps(state, FormulationKind::mixed_grad, Scheme::stormer_verlet);
}
static void BM_MixedGradMidpoint(benchmark::State& state) {
  run_steps(state, FormulationKind::mixed_grad, Scheme::implicit_midpoint);
}
BENCHMARK(BM_LagrangianLeapfrog)->Arg(128)->Arg(1024);
BENCHMARK(BM_MixedGradVerlet)->Arg(128)->Arg(1024);
BENCHMARK(BM_MixedGradMidpoint)->Arg(128)->Arg(1024);
