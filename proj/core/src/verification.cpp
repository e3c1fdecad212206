#include "wavelab/verification.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "wavelab/errors.hpp"

namespace wavelab {

Trajectory simulate(const DiscreteSystem& system, const IntegratorConfig& cfg, const Profile& profile,
                    const SolverConfig& solver) {
  const auto stepper = make_stepper(system, cfg, solver);
  Trajectory run;
  run.states.reserve(static_cast<std::size_t>(cfg.steps + 1));
  SchemeState state = stepper->start(initial_conditions(system, profile, solver));
  for (long long n = 0;; ++n) {
    run.energy.push_back(stepper->energy(state));
    run.instantaneous_energy.push_back(stepper->instantaneous_energy(state));
    run.states.push_back(state);
    if (n == cfg.steps) {
      break;
    }
    stepper->step(state, 1);
  }
  run.stats = stepper->stats();
  return run;
}

double StepDiscrepancy::max() const noexcept {
  double m = 0.0;
  for (double d : {q, v, sigma}) {
    if (!std::isnan(d)) {
      m = std::max(m, d);
    }
  }
  return m;
}

namespace {

bool same_mesh(const MeshPtr& a, const MeshPtr& b) {
  if (a == b) {
    return true;
  }
  if (!a || !b || a->dimension() != b->dimension() || a->num_vertices() != b->num_vertices() ||
      a->num_cells() != b->num_cells()) {
    return false;
  }
  for (Index i = 0; i < a->num_vertices(); ++i) {
    if (a->vertex(i) != b->vertex(i)) {
      return false;
    }
  }
  for (Index c = 0; c < a->num_cells(); ++c) {
    const auto ca = a->cell(c);
    const auto cb = b->cell(c);
    if (!std::equal(ca.begin(), ca.end(), cb.begin(), cb.end())) {
      return false;
    }
  }
  return true;
}

bool reconstructs_q(FormulationKind kind) {
  return kind == FormulationKind::mixed_grad || kind == FormulationKind::mixed_div;
}

bool derives_sigma(FormulationKind kind) {
  return kind == FormulationKind::lagrangian || kind == FormulationKind::hamiltonian_vq ||
         kind == FormulationKind::velocity_only;
}

struct SideRun {
  std::shared_ptr<const DiscreteSystem> system;
  Trajectory trajectory;
};

SideRun run_side(const Side& side, const Profile& profile, long long steps, const SolverConfig& solver) {
  SideRun out;
  out.system = build_formulation(side.spec);
  IntegratorConfig cfg = side.integrator;
  cfg.steps = steps;
  out.trajectory = simulate(*out.system, cfg, profile, solver);
  return out;
}

double weighted_norm_sq(const SparseMatrix* weight, std::span<const double> d) {
  return weight ? quadratic_form(*weight, d) : dot(d, d);
}

}  // namespace

EquivalenceReport check_equivalence(const Side& a, const Side& b, const Profile& profile, long long steps, double tol,
                                    const SolverConfig& solver, bool concurrent) {
  if (!same_mesh(a.spec.mesh, b.spec.mesh)) {
    throw InvalidPair("both formulations must share one mesh");
  }
  if (a.spec.material.rho() != b.spec.material.rho() || a.spec.material.k_stiff() != b.spec.material.k_stiff()) {
    throw InvalidPair("both formulations must share the material");
  }
  if (a.integrator.dt != b.integrator.dt) {
    throw InvalidPair("both runs must use the same time step");
  }
  if (steps < 0 || !(tol >= 0.0)) {
    throw InvalidArgument("step count and tolerance must be non-negative");
  }
  a.integrator.validate();
  b.integrator.validate();

  SideRun ra;
  SideRun rb;
  if (concurrent) {
    auto fa = std::async(std::launch::async, run_side, std::cref(a), std::cref(profile), steps, std::cref(solver));
    auto fb = std::async(std::launch::async, run_side, std::cref(b), std::cref(profile), steps, std::cref(solver));
    ra = fa.get();
    rb = fb.get();
  } else {
    ra = run_side(a, profile, steps, solver);
    rb = run_side(b, profile, steps, solver);
  }

  const SchemeState initial = initial_conditions(*ra.system, profile, solver);
  const double h0 = collocated_energy(*ra.system, initial);
  double q0_sq = 0.0;
  for (const Observation& o : observe(*ra.system, initial)) {
    if (o.field == Field::q && o.stamp2 == 0) {
      q0_sq = weighted_norm_sq(o.weight, o.values);
    }
  }

  EquivalenceReport report;
  report.formulation_a = std::string(to_string(a.spec.kind));
  report.formulation_b = std::string(to_string(b.spec.kind));
  report.integrator_a = a.integrator.label();
  report.integrator_b = b.integrator.label();
  report.steps = steps;
  report.dt = a.integrator.dt;
  report.tol = tol;

  bool compared_q = false;
  bool compared_v = false;
  bool compared_sigma = false;
  for (long long n = 0; n <= steps; ++n) {
    const auto& sa = ra.trajectory.states[static_cast<std::size_t>(n)];
    const auto& sb = rb.trajectory.states[static_cast<std::size_t>(n)];
    const std::vector<Observation> oa = observe(*ra.system, sa);
    const std::vector<Observation> ob = observe(*rb.system, sb);
    StepDiscrepancy row;
    row.step = n;
    row.t = static_cast<double>(n) * a.integrator.dt;
    row.energy_a = ra.trajectory.energy[static_cast<std::size_t>(n)];
    row.energy_b = rb.trajectory.energy[static_cast<std::size_t>(n)];
    for (const Observation& x : oa) {
      if (x.field != Field::q && x.field != Field::v && x.field != Field::sigma) {
        continue;
      }
      for (const Observation& y : ob) {
        if (y.field != x.field || y.stamp2 != x.stamp2 || y.space != x.space || y.values.size() != x.values.size()) {
          continue;
        }
        const Vector d = linear_combination(1.0, x.values, -1.0, y.values);
        const SparseMatrix* w = x.weight ? x.weight : y.weight;
        const double dd = weighted_norm_sq(w, d);
        double value = 0.0;
        if (x.field == Field::q) {
          value = q0_sq > 0.0 ? std::sqrt(dd / q0_sq) : std::sqrt(dd);
        } else {
          value = h0 > 0.0 ? std::sqrt(0.5 * dd / h0) : std::sqrt(0.5 * dd);
        }
        double& slot = x.field == Field::q ? row.q : (x.field == Field::v ? row.v : row.sigma);
        slot = std::isnan(slot) ? value : std::max(slot, value);
        (x.field == Field::q ? compared_q : (x.field == Field::v ? compared_v : compared_sigma)) = true;
      }
    }
    report.max_discrepancy = std::max(report.max_discrepancy, row.max());
    report.per_step.push_back(row);
  }
  if (!compared_q && !compared_v && !compared_sigma) {
    throw InvalidPair(report.formulation_a + " and " + report.formulation_b + " share no comparable field");
  }
  if (compared_q) {
    std::string how = "identity";
    for (const Side* s : {&a, &b}) {
      if (reconstructs_q(s->spec.kind)) {
        how = s->integrator.staggered() ? "half-step-reconstruction" : "trapezoid-reconstruction";
      }
    }
    report.mapping.emplace_back("q", how);
  }
  if (compared_v) {
    report.mapping.emplace_back("v", "identity");
  }
  if (compared_sigma) {
    const bool derived = derives_sigma(a.spec.kind) || derives_sigma(b.spec.kind);
    report.mapping.emplace_back("sigma", derived ? "derivative-image" : "identity");
  }
  report.pass = report.max_discrepancy <= tol;
  return report;
}

EquivalenceReport check_equivalence(const FormulationSpec& a, const FormulationSpec& b,
                                    const IntegratorConfig& integrator, const Profile& profile, long long steps,
                                    double tol, const SolverConfig& solver) {
  return check_equivalence(Side{a, integrator}, Side{b, integrator}, profile, steps, tol, solver);
}

// ------------------------------------------------------------------ energy

namespace {

std::string energy_form(const DiscreteSystem& system, const IntegratorConfig& cfg) {
  const FormulationKind kind = system.kind();
  const bool recurrence = kind == FormulationKind::velocity_only || kind == FormulationKind::stress_only ||
                          (kind == FormulationKind::lagrangian && cfg.scheme != Scheme::newmark);
  if (recurrence) {
    return "recurrence-invariant";
  }
  return cfg.staggered() ? "two-time-product" : "collocated";
}

bool grown(double value, double reference) {
  return !std::isfinite(value) || std::abs(value) > 10.0 * std::abs(reference);
}

}  // namespace

EnergyTrace energy_audit(const DiscreteSystem& system, const IntegratorConfig& cfg, const Profile& profile,
                         const SolverConfig& solver) {
  const auto stepper = make_stepper(system, cfg, solver);
  SchemeState state = stepper->start(initial_conditions(system, profile, solver));
  EnergyTrace trace;
  trace.form = energy_form(system, cfg);
  trace.initial = stepper->energy(state);
  const double inst0 = stepper->instantaneous_energy(state);
  for (long long n = 0;; ++n) {
    const double e = stepper->energy(state);
    const double inst = stepper->instantaneous_energy(state);
    trace.steps.push_back(n);
    trace.energy.push_back(e);
    trace.instantaneous.push_back(inst);
    const double drift = trace.initial != 0.0 ? std::abs(e - trace.initial) / std::abs(trace.initial) : std::abs(e);
    trace.max_relative_drift = std::max(trace.max_relative_drift, drift);
    if ((trace.initial != 0.0 || !std::isfinite(e)) && (grown(e, trace.initial) || grown(inst, inst0))) {
      trace.stable = false;
      trace.unstable_step = n;
      break;
    }
    if (n == cfg.steps) {
      break;
    }
    stepper->step(state, 1);
  }
  return trace;
}

OscillationStudy energy_oscillation_ratio(const DiscreteSystem& system, const Profile& profile, double dt,
                                          double final_time, const SolverConfig& solver) {
  auto amplitude = [&](double step) {
    const auto steps = static_cast<long long>(std::llround(final_time / step));
    const EnergyTrace trace = energy_audit(system, IntegratorConfig::leapfrog(step, steps), profile, solver);
    if (!trace.stable) {
      throw InvalidState("leapfrog run is unstable at the requested step");
    }
    const auto [lo, hi] = std::minmax_element(trace.instantaneous.begin(), trace.instantaneous.end());
    return (*hi - *lo) / trace.initial;
  };
  OscillationStudy out;
  out.amplitude_coarse = amplitude(dt);
  out.amplitude_fine = amplitude(0.5 * dt);
  out.ratio = out.amplitude_coarse / out.amplitude_fine;
  return out;
}

// --------------------------------------------------------------------- CFL

StabilityMap cfl_scan(const StepperFactory& factory, const SchemeState& initial, std::vector<double> dt_grid,
                      long long steps) {
  std::sort(dt_grid.begin(), dt_grid.end());
  StabilityMap map;
  for (double dt : dt_grid) {
    const auto stepper = factory(dt);
    SchemeState state = stepper->start(initial);
    const double e0 = stepper->instantaneous_energy(state);
    bool stable = true;
    if (e0 > 0.0) {
      for (long long n = 0; n < steps && stable; ++n) {
        stepper->step(state, 1);
        stable = !grown(stepper->instantaneous_energy(state), e0);
      }
    }
    map.dt.push_back(dt);
    map.stable.push_back(stable);
  }
  const auto first_unstable = std::find(map.stable.begin(), map.stable.end(), false);
  if (first_unstable == map.stable.end()) {
    map.empirical = map.dt.empty() ? 0.0 : map.dt.back();
  } else {
    const auto i = static_cast<std::size_t>(first_unstable - map.stable.begin());
    map.empirical = i == 0 ? 0.0 : 0.5 * (map.dt[i - 1] + map.dt[i]);
  }
  return map;
}

StabilityMap cfl_scan(const DiscreteSystem& system, const Profile& profile, std::vector<double> dt_grid,
                      long long steps, const SolverConfig& solver) {
  const SchemeState initial = initial_conditions(system, profile, solver);
  StepperFactory factory = [&](double dt) {
    return make_stepper(system, IntegratorConfig::leapfrog(dt, steps), solver);
  };
  StabilityMap map = cfl_scan(factory, initial, std::move(dt_grid), steps);
  map.predicted = critical_time_step(system, solver);
  return map;
}

// ------------------------------------------------------------- convergence

ConvergenceTable convergence_study(const FormulationSpec& spec_template, Scheme scheme, const Profile& profile,
                                   const std::vector<Index>& cells, double dt_over_h, double final_time,
                                   const SolverConfig& solver) {
  if (!spec_template.mesh) {
    throw InvalidArgument("convergence study needs a template mesh for the domain");
  }
  if (!(dt_over_h > 0.0) || !(final_time > 0.0)) {
    throw InvalidArgument("dt/h ratio and final time must be positive");
  }
  const Mesh& tmpl = *spec_template.mesh;
  double x0 = tmpl.vertex(0)[0], x1 = x0, y0 = tmpl.vertex(0)[1], y1 = y0;
  for (Index i = 1; i < tmpl.num_vertices(); ++i) {
    x0 = std::min(x0, tmpl.vertex(i)[0]);
    x1 = std::max(x1, tmpl.vertex(i)[0]);
    y0 = std::min(y0, tmpl.vertex(i)[1]);
    y1 = std::max(y1, tmpl.vertex(i)[1]);
  }
  ConvergenceTable table;
  for (Index n : cells) {
    FormulationSpec spec = spec_template;
    spec.mesh = tmpl.dimension() == 1 ? build_interval_mesh(x0, x1, n) : build_rect_mesh({x0, x1}, {y0, y1}, n, n);
    const auto system = build_formulation(spec);
    ConvergenceRow row;
    row.cells = n;
    row.h = spec.mesh->h();
    row.steps = static_cast<long long>(std::ceil(final_time / (dt_over_h * row.h) - 1e-9));
    row.dt = final_time / static_cast<double>(row.steps);
    IntegratorConfig cfg = scheme == Scheme::implicit_midpoint ? IntegratorConfig::midpoint(row.dt, row.steps)
                                                               : IntegratorConfig::leapfrog(row.dt, row.steps);
    cfg.scheme = scheme == Scheme::newmark ? Scheme::leapfrog : scheme;
    const auto stepper = make_stepper(*system, cfg, solver);
    SchemeState state = stepper->start(initial_conditions(*system, profile, solver));
    for (long long k = 0; k < row.steps; ++k) {
      stepper->step(state, 1);
    }
    const Mesh& mesh = *spec.mesh;
    const MaterialParams& mat = spec.material;
    if (const FieldSlot* q = state.find(Field::q, 2 * row.steps)) {
      table.field = "q";
      row.error = l2_error(system->primal_space(), q->values,
                           [&](const Point& x) { return profile.exact_q(mesh, mat, x, final_time); });
    } else if (state.has(Field::v) && system->velocity_space().value_shape() == ValueShape::scalar) {
      const FieldSlot& v = state.latest(Field::v);
      const double t = 0.5 * static_cast<double>(v.stamp2) * row.dt;
      table.field = "v";
      row.error = l2_error(system->velocity_space(), v.values,
                           [&](const Point& x) { return profile.exact_v(mesh, mat, x, t); });
    } else {
      throw InvalidArgument(std::string(to_string(spec.kind)) + " exposes neither q nor a scalar v for the study");
    }
    if (!table.rows.empty()) {
      const ConvergenceRow& prev = table.rows.back();
      row.order = std::log(prev.error / row.error) / std::log(prev.h / row.h);
    }
    table.rows.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------- residuals

std::vector<double> second_difference_residual(const SparseMatrix& mass, const SparseMatrix& stiffness,
                                               const std::vector<Vector>& sequence, double dt) {
  std::vector<double> out;
  if (sequence.size() < 3) {
    return out;
  }
  double scale = 0.0;
  for (const Vector& u : sequence) {
    scale = std::max(scale, norm_inf(mass * u));
  }
  if (scale == 0.0) {
    scale = 1.0;
  }
  for (std::size_t n = 1; n + 1 < sequence.size(); ++n) {
    Vector second = sequence[n + 1];
    axpy(-2.0, sequence[n], second);
    axpy(1.0, sequence[n - 1], second);
    Vector r = mass * second;
    axpy(dt * dt, stiffness * sequence[n], r);
    out.push_back(norm_inf(r) / scale);
  }
  return out;
}

std::vector<double> pointwise_identity_residual(const DiscreteSystem& system, const Trajectory& run,
                                                const IntegratorConfig& cfg) {
  if (system.kind() != FormulationKind::mixed_grad || system.velocity_space().mesh().dimension() != 1) {
    throw InvalidArgument("the pointwise identity check applies to 1D mixed-grad runs");
  }
  const FunctionSpace& v_space = system.velocity_space();
  const FunctionSpace& w_space = system.stress_space();
  const Mesh& mesh = v_space.mesh();
  const auto w_points = w_space.dof_points();
  const double c = system.spec().material.compliance();

  // Derivative of a V field at every node of W.
  auto nodal_derivative = [&](std::span<const double> v) {
    Vector out(static_cast<std::size_t>(w_space.dof_count()), 0.0);
    BasisValues basis;
    for (Index cell = 0; cell < mesh.num_cells(); ++cell) {
      const double left = mesh.vertex(mesh.cell(cell)[0])[0];
      const double width = mesh.cell_measure(cell);
      const auto v_dofs = v_space.cell_dofs(cell);
      for (Index w_dof : w_space.cell_dofs(cell)) {
        const double ref[1] = {(w_points[static_cast<std::size_t>(w_dof)][0] - left) / width};
        v_space.evaluate(cell, ref, basis);
        double d = 0.0;
        for (int j = 0; j < basis.num_local; ++j) {
          const Index dof = v_dofs[static_cast<std::size_t>(j)];
          if (dof >= 0) {
            d += v[static_cast<std::size_t>(dof)] * basis.gradient(j, 0);
          }
        }
        out[static_cast<std::size_t>(w_dof)] = d;
      }
    }
    return out;
  };

  // The velocity passes through zero at some steps, so the scale is the
  // largest derivative over the whole run.
  std::vector<double> diffs;
  double scale = 0.0;
  for (std::size_t n = 0; n + 1 < run.states.size(); ++n) {
    const SchemeState& now = run.states[n];
    const SchemeState& next = run.states[n + 1];
    const long long s = 2 * now.step;
    const Vector v = cfg.staggered()
                         ? now.at(Field::v, s + 1)
                         : linear_combination(0.5, now.at(Field::v, s), 0.5, next.at(Field::v, s + 2));
    const Vector rate = linear_combination(c / cfg.dt, next.at(Field::sigma, s + 2), -c / cfg.dt,
                                           now.at(Field::sigma, s));
    const Vector grad = nodal_derivative(v);
    scale = std::max(scale, norm_inf(grad));
    diffs.push_back(norm_inf(linear_combination(1.0, rate, -1.0, grad)));
  }
  std::vector<double> out;
  for (double d : diffs) {
    out.push_back(scale > 0.0 ? d / scale : d);
  }
  return out;
}

}  // namespace wavelab
