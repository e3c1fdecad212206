#include "wavelab/formulations.hpp"

#include <cmath>
#include <numbers>

#include "wavelab/errors.hpp"

namespace wavelab {

namespace {

struct KindName {
  FormulationKind kind;
  std::string_view id;
};

constexpr KindName kKindNames[] = {
    {FormulationKind::lagrangian, "lagrangian-2nd-order"},
    {FormulationKind::hamiltonian_vq, "hamiltonian-vq"},
    {FormulationKind::mixed_grad, "mixed-grad-vs"},
    {FormulationKind::mixed_div, "mixed-div-vs"},
    {FormulationKind::three_field, "three-field-vqs"},
    {FormulationKind::velocity_only, "velocity-only-2nd"},
    {FormulationKind::stress_only, "stress-only-2nd"},
    {FormulationKind::maxwell_tm, "maxwell-tm"},
};

Vector negated(Vector x) {
  for (double& v : x) v = -v;
  return x;
}

}  // namespace

std::string_view to_string(FormulationKind kind) noexcept {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.id;
  }
  return "?";
}

std::optional<FormulationKind> parse_formulation_kind(std::string_view id) noexcept {
  for (const auto& entry : kKindNames) {
    if (entry.id == id) return entry.kind;
  }
  return std::nullopt;
}

std::vector<FormulationKind> all_formulation_kinds() {
  std::vector<FormulationKind> kinds;
  for (const auto& entry : kKindNames) kinds.push_back(entry.kind);
  return kinds;
}

bool is_grad_kind(FormulationKind kind) noexcept {
  switch (kind) {
    case FormulationKind::lagrangian:
    case FormulationKind::hamiltonian_vq:
    case FormulationKind::mixed_grad:
    case FormulationKind::velocity_only:
    case FormulationKind::maxwell_tm:
      return true;
    default:
      return false;
  }
}

// ------------------------------------------------------------------ Profile

void Profile::validate() const {
  if (mode < 0 || mode_y < 0) {
    throw InvalidArgument("profile mode numbers must be non-negative");
  }
  if (!std::isfinite(amplitude) || !std::isfinite(velocity_amplitude)) {
    throw InvalidArgument("profile amplitudes must be finite");
  }
}

namespace {

struct Box {
  double x0, lx, y0, ly;
};

Box bounding_box(const Mesh& mesh) {
  double xmin = mesh.vertex(0)[0], xmax = xmin, ymin = mesh.vertex(0)[1], ymax = ymin;
  for (Index i = 1; i < mesh.num_vertices(); ++i) {
    const Point& p = mesh.vertex(i);
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  return {xmin, xmax - xmin, ymin, ymax - ymin};
}

}  // namespace

double Profile::shape(const Mesh& mesh, const Point& x) const {
  const Box box = bounding_box(mesh);
  double s = std::sin(mode * std::numbers::pi * (x[0] - box.x0) / box.lx);
  if (mesh.dimension() == 2) {
    s *= std::sin(mode_y * std::numbers::pi * (x[1] - box.y0) / box.ly);
  }
  return s;
}

double Profile::omega(const Mesh& mesh, const MaterialParams& material) const {
  const Box box = bounding_box(mesh);
  double wave_number_sq = std::pow(mode * std::numbers::pi / box.lx, 2);
  if (mesh.dimension() == 2) {
    wave_number_sq += std::pow(mode_y * std::numbers::pi / box.ly, 2);
  }
  return std::sqrt(wave_number_sq * material.k_stiff() / material.rho());
}

double Profile::exact_q(const Mesh& mesh, const MaterialParams& material, const Point& x, double t) const {
  const double w = omega(mesh, material);
  const double s = shape(mesh, x);
  const double velocity_part = w > 0.0 ? velocity_amplitude / w * std::sin(w * t) : velocity_amplitude * t;
  return s * (amplitude * std::cos(w * t) + velocity_part);
}

double Profile::exact_v(const Mesh& mesh, const MaterialParams& material, const Point& x, double t) const {
  const double w = omega(mesh, material);
  const double s = shape(mesh, x);
  return s * (-amplitude * w * std::sin(w * t) + velocity_amplitude * std::cos(w * t));
}

// ----------------------------------------------------------- DiscreteSystem

DiscreteSystem::DiscreteSystem(FormulationSpec spec) : spec_(std::move(spec)) {
  if (!spec_.mesh) {
    throw InvalidArgument("formulation needs a mesh");
  }
  if (spec_.mesh->dimension() == 2 && spec_.degree != 1) {
    throw UnsupportedSpace("2D formulations use the lowest-order spaces (degree 1)");
  }
  if (spec_.kind == FormulationKind::maxwell_tm) {
    build_maxwell();
  } else if (is_grad_kind(spec_.kind)) {
    build_grad();
  } else {
    build_div();
  }
}

void DiscreteSystem::build_grad() {
  const MeshPtr& mesh = spec_.mesh;
  const MaterialParams& mat = spec_.material;
  if (spec_.kind == FormulationKind::mixed_grad && mesh->dimension() != 1) {
    throw CompatibilityViolation(
        "mixed-grad needs W equal to the gradient image of V; no standard 2D space provides it");
  }
  FunctionSpace v_space = make_space(mesh, Family::continuous_lagrange, spec_.degree, BoundaryCondition::dirichlet);
  FunctionSpace w_space = mesh->dimension() == 1
                              ? derivative_space(v_space)
                              : make_space(mesh, Family::discontinuous_lagrange, 0, BoundaryCondition::none,
                                           ValueShape::vector);
  mass_v_ = assemble_mass(v_space, mat.rho());
  mass_q_ = mass_v_;
  stiffness_ = assemble_stiffness_grad(v_space, mat.k_stiff());
  gradient_map_ = assemble_coupling_grad(w_space, v_space);
  gradient_mass_ = assemble_mass(w_space, 1.0);
  mass_sigma_ = assemble_mass(w_space, mat.compliance());

  switch (spec_.kind) {
    case FormulationKind::lagrangian:
    case FormulationKind::velocity_only:
      second_ = SecondOrderSystem{mass_v_, stiffness_};
      break;
    case FormulationKind::hamiltonian_vq: {
      const SparseMatrix identity = SparseMatrix::identity(v_space.dof_count());
      first_ = FirstOrderSystem{mass_v_, stiffness_.scaled(-1.0), identity, identity, stiffness_, Field::v, Field::q,
                                false};
      break;
    }
    case FormulationKind::mixed_grad:
      stress_space_ = w_space;
      coupling_ = gradient_map_;
      first_ = FirstOrderSystem{mass_v_, coupling_.transpose().scaled(-1.0), mass_sigma_, coupling_, mass_sigma_,
                                Field::v, Field::sigma, true};
      break;
    default:
      break;
  }
  primal_space_ = v_space;
  gradient_container_ = w_space;
  velocity_space_ = std::move(v_space);
}

void DiscreteSystem::build_div() {
  const MeshPtr& mesh = spec_.mesh;
  const MaterialParams& mat = spec_.material;
  FunctionSpace s_space = mesh->dimension() == 1
                              ? make_space(mesh, Family::continuous_lagrange, spec_.degree)
                              : make_space(mesh, Family::raviart_thomas, 0, BoundaryCondition::none,
                                           ValueShape::vector);
  FunctionSpace w_space = derivative_space(s_space);
  mass_v_ = assemble_mass(w_space, mat.rho());
  mass_q_ = mass_v_;
  mass_sigma_ = assemble_mass(s_space, mat.compliance());
  coupling_ = assemble_coupling_div(w_space, s_space);
  stiffness_ = assemble_stiffness_div(s_space, mat.specific_volume());

  switch (spec_.kind) {
    case FormulationKind::mixed_div:
      first_ = FirstOrderSystem{mass_v_, coupling_, mass_sigma_, coupling_.transpose().scaled(-1.0), mass_sigma_,
                                Field::v, Field::sigma, true};
      break;
    case FormulationKind::three_field:
      constrained_ = ConstrainedSystem{mass_v_, coupling_, mass_sigma_};
      break;
    case FormulationKind::stress_only:
      second_ = SecondOrderSystem{mass_sigma_, stiffness_};
      break;
    default:
      break;
  }
  stress_space_ = std::move(s_space);
  primal_space_ = w_space;
  velocity_space_ = std::move(w_space);
}

void DiscreteSystem::build_maxwell() {
  const MeshPtr& mesh = spec_.mesh;
  if (mesh->dimension() != 2) {
    throw InvalidArgument("the transverse-mode Maxwell adapter needs a 2D mesh");
  }
  const MaterialParams& mat = spec_.material;
  FunctionSpace e_space = make_space(mesh, Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
  FunctionSpace h_space =
      make_space(mesh, Family::discontinuous_lagrange, 0, BoundaryCondition::none, ValueShape::vector);
  mass_v_ = assemble_mass(e_space, mat.rho());
  mass_sigma_ = assemble_mass(h_space, mat.compliance());
  // Scalar curl = gradient rotated by (a, b) -> (b, -a).
  coupling_ = rotate_vector_rows(assemble_coupling_grad(h_space, e_space));
  stiffness_ = assemble_stiffness_grad(e_space, mat.k_stiff());
  first_ = FirstOrderSystem{mass_v_, coupling_.transpose(), mass_sigma_, coupling_.scaled(-1.0), mass_sigma_,
                            Field::v, Field::sigma, false};
  stress_space_ = std::move(h_space);
  velocity_space_ = std::move(e_space);
}

const FunctionSpace& DiscreteSystem::stress_space() const {
  if (!stress_space_) {
    throw InvalidState(std::string(to_string(spec_.kind)) + " has no stress space");
  }
  return *stress_space_;
}

const FunctionSpace& DiscreteSystem::primal_space() const {
  if (!primal_space_) {
    throw InvalidState(std::string(to_string(spec_.kind)) + " has no displacement space");
  }
  return *primal_space_;
}

const SparseMatrix& DiscreteSystem::mass_stress() const {
  if (!stress_space_) {
    throw InvalidState(std::string(to_string(spec_.kind)) + " has no stress space");
  }
  return mass_sigma_;
}

const SparseMatrix& DiscreteSystem::coupling() const {
  if (coupling_.empty()) {
    throw InvalidState(std::string(to_string(spec_.kind)) + " has no coupling block");
  }
  return coupling_;
}

SecondOrderSystem DiscreteSystem::effective_second_order() const {
  switch (spec_.kind) {
    case FormulationKind::lagrangian:
    case FormulationKind::hamiltonian_vq:
    case FormulationKind::velocity_only:
      return {mass_v_, stiffness_};
    case FormulationKind::stress_only:
      return {mass_sigma_, stiffness_};
    case FormulationKind::mixed_grad:
    case FormulationKind::maxwell_tm:
      // M_x x'' = -B^T M_y^{-1} B x with B = G or C.
      return {mass_v_, multiply(coupling_.transpose(), multiply(block_diagonal_inverse(mass_sigma_), coupling_))
                           .symmetrized()};
    case FormulationKind::mixed_div:
    case FormulationKind::three_field:
      return {mass_sigma_,
              multiply(coupling_.transpose(), multiply(block_diagonal_inverse(mass_v_), coupling_)).symmetrized()};
  }
  throw InvalidState("unknown formulation kind");
}

std::vector<std::pair<Field, Index>> DiscreteSystem::layout() const {
  const Index nv = velocity_space_->dof_count();
  std::vector<std::pair<Field, Index>> out;
  switch (spec_.kind) {
    case FormulationKind::lagrangian:
      return {{Field::q, nv}, {Field::v, nv}, {Field::a, nv}};
    case FormulationKind::hamiltonian_vq:
      return {{Field::v, nv}, {Field::q, nv}, {Field::p, nv}};
    case FormulationKind::mixed_grad:
      return {{Field::v, nv}, {Field::sigma, stress_space_->dof_count()}, {Field::q, nv}};
    case FormulationKind::velocity_only:
      return {{Field::v, nv}, {Field::a, nv}};
    case FormulationKind::mixed_div:
    case FormulationKind::three_field:
      return {{Field::v, nv}, {Field::q, nv}, {Field::sigma, stress_space_->dof_count()}};
    case FormulationKind::stress_only:
      return {{Field::sigma, stress_space_->dof_count()}, {Field::sigma_rate, stress_space_->dof_count()}};
    case FormulationKind::maxwell_tm:
      return {{Field::v, nv}, {Field::sigma, stress_space_->dof_count()}};
  }
  return out;
}

Vector DiscreteSystem::stress_from_displacement(std::span<const double> q) const {
  if (!gradient_container_) {
    throw InvalidState(std::string(to_string(spec_.kind)) + " has no displacement gradient");
  }
  SolverConfig cfg;
  const LinearSolver mw(gradient_mass_, cfg);
  return scaled(spec_.material.k_stiff(), mw.solve(gradient_map_ * q));
}

Vector DiscreteSystem::momentum(std::span<const double> v) const { return mass_v_ * v; }

std::shared_ptr<const DiscreteSystem> build_formulation(const FormulationSpec& spec) {
  return std::make_shared<const DiscreteSystem>(spec);
}

std::shared_ptr<const DiscreteSystem> maxwell_tm_adapter(const FormulationSpec& spec) {
  FormulationSpec maxwell = spec;
  maxwell.kind = FormulationKind::maxwell_tm;
  return build_formulation(maxwell);
}

SparseMatrix rotate_vector_rows(const SparseMatrix& m) {
  if (m.rows() % 2 != 0) {
    throw LayoutMismatch("vector DG0 row space has an even number of rows");
  }
  std::vector<Triplet> triplets;
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (Index i = 0; i < m.rows(); ++i) {
    // Row 2c takes the y-row, row 2c+1 the negated x-row.
    const bool is_x = i % 2 == 0;
    const Index target = is_x ? i + 1 : i - 1;
    const double sign = is_x ? -1.0 : 1.0;
    for (Index k = offsets[static_cast<std::size_t>(i)]; k < offsets[static_cast<std::size_t>(i + 1)]; ++k) {
      triplets.push_back({target, cols[static_cast<std::size_t>(k)], sign * vals[static_cast<std::size_t>(k)]});
    }
  }
  return SparseMatrix::from_triplets(m.rows(), m.cols(), std::move(triplets), 0.0);
}

// ------------------------------------------------------- initial conditions

SchemeState initial_conditions(const DiscreteSystem& system, const Profile& profile, const SolverConfig& solver) {
  profile.validate();
  const Mesh& mesh = system.velocity_space().mesh();
  auto q_profile = [&](const Point& x) { return profile.amplitude * profile.shape(mesh, x); };
  auto v_profile = [&](const Point& x) { return profile.velocity_amplitude * profile.shape(mesh, x); };

  SchemeState state;
  const FormulationKind kind = system.kind();
  if (kind == FormulationKind::maxwell_tm) {
    state.set(Field::v, 0, interpolate(system.velocity_space(), q_profile));
    state.set(Field::sigma, 0, Vector(static_cast<std::size_t>(system.stress_space().dof_count()), 0.0));
    return state;
  }

  const Vector q0 = interpolate(system.primal_space(), q_profile);
  const Vector v0 = interpolate(system.velocity_space(), v_profile);
  if (is_grad_kind(kind)) {
    const LinearSolver mass(system.mass_velocity(), solver);
    state.set(Field::q, 0, q0);
    state.set(Field::v, 0, v0);
    state.set(Field::a, 0, mass.solve(negated(system.stiffness() * q0)));
    state.set(Field::sigma, 0, system.stress_from_displacement(q0));
    if (kind == FormulationKind::hamiltonian_vq) {
      state.set(Field::p, 0, system.momentum(v0));
    }
    return state;
  }
  const LinearSolver mass_c(system.mass_stress(), solver);
  const SparseMatrix div_t = system.coupling().transpose();
  state.set(Field::q, 0, q0);
  state.set(Field::v, 0, v0);
  state.set(Field::sigma, 0, mass_c.solve(negated(div_t * q0)));
  state.set(Field::sigma_rate, 0, mass_c.solve(negated(div_t * v0)));
  return state;
}

// ------------------------------------------------------------------ energy

double collocated_energy(const DiscreteSystem& system, const SchemeState& state) {
  const long long s = 2 * state.step;
  switch (system.kind()) {
    case FormulationKind::lagrangian:
    case FormulationKind::hamiltonian_vq:
    case FormulationKind::velocity_only:
      return 0.5 * quadratic_form(system.mass_velocity(), state.at(Field::v, s)) +
             0.5 * quadratic_form(system.stiffness(), state.at(Field::q, s));
    default:
      return 0.5 * quadratic_form(system.mass_velocity(), state.at(Field::v, s)) +
             0.5 * quadratic_form(system.mass_stress(), state.at(Field::sigma, s));
  }
}

double energy(const DiscreteSystem& system, const SchemeState& state, const IntegratorConfig& cfg) {
  const long long s = 2 * state.step;
  const double dt = cfg.dt;
  auto recurrence = [&](const SparseMatrix& m, const SparseMatrix& k, Field f, long long top) {
    const Vector& cur = state.at(f, top);
    const Vector& prev = state.at(f, top - 2);
    const Vector w = linear_combination(1.0 / dt, cur, -1.0 / dt, prev);
    if (cfg.scheme == Scheme::implicit_midpoint) {
      const Vector mean = linear_combination(0.5, cur, 0.5, prev);
      return 0.5 * quadratic_form(m, w) + 0.5 * quadratic_form(k, mean);
    }
    return 0.5 * quadratic_form(m, w) + 0.5 * bilinear_form(k, prev, cur);
  };
  switch (system.kind()) {
    case FormulationKind::lagrangian:
      if (cfg.scheme == Scheme::newmark) {
        return collocated_energy(system, state);
      }
      return recurrence(system.mass_velocity(), system.stiffness(), Field::q, s);
    case FormulationKind::velocity_only:
      return recurrence(system.mass_velocity(), system.stiffness(), Field::v, cfg.staggered() ? s + 1 : s);
    case FormulationKind::stress_only:
      return recurrence(system.mass_stress(), system.stiffness(), Field::sigma, s);
    default:
      break;
  }
  const FirstOrderSystem* fo = system.first_order() ? &*system.first_order() : nullptr;
  const SparseMatrix& mx = system.mass_velocity();
  const SparseMatrix& ey = fo ? fo->energy_y : system.mass_stress();
  const Field y_field = fo ? fo->y_field : Field::sigma;
  const double ev = cfg.staggered() ? bilinear_form(mx, state.at(Field::v, s - 1), state.at(Field::v, s + 1))
                                    : quadratic_form(mx, state.at(Field::v, s));
  return 0.5 * ev + 0.5 * quadratic_form(ey, state.at(y_field, s));
}

// ----------------------------------------------------------------- steppers

std::unique_ptr<Stepper> make_stepper(const DiscreteSystem& system, const IntegratorConfig& cfg,
                                      const SolverConfig& solver) {
  cfg.validate();
  const FormulationKind kind = system.kind();
  const bool midpoint = cfg.scheme == Scheme::implicit_midpoint;
  switch (kind) {
    case FormulationKind::lagrangian:
      if (cfg.scheme == Scheme::newmark) {
        return make_newmark(*system.second_order(), cfg, solver);
      }
      return make_recurrence(*system.second_order(), {Field::q, Field::v, false}, cfg, solver);
    case FormulationKind::velocity_only:
      if (cfg.scheme == Scheme::newmark) break;
      return make_recurrence(*system.second_order(), {Field::v, Field::a, !midpoint}, cfg, solver);
    case FormulationKind::stress_only:
      if (cfg.scheme == Scheme::newmark) break;
      return make_recurrence(*system.second_order(), {Field::sigma, Field::sigma_rate, false}, cfg, solver);
    case FormulationKind::three_field:
      if (cfg.scheme == Scheme::newmark) break;
      return make_three_field(*system.constrained(), cfg, solver);
    default:
      if (cfg.scheme == Scheme::newmark) break;
      if (midpoint) {
        return make_midpoint(*system.first_order(), cfg, solver);
      }
      return make_stormer_verlet(*system.first_order(), cfg, solver);
  }
  throw InvalidArgument("the Newmark family applies to the second-order displacement form only; " +
                        std::string(to_string(kind)) + " runs with leapfrog or implicit-midpoint");
}

// ------------------------------------------------------------- observation

std::vector<Observation> observe(const DiscreteSystem& system, const SchemeState& state) {
  std::vector<Observation> out;
  const std::string v_tag = system.velocity_space().describe();
  const std::string q_tag = system.primal_space_ ? system.primal_space_->describe() : v_tag;
  const std::string s_tag = system.stress_space_ ? system.stress_space_->describe()
                                                  : (system.gradient_container_ ? system.gradient_container_->describe()
                                                                                 : std::string());
  const SparseMatrix* sigma_weight = system.mass_sigma_.empty() ? nullptr : &system.mass_sigma_;
  for (const FieldSlot& slot : state.slots()) {
    switch (slot.field) {
      case Field::q:
        out.push_back({slot.field, slot.stamp2, slot.values, q_tag, &system.mass_q_});
        break;
      case Field::v:
      case Field::a:
        out.push_back({slot.field, slot.stamp2, slot.values, v_tag, &system.mass_v_});
        break;
      case Field::sigma:
      case Field::sigma_rate:
        out.push_back({slot.field, slot.stamp2, slot.values, s_tag, sigma_weight});
        break;
      case Field::p:
        out.push_back({slot.field, slot.stamp2, slot.values, v_tag + " (dual)", nullptr});
        break;
    }
  }
  // Derived stress image and momentum on the grad side.
  if (system.gradient_container_ && system.kind() != FormulationKind::mixed_grad &&
      system.kind() != FormulationKind::maxwell_tm) {
    for (const FieldSlot& slot : state.slots()) {
      if (slot.field == Field::q && !state.find(Field::sigma, slot.stamp2)) {
        out.push_back({Field::sigma, slot.stamp2, system.stress_from_displacement(slot.values), s_tag, sigma_weight});
      }
    }
  }
  if (system.kind() == FormulationKind::hamiltonian_vq) {
    for (const FieldSlot& slot : state.slots()) {
      if (slot.field == Field::v && !state.find(Field::p, slot.stamp2)) {
        out.push_back({Field::p, slot.stamp2, system.momentum(slot.values), v_tag + " (dual)", nullptr});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------- CFL

double max_generalized_eigenvalue(const DiscreteSystem& system, const SolverConfig& solver) {
  const SecondOrderSystem eff = system.effective_second_order();
  return power_iteration_genevp(eff.stiffness, eff.mass, 1e-12, solver);
}

double critical_time_step(const DiscreteSystem& system, const SolverConfig& solver) {
  const double lambda = max_generalized_eigenvalue(system, solver);
  if (!(lambda > 0.0)) {
    throw InvalidState("stiffness has no positive eigenvalue; every step is stable");
  }
  return 2.0 / std::sqrt(lambda);
}

}  // namespace wavelab
