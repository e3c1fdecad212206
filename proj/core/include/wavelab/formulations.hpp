#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wavelab/assembly.hpp"
#include "wavelab/function_space.hpp"
#include "wavelab/integrators.hpp"
#include "wavelab/mesh.hpp"
#include "wavelab/solvers.hpp"

namespace wavelab {

enum class FormulationKind {
  lagrangian,      // M q'' = -K q
  hamiltonian_vq,  // (v, q), q in V
  mixed_grad,      // (v, sigma) in V(grad) x W
  mixed_div,       // (v, sigma) in W x V(div)
  three_field,     // (v, q, sigma) in W x W x V(div)
  velocity_only,   // M v'' = -K v
  stress_only,     // M_c sigma'' = -nu K_div sigma
  maxwell_tm,      // (E_z, H) in CG1_0 x vector DG0
};

/// Stable IDs: "lagrangian-2nd-order", "hamiltonian-vq", "mixed-grad-vs",
/// "mixed-div-vs", "three-field-vqs", "velocity-only-2nd", "stress-only-2nd",
/// "maxwell-tm".
std::string_view to_string(FormulationKind kind) noexcept;
std::optional<FormulationKind> parse_formulation_kind(std::string_view id) noexcept;
std::vector<FormulationKind> all_formulation_kinds();

/// True for kinds whose velocity lives in the continuous space V(grad).
bool is_grad_kind(FormulationKind kind) noexcept;

struct FormulationSpec {
  FormulationKind kind = FormulationKind::lagrangian;
  MeshPtr mesh;
  /// Degree of the continuous (grad kinds) or H(div) space (div kinds). In 2D
  /// only the lowest order is available and this must be 1.
  int degree = 1;
  /// Maxwell reads epsilon from rho and mu from the compliance.
  MaterialParams material;
};

/// Standing-mode initial data:
///   q0 = amplitude * S,  v0 = velocity_amplitude * S,
///   S = sin(m pi (x - x0)/Lx) [* sin(m_y pi (y - y0)/Ly) in 2D].
struct Profile {
  int mode = 1;
  int mode_y = 1;
  double amplitude = 1.0;
  double velocity_amplitude = 0.0;

  void validate() const;
  double shape(const Mesh& mesh, const Point& x) const;
  /// Angular frequency of the continuous standing wave.
  double omega(const Mesh& mesh, const MaterialParams& material) const;
  /// Continuous solution q(x, t) and v(x, t).
  double exact_q(const Mesh& mesh, const MaterialParams& material, const Point& x, double t) const;
  double exact_v(const Mesh& mesh, const MaterialParams& material, const Point& x, double t) const;
};

/// One observable component of a state, tagged with its space so that
/// different formulations can be compared field by field.
struct Observation {
  Field field;
  long long stamp2;
  Vector values;
  std::string space;
  /// Mass matrix with the physical coefficient on this field's space; null
  /// for dual quantities such as the momentum.
  const SparseMatrix* weight = nullptr;
};

/// Assembled matrices of one formulation.
///
/// Grad kinds: V = CG-k with Dirichlet, W = gradient container of V.
/// Div kinds: V(div) = 1D CG-k without boundary condition or RT0, W = its
/// divergence image. Maxwell stores E in the v slot and H in the sigma slot.
class DiscreteSystem {
 public:
  explicit DiscreteSystem(FormulationSpec spec);

  const FormulationSpec& spec() const noexcept { return spec_; }
  FormulationKind kind() const noexcept { return spec_.kind; }

  /// Space of the velocity, of the stress and of the primal variable q.
  const FunctionSpace& velocity_space() const noexcept { return *velocity_space_; }
  const FunctionSpace& stress_space() const;
  const FunctionSpace& primal_space() const;
  bool has_stress_space() const noexcept { return stress_space_.has_value(); }

  /// rho-weighted mass on the velocity space (epsilon for Maxwell).
  const SparseMatrix& mass_velocity() const noexcept { return mass_v_; }
  /// c-weighted mass on the stress space (mu for Maxwell).
  const SparseMatrix& mass_stress() const;
  /// k K_grad (grad kinds) or nu K_div (div kinds) on the primary space.
  const SparseMatrix& stiffness() const noexcept { return stiffness_; }
  /// G (mixed-grad), D (div kinds) or the rotated gradient C (Maxwell).
  const SparseMatrix& coupling() const;

  /// Blocks handed to the steppers.
  const std::optional<SecondOrderSystem>& second_order() const noexcept { return second_; }
  const std::optional<FirstOrderSystem>& first_order() const noexcept { return first_; }
  const std::optional<ConstrainedSystem>& constrained() const noexcept { return constrained_; }

  /// (M, K_eff) whose top generalized eigenvalue bounds the explicit step.
  SecondOrderSystem effective_second_order() const;

  /// Fields of the collocated state at t = 0 and their lengths.
  std::vector<std::pair<Field, Index>> layout() const;

  /// k M_W^{-1} G q: the discrete stress image of a grad-side displacement.
  Vector stress_from_displacement(std::span<const double> q) const;
  /// p = M_rho v.
  Vector momentum(std::span<const double> v) const;

 private:
  void build_grad();
  void build_div();
  void build_maxwell();

  FormulationSpec spec_;
  std::optional<FunctionSpace> velocity_space_;
  std::optional<FunctionSpace> stress_space_;
  std::optional<FunctionSpace> primal_space_;
  std::optional<FunctionSpace> gradient_container_;
  SparseMatrix mass_v_;
  SparseMatrix mass_sigma_;
  SparseMatrix mass_q_;
  SparseMatrix stiffness_;
  SparseMatrix coupling_;
  SparseMatrix gradient_map_;
  SparseMatrix gradient_mass_;
  std::optional<SecondOrderSystem> second_;
  std::optional<FirstOrderSystem> first_;
  std::optional<ConstrainedSystem> constrained_;

  friend std::vector<Observation> observe(const DiscreteSystem&, const SchemeState&);
};

/// Assembles every block of the formulation. Throws CompatibilityViolation
/// for mixed-grad off 1D and UnsupportedSpace for unavailable spaces.
std::shared_ptr<const DiscreteSystem> build_formulation(const FormulationSpec& spec);

/// The transverse-mode Maxwell system. Throws InvalidArgument unless the mesh
/// is two-dimensional.
std::shared_ptr<const DiscreteSystem> maxwell_tm_adapter(const FormulationSpec& spec);

/// Collocated state at stamp 0: q0 and v0 by interpolation; grad kinds get
/// sigma0 = k M_W^{-1} G q0, div kinds sigma0 = -M_c^{-1} D^T q0. Rates used
/// by the reduced recurrences (a, sigma_rate) are included.
SchemeState initial_conditions(const DiscreteSystem& system, const Profile& profile,
                               const SolverConfig& solver = {});

/// Physical energy of a collocated state at stamp 2*step.
double collocated_energy(const DiscreteSystem& system, const SchemeState& state);

/// Energy conserved by the scheme for a state produced by make_stepper:
/// collocated quadratic form, or the two-time product for staggered states.
double energy(const DiscreteSystem& system, const SchemeState& state, const IntegratorConfig& cfg);

/// The stepper realizing cfg on this formulation.
///   lagrangian: newmark, leapfrog (three-term recurrence), implicit midpoint
///               (averaged recurrence);
///   velocity-only / stress-only: leapfrog and implicit midpoint recurrences;
///   first-order kinds: Stormer-Verlet and implicit midpoint.
std::unique_ptr<Stepper> make_stepper(const DiscreteSystem& system, const IntegratorConfig& cfg,
                                      const SolverConfig& solver = {});

/// Observable fields of a state, including derived ones: the momentum and the
/// stress image of q for grad kinds.
std::vector<Observation> observe(const DiscreteSystem& system, const SchemeState& state);

/// Largest generalized eigenvalue of effective_second_order() and the
/// matching leapfrog limit 2/sqrt(lambda_max).
double max_generalized_eigenvalue(const DiscreteSystem& system, const SolverConfig& solver = {});
double critical_time_step(const DiscreteSystem& system, const SolverConfig& solver = {});

/// Rotation (a, b) -> (b, -a) applied cellwise to a vector DG0 row space.
SparseMatrix rotate_vector_rows(const SparseMatrix& m);

}  // namespace wavelab
