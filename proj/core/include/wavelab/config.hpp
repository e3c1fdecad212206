#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wavelab/errors.hpp"
#include "wavelab/formulations.hpp"
#include "wavelab/integrators.hpp"
#include "wavelab/solvers.hpp"

namespace wavelab {

// Run configuration files.
//
// Grammar: one `key = value` per line inside `[section]` headers. `#` and `;`
// start comments. Keys are unique per section. Lists are comma separated.
//
//   [mesh]        dimension (1|2), x0, x1, n            (1D)
//                 x0, x1, y0, y1, nx, ny                (2D)
//   [formulation] id, degree
//   [integrator]  id, steps, dt | cfl_fraction, gamma, beta,
//                 reconstruction, midpoint_path
//   [material]    rho, k  |  epsilon, mu
//   [profile]     mode, mode_y, amplitude, velocity_amplitude
//   [solver]      method, tolerance, max_iterations, restart, banded_threshold
//   [compare]     formulation, integrator, tol
//   [energy]      max_drift
//   [cfl]         min_fraction, max_fraction, points, steps, max_deviation
//   [converge]    cells, dt_over_h, final_time, expected_order, order_tolerance
//   [output]      dir, prefix
//
// Required: formulation.id, integrator.id, integrator.steps, mesh.n (1D) or
// mesh.nx and mesh.ny (2D).

struct ConfigIssue {
  int line = 0;  // 0 when the problem is not tied to a line
  std::string key;
  std::string message;
};

/// Every problem found in one configuration text.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);

  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

struct DomainConfig {
  int dimension = 1;
  double x0 = 0.0;
  double x1 = 1.0;
  double y0 = 0.0;
  double y1 = 1.0;
  Index nx = 0;
  Index ny = 0;

  MeshPtr build() const;
};

struct CompareConfig {
  std::optional<FormulationKind> formulation;
  /// Integrator of side B; side A's when unset.
  std::optional<Scheme> scheme;
};

struct CflConfig {
  double min_fraction = 0.5;
  double max_fraction = 1.2;
  int points = 71;
  long long steps = 2000;
  double max_deviation = 0.02;
};

struct ConvergeConfig {
  std::vector<Index> cells{16, 32, 64};
  double dt_over_h = 0.5;
  double final_time = 1.0;
  std::optional<double> expected_order;
  double order_tolerance = 0.2;
};

struct RunConfig {
  DomainConfig domain;
  FormulationKind formulation = FormulationKind::lagrangian;
  int degree = 1;
  MaterialParams material;

  Scheme scheme = Scheme::stormer_verlet;
  double gamma = 0.5;
  double beta = 0.0;
  std::optional<Reconstruction> reconstruction;
  MidpointPath midpoint_path = MidpointPath::schur;
  long long steps = 0;
  /// Exactly one of these is set after parsing.
  std::optional<double> dt;
  std::optional<double> cfl_fraction;

  Profile profile;
  SolverConfig solver;
  double tol = 1e-12;
  double max_energy_drift = 1e-10;
  CompareConfig compare;
  CflConfig cfl;
  ConvergeConfig converge;
  std::string output_dir = ".";
  std::string prefix = "wavelab";

  FormulationSpec spec(MeshPtr mesh) const;
  /// Integrator with dt resolved; a CFL fraction is taken of the system's
  /// critical explicit step.
  IntegratorConfig integrator(const DiscreteSystem& system) const;
  IntegratorConfig integrator_with(Scheme scheme, const DiscreteSystem& system) const;
};

/// Parses and validates. Collects all syntax and value errors before
/// throwing ConfigError; afterwards throws CompatibilityViolation or
/// UnsupportedSpace when the formulation cannot be built on the domain.
RunConfig parse_config(std::string_view text);

/// Reads a file and parses it. Throws IoError when it cannot be read.
RunConfig load_config(const std::string& path);

/// Catalog rules relating formulation, degree and dimension.
void check_compatibility(const RunConfig& config);

}  // namespace wavelab
