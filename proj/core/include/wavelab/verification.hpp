#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "wavelab/formulations.hpp"
#include "wavelab/integrators.hpp"

namespace wavelab {

/// States of one run, one per step (index n holds the state after n steps).
struct Trajectory {
  std::vector<SchemeState> states;
  std::vector<double> energy;
  std::vector<double> instantaneous_energy;
  SolverStats stats;
};

/// Runs cfg.steps steps from the profile's initial conditions.
Trajectory simulate(const DiscreteSystem& system, const IntegratorConfig& cfg, const Profile& profile,
                    const SolverConfig& solver = {});

/// One side of an equivalence check.
struct Side {
  FormulationSpec spec;
  IntegratorConfig integrator;
};

/// Per-step discrepancies. A NaN entry means the field is not compared.
struct StepDiscrepancy {
  long long step = 0;
  double t = 0.0;
  double q = std::numeric_limits<double>::quiet_NaN();
  double v = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double energy_a = 0.0;
  double energy_b = 0.0;

  double max() const noexcept;
};

struct EquivalenceReport {
  std::string formulation_a;
  std::string formulation_b;
  std::string integrator_a;
  std::string integrator_b;
  long long steps = 0;
  double dt = 0.0;
  double tol = 0.0;
  /// Field name and how it was put in a common representation: identity,
  /// derivative-image, trapezoid-reconstruction or half-step-reconstruction.
  std::vector<std::pair<std::string, std::string>> mapping;
  std::vector<StepDiscrepancy> per_step;
  double max_discrepancy = 0.0;
  bool pass = false;
};

/// Runs both sides with the same dt and profile and compares every field
/// that both sides carry on the same space at the same time stamp.
///
/// Discrepancy of v and sigma: sqrt(1/2 d.W.d / H0) with W the physical mass
/// of the field and H0 the initial energy; of q: sqrt(d.W.d / q0.W.q0) with
/// W the rho-mass. Absolute norms are used when the reference vanishes.
/// Throws InvalidPair when no field is comparable or the sides do not share
/// mesh, material and dt.
EquivalenceReport check_equivalence(const Side& a, const Side& b, const Profile& profile, long long steps, double tol,
                                    const SolverConfig& solver = {}, bool concurrent = true);
/// Both formulations with the same integrator.
EquivalenceReport check_equivalence(const FormulationSpec& a, const FormulationSpec& b,
                                    const IntegratorConfig& integrator, const Profile& profile, long long steps,
                                    double tol, const SolverConfig& solver = {});

struct EnergyTrace {
  std::string form;  // "collocated", "two-time-product" or "recurrence-invariant"
  std::vector<long long> steps;
  std::vector<double> energy;
  std::vector<double> instantaneous;
  double initial = 0.0;
  double max_relative_drift = 0.0;
  bool stable = true;
  /// First step at which the energy exceeded 10x its initial value.
  long long unstable_step = -1;
};

/// Steps until cfg.steps or until the energy grows beyond 10x its initial
/// value, which is reported rather than thrown.
EnergyTrace energy_audit(const DiscreteSystem& system, const IntegratorConfig& cfg, const Profile& profile,
                         const SolverConfig& solver = {});

struct OscillationStudy {
  double amplitude_coarse = 0.0;
  double amplitude_fine = 0.0;
  double ratio = 0.0;
};

/// Peak-to-peak instantaneous leapfrog energy over [0, final_time], relative
/// to the initial energy, at dt and dt/2.
OscillationStudy energy_oscillation_ratio(const DiscreteSystem& system, const Profile& profile, double dt,
                                          double final_time, const SolverConfig& solver = {});

struct StabilityMap {
  std::vector<double> dt;
  std::vector<bool> stable;
  /// 2/sqrt(lambda_max); zero when not computed.
  double predicted = 0.0;
  /// Midpoint between the largest stable and the smallest unstable dt.
  double empirical = 0.0;
};

using StepperFactory = std::function<std::unique_ptr<Stepper>(double dt)>;

/// Marks each dt stable or unstable by energy growth over `steps` steps.
StabilityMap cfl_scan(const StepperFactory& factory, const SchemeState& initial, std::vector<double> dt_grid,
                      long long steps = 2000);
/// Leapfrog scan of a formulation; fills in the predicted threshold.
StabilityMap cfl_scan(const DiscreteSystem& system, const Profile& profile, std::vector<double> dt_grid,
                      long long steps = 2000, const SolverConfig& solver = {});

struct ConvergenceRow {
  Index cells = 0;
  double h = 0.0;
  double dt = 0.0;
  long long steps = 0;
  double error = 0.0;
  /// log2-ratio against the previous row; NaN on the first.
  double order = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
  std::string field;
  std::vector<ConvergenceRow> rows;
};

/// L2 error at final_time against the standing wave, on meshes of the
/// template's domain with the given cell counts (per direction in 2D).
/// dt = dt_over_h * h, rounded down so that final_time is hit exactly.
ConvergenceTable convergence_study(const FormulationSpec& spec_template, Scheme scheme, const Profile& profile,
                                   const std::vector<Index>& cells, double dt_over_h, double final_time,
                                   const SolverConfig& solver = {});

/// max_n |M(u^{n+1} - 2u^n + u^{n-1}) + dt^2 K u^n|_inf over max_n |M u^n|_inf.
std::vector<double> second_difference_residual(const SparseMatrix& mass, const SparseMatrix& stiffness,
                                               const std::vector<Vector>& sequence, double dt);

/// Per step of a 1D mixed-grad run: |c (sigma^{n+1} - sigma^n)/dt - I_W dv/dx|
/// in the max norm, relative to the largest |I_W dv/dx| of the run, where v is the velocity driving
/// the step (half-step value, or the midpoint average) and I_W interpolates
/// the exact derivative at the nodes of W.
std::vector<double> pointwise_identity_residual(const DiscreteSystem& system, const Trajectory& run,
                                                const IntegratorConfig& cfg);

}  // namespace wavelab
