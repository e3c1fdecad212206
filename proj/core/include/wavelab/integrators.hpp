#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavelab/solvers.hpp"
#include "wavelab/sparse.hpp"

namespace wavelab {

/// State components. sigma_rate is the time derivative of sigma, used only to
/// start the stress-only recurrences.
enum class Field { q, v, a, p, sigma, sigma_rate };

std::string_view to_string(Field field) noexcept;

/// One component vector with its time stamp counted in half steps:
/// stamp 2n is t^n, stamp 2n+1 is t^{n+1/2}.
struct FieldSlot {
  Field field;
  long long stamp2;
  Vector values;
};

class SchemeState {
 public:
  long long step = 0;

  const FieldSlot* find(Field field, long long stamp2) const noexcept;
  bool has(Field field) const noexcept;
  /// Throws InvalidState when the slot is missing.
  const Vector& at(Field field, long long stamp2) const;
  /// Slot of the field with the largest stamp.
  const FieldSlot& latest(Field field) const;
  /// Slot of the field with the smallest stamp.
  const FieldSlot& earliest(Field field) const;

  /// Replaces the slot with the same field and stamp, or appends one.
  void set(Field field, long long stamp2, Vector values);
  void erase(Field field);

  std::span<const FieldSlot> slots() const noexcept { return slots_; }

 private:
  std::vector<FieldSlot> slots_;
};

enum class Scheme { newmark, leapfrog, stormer_verlet, implicit_midpoint };
enum class Reconstruction { none, trapezoidal, half_step };
enum class MidpointPath { schur, monolithic };

std::string_view to_string(Scheme scheme) noexcept;
std::string_view to_string(Reconstruction mode) noexcept;
std::string_view to_string(MidpointPath path) noexcept;
std::optional<Scheme> parse_scheme(std::string_view name) noexcept;
std::optional<Reconstruction> parse_reconstruction(std::string_view name) noexcept;
std::optional<MidpointPath> parse_midpoint_path(std::string_view name) noexcept;

struct IntegratorConfig {
  Scheme scheme = Scheme::stormer_verlet;
  double dt = 0.0;
  double gamma = 0.5;
  double beta = 0.0;
  long long steps = 0;
  /// Unset: half-step for staggered schemes, trapezoidal for midpoint.
  std::optional<Reconstruction> reconstruction;
  MidpointPath midpoint_path = MidpointPath::schur;

  static IntegratorConfig leapfrog(double dt, long long steps);
  static IntegratorConfig midpoint(double dt, long long steps);
  static IntegratorConfig newmark(double dt, double gamma, double beta, long long steps);

  /// dt > 0 and finite; leapfrog and Stormer-Verlet carry (1/2, 0), implicit
  /// midpoint carries (1/2, 1/4); reconstruction agrees with the scheme.
  void validate() const;
  bool staggered() const noexcept { return scheme == Scheme::leapfrog || scheme == Scheme::stormer_verlet; }
  Reconstruction effective_reconstruction() const noexcept;
  /// Short name, e.g. "newmark(0.5,0.25)".
  std::string label() const;
};

/// M u'' = -K u.
struct SecondOrderSystem {
  SparseMatrix mass;
  SparseMatrix stiffness;
};

/// M_x x' = A y, M_y y' = B x, with energy 1/2 x.M_x.x + 1/2 y.E_y.y.
struct FirstOrderSystem {
  SparseMatrix mass_x;
  SparseMatrix coupling_xy;
  SparseMatrix mass_y;
  SparseMatrix coupling_yx;
  SparseMatrix energy_y;
  Field x_field = Field::v;
  Field y_field = Field::sigma;
  /// The primal variable q lives in the x space and is recovered from x.
  bool primal_from_x = false;
};

/// Three-field form in (v, q, sigma):
///   M_rho v' = D sigma,   q' = v,   M_c sigma = -D^T q.
struct ConstrainedSystem {
  SparseMatrix mass_v;
  SparseMatrix div;
  SparseMatrix mass_sigma;
};

/// A time stepper for one discrete system. States produced by start() carry
/// the scheme's own staggering; step() advances by +dt or, with
/// direction = -1, by -dt.
class Stepper {
 public:
  virtual ~Stepper() = default;

  /// Builds the starting state from collocated data at stamp 0.
  virtual SchemeState start(const SchemeState& initial) const = 0;
  virtual void step(SchemeState& state, int direction = 1) const = 0;
  /// Quadratic form conserved (exactly or to solver tolerance) by the scheme.
  virtual double energy(const SchemeState& state) const = 0;
  /// Energy at the current integer step; equals energy() for collocated schemes.
  virtual double instantaneous_energy(const SchemeState& state) const = 0;

  const IntegratorConfig& config() const noexcept { return cfg_; }
  const SolverStats& stats() const noexcept { return stats_; }

 protected:
  Stepper(IntegratorConfig cfg, SolverConfig solver);
  double signed_dt(int direction) const;

  IntegratorConfig cfg_;
  SolverConfig solver_;
  mutable SolverStats stats_;
};

/// Newmark family on (q, v, a), collocated.
std::unique_ptr<Stepper> make_newmark(SecondOrderSystem system, const IntegratorConfig& cfg,
                                      const SolverConfig& solver = {});
/// Staggered leapfrog on a first-order pair: x at half steps, y at integer steps.
std::unique_ptr<Stepper> make_stormer_verlet(FirstOrderSystem system, const IntegratorConfig& cfg,
                                             const SolverConfig& solver = {});
/// Implicit midpoint on a first-order pair.
std::unique_ptr<Stepper> make_midpoint(FirstOrderSystem system, const IntegratorConfig& cfg,
                                       const SolverConfig& solver = {});
/// Three-field schemes: staggered for leapfrog tags, midpoint otherwise.
std::unique_ptr<Stepper> make_three_field(ConstrainedSystem system, const IntegratorConfig& cfg,
                                          const SolverConfig& solver = {});

/// Literal three-term recurrences on one field u with M u'' = -K u.
///   leapfrog:  M(u+ - 2u + u-) = -dt^2 K u
///   midpoint:  M(u+ - 2u + u-) = -dt^2 K (u+ + 2u + u-)/4
/// The recurrence is started from u and its rate at stamp 0. Staggered
/// recurrences keep u at half steps.
struct RecurrenceSpec {
  Field field = Field::q;
  Field rate_field = Field::v;
  bool staggered = false;
};
std::unique_ptr<Stepper> make_recurrence(SecondOrderSystem system, RecurrenceSpec spec, const IntegratorConfig& cfg,
                                         const SolverConfig& solver = {});

/// One Newmark update of a collocated (q, v, a) state.
SchemeState newmark_step(const SparseMatrix& mass, const SparseMatrix& stiffness, const SchemeState& state,
                         const IntegratorConfig& cfg, const SolverConfig& solver = {});
/// One staggered update. Throws InvalidState unless x sits at two half steps.
SchemeState stormer_verlet_step(const FirstOrderSystem& system, const SchemeState& state, const IntegratorConfig& cfg,
                                const SolverConfig& solver = {});
/// One implicit midpoint update. Throws InvalidState on a staggered state.
SchemeState midpoint_step(const FirstOrderSystem& system, const SchemeState& state, const IntegratorConfig& cfg,
                          const SolverConfig& solver = {});

/// Displacement update from velocity samples.
///   trapezoidal: q + dt/2 (v_begin + v_end)  (v_begin = v^n, v_end = v^{n+1})
///   half_step:   q + dt v_begin              (v_begin = v^{n+1/2}, v_end empty)
/// The requested mode must match the scheme of cfg, else InvalidState.
Vector trapezoidal_reconstruct(std::span<const double> q, std::span<const double> v_begin,
                               std::span<const double> v_end, const IntegratorConfig& cfg, Reconstruction mode);

}  // namespace wavelab
