#include "wavelab/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wavelab/errors.hpp"

namespace wavelab {

std::string_view to_string(Field field) noexcept {
  switch (field) {
    case Field::q:
      return "q";
    case Field::v:
      return "v";
    case Field::a:
      return "a";
    case Field::p:
      return "p";
    case Field::sigma:
      return "sigma";
    case Field::sigma_rate:
      return "sigma_rate";
  }
  return "?";
}

const FieldSlot* SchemeState::find(Field field, long long stamp2) const noexcept {
  for (const auto& slot : slots_) {
    if (slot.field == field && slot.stamp2 == stamp2) {
      return &slot;
    }
  }
  return nullptr;
}

bool SchemeState::has(Field field) const noexcept {
  return std::any_of(slots_.begin(), slots_.end(), [field](const FieldSlot& s) { return s.field == field; });
}

const Vector& SchemeState::at(Field field, long long stamp2) const {
  if (const FieldSlot* slot = find(field, stamp2)) {
    return slot->values;
  }
  std::ostringstream os;
  os << "state has no " << to_string(field) << " at half-step stamp " << stamp2;
  throw InvalidState(os.str());
}

const FieldSlot& SchemeState::latest(Field field) const {
  const FieldSlot* best = nullptr;
  for (const auto& slot : slots_) {
    if (slot.field == field && (best == nullptr || slot.stamp2 > best->stamp2)) {
      best = &slot;
    }
  }
  if (best == nullptr) {
    throw InvalidState("state has no " + std::string(to_string(field)));
  }
  return *best;
}

const FieldSlot& SchemeState::earliest(Field field) const {
  const FieldSlot* best = nullptr;
  for (const auto& slot : slots_) {
    if (slot.field == field && (best == nullptr || slot.stamp2 < best->stamp2)) {
      best = &slot;
    }
  }
  if (best == nullptr) {
    throw InvalidState("state has no " + std::string(to_string(field)));
  }
  return *best;
}

void SchemeState::set(Field field, long long stamp2, Vector values) {
  for (auto& slot : slots_) {
    if (slot.field == field && slot.stamp2 == stamp2) {
      slot.values = std::move(values);
      return;
    }
  }
  slots_.push_back({field, stamp2, std::move(values)});
}

void SchemeState::erase(Field field) {
  std::erase_if(slots_, [field](const FieldSlot& s) { return s.field == field; });
}

std::string_view to_string(Scheme scheme) noexcept {
  switch (scheme) {
    case Scheme::newmark:
      return "newmark";
    case Scheme::leapfrog:
      return "leapfrog";
    case Scheme::stormer_verlet:
      return "stormer-verlet";
    case Scheme::implicit_midpoint:
      return "implicit-midpoint";
  }
  return "?";
}

std::string_view to_string(Reconstruction mode) noexcept {
  switch (mode) {
    case Reconstruction::none:
      return "none";
    case Reconstruction::trapezoidal:
      return "trapezoidal";
    case Reconstruction::half_step:
      return "half-step";
  }
  return "?";
}

std::string_view to_string(MidpointPath path) noexcept {
  return path == MidpointPath::schur ? "schur" : "monolithic";
}

std::optional<Scheme> parse_scheme(std::string_view name) noexcept {
  for (Scheme s : {Scheme::newmark, Scheme::leapfrog, Scheme::stormer_verlet, Scheme::implicit_midpoint}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

std::optional<Reconstruction> parse_reconstruction(std::string_view name) noexcept {
  for (Reconstruction r : {Reconstruction::none, Reconstruction::trapezoidal, Reconstruction::half_step}) {
    if (name == to_string(r)) return r;
  }
  return std::nullopt;
}

std::optional<MidpointPath> parse_midpoint_path(std::string_view name) noexcept {
  if (name == "schur") return MidpointPath::schur;
  if (name == "monolithic") return MidpointPath::monolithic;
  return std::nullopt;
}

IntegratorConfig IntegratorConfig::leapfrog(double dt, long long steps) {
  IntegratorConfig cfg;
  cfg.scheme = Scheme::leapfrog;
  cfg.dt = dt;
  cfg.steps = steps;
  return cfg;
}

IntegratorConfig IntegratorConfig::midpoint(double dt, long long steps) {
  IntegratorConfig cfg;
  cfg.scheme = Scheme::implicit_midpoint;
  cfg.dt = dt;
  cfg.beta = 0.25;
  cfg.steps = steps;
  return cfg;
}

IntegratorConfig IntegratorConfig::newmark(double dt, double gamma, double beta, long long steps) {
  IntegratorConfig cfg;
  cfg.scheme = Scheme::newmark;
  cfg.dt = dt;
  cfg.gamma = gamma;
  cfg.beta = beta;
  cfg.steps = steps;
  return cfg;
}

void IntegratorConfig::validate() const {
  if (!std::isfinite(dt) || dt <= 0.0) {
    throw InvalidArgument("time step must be finite and positive");
  }
  if (steps < 0) {
    throw InvalidArgument("step count must be non-negative");
  }
  if (!std::isfinite(gamma) || !std::isfinite(beta) || beta < 0.0) {
    throw InvalidArgument("Newmark parameters must be finite with beta >= 0");
  }
  if (staggered() && (gamma != 0.5 || beta != 0.0)) {
    throw InvalidArgument("leapfrog corresponds to (gamma, beta) = (1/2, 0)");
  }
  if (scheme == Scheme::implicit_midpoint && (gamma != 0.5 || beta != 0.25)) {
    throw InvalidArgument("implicit midpoint corresponds to (gamma, beta) = (1/2, 1/4)");
  }
  if (reconstruction) {
    if (staggered() && *reconstruction == Reconstruction::trapezoidal) {
      throw InvalidState("staggered schemes reconstruct q with the half-step relation");
    }
    if (scheme == Scheme::implicit_midpoint && *reconstruction == Reconstruction::half_step) {
      throw InvalidState("implicit midpoint reconstructs q with the trapezoidal rule");
    }
  }
}

Reconstruction IntegratorConfig::effective_reconstruction() const noexcept {
  if (reconstruction) {
    return *reconstruction;
  }
  if (staggered()) {
    return Reconstruction::half_step;
  }
  return scheme == Scheme::implicit_midpoint ? Reconstruction::trapezoidal : Reconstruction::none;
}

std::string IntegratorConfig::label() const {
  if (scheme != Scheme::newmark) {
    return std::string(to_string(scheme));
  }
  std::ostringstream os;
  os << "newmark(" << gamma << "," << beta << ")";
  return os.str();
}

Stepper::Stepper(IntegratorConfig cfg, SolverConfig solver) : cfg_(std::move(cfg)), solver_(solver) {
  cfg_.validate();
  solver_.validate();
}

double Stepper::signed_dt(int direction) const {
  if (direction != 1 && direction != -1) {
    throw InvalidArgument("step direction must be +1 or -1");
  }
  return direction * cfg_.dt;
}

namespace {

void require_length(std::span<const double> x, Index n, std::string_view what) {
  if (static_cast<Index>(x.size()) != n) {
    throw LayoutMismatch(std::string(what) + " has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(n));
  }
}

void require_square(const SparseMatrix& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw LayoutMismatch(std::string(what) + " must be square");
  }
}

Vector negated(Vector x) {
  for (double& v : x) v = -v;
  return x;
}

// [[a11, a12], [a21, a22]] as one sparse matrix.
SparseMatrix block2x2(const SparseMatrix& a11, const SparseMatrix& a12, const SparseMatrix& a21,
                      const SparseMatrix& a22) {
  const Index n1 = a11.rows();
  const Index n2 = a22.rows();
  std::vector<Triplet> triplets;
  auto append = [&triplets](const SparseMatrix& m, Index row0, Index col0) {
    const auto offsets = m.row_offsets();
    const auto cols = m.col_indices();
    const auto vals = m.values();
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index k = offsets[static_cast<std::size_t>(i)]; k < offsets[static_cast<std::size_t>(i + 1)]; ++k) {
        triplets.push_back({row0 + i, col0 + cols[static_cast<std::size_t>(k)], vals[static_cast<std::size_t>(k)]});
      }
    }
  };
  append(a11, 0, 0);
  append(a12, 0, n1);
  append(a21, n1, 0);
  append(a22, n1, n1);
  return SparseMatrix::from_triplets(n1 + n2, n1 + n2, std::move(triplets), 0.0);
}

Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

SolverConfig as_gmres(SolverConfig cfg) {
  cfg.method = SolverMethod::gmres;
  return cfg;
}

// ---------------------------------------------------------------- Newmark

class NewmarkStepper final : public Stepper {
 public:
  NewmarkStepper(SecondOrderSystem system, const IntegratorConfig& cfg, const SolverConfig& solver)
      : Stepper(cfg, solver), sys_(std::move(system)) {
    require_square(sys_.mass, "mass matrix");
    require_square(sys_.stiffness, "stiffness matrix");
    if (sys_.mass.rows() != sys_.stiffness.rows()) {
      throw LayoutMismatch("mass and stiffness sizes differ");
    }
    mass_solver_ = LinearSolver(sys_.mass, solver_);
    const double b = cfg_.beta * cfg_.dt * cfg_.dt;
    implicit_solver_ = b == 0.0 ? mass_solver_ : LinearSolver(add(sys_.mass, 1.0, sys_.stiffness, b), solver_);
  }

  SchemeState start(const SchemeState& initial) const override {
    const Vector& q = initial.at(Field::q, 0);
    const Vector& v = initial.at(Field::v, 0);
    require_length(q, sys_.mass.rows(), "q");
    require_length(v, sys_.mass.rows(), "v");
    SchemeState state;
    state.set(Field::q, 0, q);
    state.set(Field::v, 0, v);
    if (const FieldSlot* a = initial.find(Field::a, 0)) {
      state.set(Field::a, 0, a->values);
    } else {
      state.set(Field::a, 0, mass_solver_.solve(negated(sys_.stiffness * q), &stats_));
    }
    return state;
  }

  void step(SchemeState& state, int direction) const override {
    const double h = signed_dt(direction);
    const long long s = 2 * state.step;
    const Vector& q = state.at(Field::q, s);
    const Vector& v = state.at(Field::v, s);
    const Vector& a = state.at(Field::a, s);

    Vector predictor(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      predictor[i] = q[i] + h * v[i] + h * h * (0.5 - cfg_.beta) * a[i];
    }
    Vector a_next = implicit_solver_.solve(negated(sys_.stiffness * predictor), &stats_);
    Vector q_next(q.size());
    Vector v_next(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      q_next[i] = predictor[i] + cfg_.beta * h * h * a_next[i];
      v_next[i] = v[i] + h * ((1.0 - cfg_.gamma) * a[i] + cfg_.gamma * a_next[i]);
    }
    const long long next = s + 2 * direction;
    SchemeState out;
    out.step = state.step + direction;
    out.set(Field::q, next, std::move(q_next));
    out.set(Field::v, next, std::move(v_next));
    out.set(Field::a, next, std::move(a_next));
    state = std::move(out);
  }

  double energy(const SchemeState& state) const override {
    const long long s = 2 * state.step;
    return 0.5 * quadratic_form(sys_.mass, state.at(Field::v, s)) +
           0.5 * quadratic_form(sys_.stiffness, state.at(Field::q, s));
  }

  double instantaneous_energy(const SchemeState& state) const override { return energy(state); }

 private:
  SecondOrderSystem sys_;
  LinearSolver mass_solver_;
  LinearSolver implicit_solver_;
};

// ---------------------------------------------------------- first order

void check_first_order(const FirstOrderSystem& sys) {
  require_square(sys.mass_x, "x mass");
  require_square(sys.mass_y, "y mass");
  require_square(sys.energy_y, "y energy weight");
  const Index nx = sys.mass_x.rows();
  const Index ny = sys.mass_y.rows();
  if (sys.coupling_xy.rows() != nx || sys.coupling_xy.cols() != ny || sys.coupling_yx.rows() != ny ||
      sys.coupling_yx.cols() != nx || sys.energy_y.rows() != ny) {
    throw LayoutMismatch("first-order system blocks have inconsistent shapes");
  }
}

class StormerVerletStepper final : public Stepper {
 public:
  StormerVerletStepper(FirstOrderSystem system, const IntegratorConfig& cfg, const SolverConfig& solver)
      : Stepper(cfg, solver), sys_(std::move(system)) {
    check_first_order(sys_);
    if (!cfg_.staggered()) {
      throw InvalidArgument("Stormer-Verlet stepper needs a leapfrog configuration");
    }
    mx_ = LinearSolver(sys_.mass_x, solver_);
    my_ = LinearSolver(sys_.mass_y, solver_);
    reconstruct_ = sys_.primal_from_x && cfg_.effective_reconstruction() == Reconstruction::half_step;
  }

  SchemeState start(const SchemeState& initial) const override {
    const Vector& x = initial.at(sys_.x_field, 0);
    const Vector& y = initial.at(sys_.y_field, 0);
    require_length(x, sys_.mass_x.rows(), to_string(sys_.x_field));
    require_length(y, sys_.mass_y.rows(), to_string(sys_.y_field));
    const Vector rate = mx_.solve(sys_.coupling_xy * y, &stats_);
    SchemeState state;
    state.set(sys_.y_field, 0, y);
    state.set(sys_.x_field, -1, linear_combination(1.0, x, -0.5 * cfg_.dt, rate));
    state.set(sys_.x_field, 1, linear_combination(1.0, x, 0.5 * cfg_.dt, rate));
    if (reconstruct_) {
      state.set(Field::q, 0, initial.at(Field::q, 0));
    }
    return state;
  }

  void step(SchemeState& state, int direction) const override {
    const double h = signed_dt(direction);
    const long long s = 2 * state.step;
    const Vector& y = state.at(sys_.y_field, s);
    const Vector& near = state.at(sys_.x_field, s + direction);
    state.at(sys_.x_field, s - direction);  // staggering check

    Vector y_next = linear_combination(1.0, y, h, my_.solve(sys_.coupling_yx * near, &stats_));
    Vector far = linear_combination(1.0, near, h, mx_.solve(sys_.coupling_xy * y_next, &stats_));

    SchemeState out;
    out.step = state.step + direction;
    const long long n2 = s + 2 * direction;
    out.set(sys_.y_field, n2, std::move(y_next));
    if (direction > 0) {
      out.set(sys_.x_field, n2 - 1, near);
      out.set(sys_.x_field, n2 + 1, std::move(far));
    } else {
      out.set(sys_.x_field, n2 - 1, std::move(far));
      out.set(sys_.x_field, n2 + 1, near);
    }
    if (reconstruct_) {
      out.set(Field::q, n2, trapezoidal_reconstruct(state.at(Field::q, s), near, {}, with_dt(h), Reconstruction::half_step));
    }
    state = std::move(out);
  }

  double energy(const SchemeState& state) const override {
    const long long s = 2 * state.step;
    return 0.5 * bilinear_form(sys_.mass_x, state.at(sys_.x_field, s - 1), state.at(sys_.x_field, s + 1)) +
           0.5 * quadratic_form(sys_.energy_y, state.at(sys_.y_field, s));
  }

  double instantaneous_energy(const SchemeState& state) const override {
    const long long s = 2 * state.step;
    const Vector x = linear_combination(0.5, state.at(sys_.x_field, s - 1), 0.5, state.at(sys_.x_field, s + 1));
    return 0.5 * quadratic_form(sys_.mass_x, x) + 0.5 * quadratic_form(sys_.energy_y, state.at(sys_.y_field, s));
  }

 private:
  IntegratorConfig with_dt(double h) const {
    IntegratorConfig cfg = cfg_;
    cfg.dt = h;
    return cfg;
  }

  FirstOrderSystem sys_;
  LinearSolver mx_;
  LinearSolver my_;
  bool reconstruct_ = false;
};

class MidpointStepper final : public Stepper {
 public:
  MidpointStepper(FirstOrderSystem system, const IntegratorConfig& cfg, const SolverConfig& solver)
      : Stepper(cfg, solver), sys_(std::move(system)) {
    check_first_order(sys_);
    if (cfg_.scheme != Scheme::implicit_midpoint) {
      throw InvalidArgument("midpoint stepper needs an implicit-midpoint configuration");
    }
    reconstruct_ = sys_.primal_from_x && cfg_.effective_reconstruction() == Reconstruction::trapezoidal;
    const double h = cfg_.dt;
    if (cfg_.midpoint_path == MidpointPath::schur) {
      if (diagonal_blocks(sys_.mass_y)) {
        eliminate_y_ = true;
        my_ = LinearSolver(sys_.mass_y, solver_);
        // -A M_y^{-1} B is symmetric positive semidefinite for every kind here.
        const SparseMatrix coupled =
            multiply(sys_.coupling_xy, multiply(block_diagonal_inverse(sys_.mass_y), sys_.coupling_yx));
        schur_ = LinearSolver(add(sys_.mass_x, 1.0, coupled, -0.25 * h * h).symmetrized(), solver_);
        mx_ = LinearSolver(sys_.mass_x, solver_);
      } else if (diagonal_blocks(sys_.mass_x)) {
        eliminate_y_ = false;
        mx_ = LinearSolver(sys_.mass_x, solver_);
        const SparseMatrix coupled =
            multiply(sys_.coupling_yx, multiply(block_diagonal_inverse(sys_.mass_x), sys_.coupling_xy));
        schur_ = LinearSolver(add(sys_.mass_y, 1.0, coupled, -0.25 * h * h).symmetrized(), solver_);
        my_ = LinearSolver(sys_.mass_y, solver_);
      } else {
        throw InvalidArgument("Schur path needs a block-diagonal mass on one side");
      }
    } else {
      for (int d : {1, -1}) {
        const double hd = d * h;
        monolithic_[d > 0 ? 0 : 1] =
            LinearSolver(block2x2(sys_.mass_x, sys_.coupling_xy.scaled(-0.5 * hd), sys_.coupling_yx.scaled(-0.5 * hd),
                                  sys_.mass_y),
                         as_gmres(solver_), false);
      }
    }
  }

  SchemeState start(const SchemeState& initial) const override {
    const Vector& x = initial.at(sys_.x_field, 0);
    const Vector& y = initial.at(sys_.y_field, 0);
    require_length(x, sys_.mass_x.rows(), to_string(sys_.x_field));
    require_length(y, sys_.mass_y.rows(), to_string(sys_.y_field));
    SchemeState state;
    state.set(sys_.x_field, 0, x);
    state.set(sys_.y_field, 0, y);
    if (reconstruct_) {
      state.set(Field::q, 0, initial.at(Field::q, 0));
    }
    return state;
  }

  void step(SchemeState& state, int direction) const override {
    const double h = signed_dt(direction);
    const long long s = 2 * state.step;
    const Vector& x = state.at(sys_.x_field, s);
    const Vector& y = state.at(sys_.y_field, s);
    Vector x_next;
    Vector y_next;
    if (cfg_.midpoint_path == MidpointPath::monolithic) {
      const Vector rhs = concat(linear_combination(1.0, sys_.mass_x * x, 0.5 * h, sys_.coupling_xy * y),
                                linear_combination(1.0, sys_.mass_y * y, 0.5 * h, sys_.coupling_yx * x));
      const Vector sol = monolithic_[direction > 0 ? 0 : 1].solve(rhs, &stats_);
      x_next.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(x.size()));
      y_next.assign(sol.begin() + static_cast<std::ptrdiff_t>(x.size()), sol.end());
    } else if (eliminate_y_) {
      const Vector myinv_bx = my_.solve(sys_.coupling_yx * x, &stats_);
      Vector rhs = sys_.mass_x * x;
      axpy(h, sys_.coupling_xy * y, rhs);
      axpy(0.25 * h * h, sys_.coupling_xy * myinv_bx, rhs);
      x_next = schur_.solve(rhs, &stats_);
      const Vector sum = linear_combination(1.0, x, 1.0, x_next);
      y_next = linear_combination(1.0, y, 0.5 * h, my_.solve(sys_.coupling_yx * sum, &stats_));
    } else {
      const Vector mxinv_ay = mx_.solve(sys_.coupling_xy * y, &stats_);
      Vector rhs = sys_.mass_y * y;
      axpy(h, sys_.coupling_yx * x, rhs);
      axpy(0.25 * h * h, sys_.coupling_yx * mxinv_ay, rhs);
      y_next = schur_.solve(rhs, &stats_);
      const Vector sum = linear_combination(1.0, y, 1.0, y_next);
      x_next = linear_combination(1.0, x, 0.5 * h, mx_.solve(sys_.coupling_xy * sum, &stats_));
    }
    SchemeState out;
    out.step = state.step + direction;
    const long long n2 = s + 2 * direction;
    if (reconstruct_) {
      IntegratorConfig cfg = cfg_;
      cfg.dt = h;
      out.set(Field::q, n2, trapezoidal_reconstruct(state.at(Field::q, s), x, x_next, cfg, Reconstruction::trapezoidal));
    }
    out.set(sys_.x_field, n2, std::move(x_next));
    out.set(sys_.y_field, n2, std::move(y_next));
    state = std::move(out);
  }

  double energy(const SchemeState& state) const override {
    const long long s = 2 * state.step;
    return 0.5 * quadratic_form(sys_.mass_x, state.at(sys_.x_field, s)) +
           0.5 * quadratic_form(sys_.energy_y, state.at(sys_.y_field, s));
  }

  double instantaneous_energy(const SchemeState& state) const override { return energy(state); }

 private:
  FirstOrderSystem sys_;
  bool reconstruct_ = false;
  bool eliminate_y_ = true;
  LinearSolver mx_;
  LinearSolver my_;
  LinearSolver schur_;
  LinearSolver monolithic_[2];
};

// ------------------------------------------------------------ three field

class ThreeFieldStepper final : public Stepper {
 public:
  ThreeFieldStepper(ConstrainedSystem system, const IntegratorConfig& cfg, const SolverConfig& solver)
      : Stepper(cfg, solver), sys_(std::move(system)) {
    require_square(sys_.mass_v, "velocity mass");
    require_square(sys_.mass_sigma, "stress mass");
    if (sys_.div.rows() != sys_.mass_v.rows() || sys_.div.cols() != sys_.mass_sigma.rows()) {
      throw LayoutMismatch("three-field blocks have inconsistent shapes");
    }
    if (cfg_.scheme == Scheme::newmark) {
      throw InvalidArgument("three-field form runs with leapfrog or implicit midpoint only");
    }
    mv_ = LinearSolver(sys_.mass_v, solver_);
    mc_ = LinearSolver(sys_.mass_sigma, solver_);
    div_t_ = sys_.div.transpose();
    if (!cfg_.staggered()) {
      const double h = cfg_.dt;
      if (cfg_.midpoint_path == MidpointPath::schur) {
        if (!diagonal_blocks(sys_.mass_v)) {
          throw InvalidArgument("Schur path needs a block-diagonal velocity mass");
        }
        const SparseMatrix coupled = multiply(div_t_, multiply(block_diagonal_inverse(sys_.mass_v), sys_.div));
        schur_ = LinearSolver(add(sys_.mass_sigma, 1.0, coupled, 0.25 * h * h).symmetrized(), solver_);
      } else {
        for (int d : {1, -1}) {
          const double hd = d * h;
          monolithic_[d > 0 ? 0 : 1] = LinearSolver(
              block2x2(sys_.mass_v, sys_.div.scaled(-hd), div_t_.scaled(hd), sys_.mass_sigma.scaled(4.0)),
              as_gmres(solver_), false);
        }
      }
    }
  }

  SchemeState start(const SchemeState& initial) const override {
    const Vector& v = initial.at(Field::v, 0);
    const Vector& q = initial.at(Field::q, 0);
    require_length(v, sys_.mass_v.rows(), "v");
    require_length(q, sys_.mass_v.rows(), "q");
    Vector sigma = constraint(q);
    SchemeState state;
    state.set(Field::q, 0, q);
    if (cfg_.staggered()) {
      const Vector rate = mv_.solve(sys_.div * sigma, &stats_);
      state.set(Field::v, -1, linear_combination(1.0, v, -0.5 * cfg_.dt, rate));
      state.set(Field::v, 1, linear_combination(1.0, v, 0.5 * cfg_.dt, rate));
    } else {
      state.set(Field::v, 0, v);
    }
    state.set(Field::sigma, 0, std::move(sigma));
    return state;
  }

  void step(SchemeState& state, int direction) const override {
    const double h = signed_dt(direction);
    const long long s = 2 * state.step;
    const long long n2 = s + 2 * direction;
    const Vector& q = state.at(Field::q, s);
    SchemeState out;
    out.step = state.step + direction;
    if (cfg_.staggered()) {
      const Vector& near = state.at(Field::v, s + direction);
      state.at(Field::v, s - direction);
      Vector q_next = linear_combination(1.0, q, h, near);
      Vector sigma_next = constraint(q_next);
      Vector far = linear_combination(1.0, near, h, mv_.solve(sys_.div * sigma_next, &stats_));
      out.set(Field::q, n2, std::move(q_next));
      out.set(Field::sigma, n2, std::move(sigma_next));
      out.set(Field::v, n2 - direction, near);
      out.set(Field::v, n2 + direction, std::move(far));
    } else {
      const Vector& v = state.at(Field::v, s);
      const Vector dtq = div_t_ * q;
      const Vector dtv = div_t_ * v;
      Vector v_next;
      if (cfg_.midpoint_path == MidpointPath::schur) {
        // M_c sigma_half = -D^T q_half with q_half = q + h/4 (v + v_next) and
        // v_next = v + h M_rho^{-1} D sigma_half.
        const Vector sigma_half = schur_.solve(linear_combination(-1.0, dtq, -0.5 * h, dtv), &stats_);
        v_next = linear_combination(1.0, v, h, mv_.solve(sys_.div * sigma_half, &stats_));
      } else {
        const Vector rhs = concat(sys_.mass_v * v, linear_combination(-4.0, dtq, -h, dtv));
        const Vector sol = monolithic_[direction > 0 ? 0 : 1].solve(rhs, &stats_);
        v_next.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(v.size()));
      }
      IntegratorConfig cfg = cfg_;
      cfg.dt = h;
      Vector q_next = trapezoidal_reconstruct(q, v, v_next, cfg, Reconstruction::trapezoidal);
      out.set(Field::sigma, n2, constraint(q_next));
      out.set(Field::q, n2, std::move(q_next));
      out.set(Field::v, n2, std::move(v_next));
    }
    state = std::move(out);
  }

  double energy(const SchemeState& state) const override {
    const long long s = 2 * state.step;
    const double ev = cfg_.staggered()
                          ? bilinear_form(sys_.mass_v, state.at(Field::v, s - 1), state.at(Field::v, s + 1))
                          : quadratic_form(sys_.mass_v, state.at(Field::v, s));
    return 0.5 * ev + 0.5 * quadratic_form(sys_.mass_sigma, state.at(Field::sigma, s));
  }

  double instantaneous_energy(const SchemeState& state) const override {
    if (!cfg_.staggered()) {
      return energy(state);
    }
    const long long s = 2 * state.step;
    const Vector v = linear_combination(0.5, state.at(Field::v, s - 1), 0.5, state.at(Field::v, s + 1));
    return 0.5 * quadratic_form(sys_.mass_v, v) + 0.5 * quadratic_form(sys_.mass_sigma, state.at(Field::sigma, s));
  }

 private:
  Vector constraint(const Vector& q) const { return mc_.solve(negated(div_t_ * q), &stats_); }

  ConstrainedSystem sys_;
  SparseMatrix div_t_;
  LinearSolver mv_;
  LinearSolver mc_;
  LinearSolver schur_;
  LinearSolver monolithic_[2];
};

// ------------------------------------------------------------ recurrences

class RecurrenceStepper final : public Stepper {
 public:
  RecurrenceStepper(SecondOrderSystem system, RecurrenceSpec spec, const IntegratorConfig& cfg,
                    const SolverConfig& solver)
      : Stepper(cfg, solver), sys_(std::move(system)), spec_(spec) {
    require_square(sys_.mass, "mass matrix");
    require_square(sys_.stiffness, "stiffness matrix");
    if (sys_.mass.rows() != sys_.stiffness.rows()) {
      throw LayoutMismatch("mass and stiffness sizes differ");
    }
    hat_ = cfg_.scheme == Scheme::implicit_midpoint;
    if (!hat_ && !cfg_.staggered()) {
      throw InvalidArgument("recurrences run with leapfrog or implicit midpoint");
    }
    if (hat_ && spec_.staggered) {
      throw InvalidArgument("the averaged recurrence is collocated");
    }
    mass_solver_ = LinearSolver(sys_.mass, solver_);
    if (hat_) {
      const double h = cfg_.dt;
      hat_solver_ = LinearSolver(add(sys_.mass, 1.0, sys_.stiffness, 0.25 * h * h), solver_);
    }
  }

  SchemeState start(const SchemeState& initial) const override {
    const Vector& u = initial.at(spec_.field, 0);
    const Vector& rate = initial.at(spec_.rate_field, 0);
    require_length(u, sys_.mass.rows(), to_string(spec_.field));
    require_length(rate, sys_.mass.rows(), to_string(spec_.rate_field));
    const double h = cfg_.dt;
    SchemeState state;
    if (spec_.staggered) {
      state.set(spec_.field, -1, linear_combination(1.0, u, -0.5 * h, rate));
      state.set(spec_.field, 1, linear_combination(1.0, u, 0.5 * h, rate));
      return state;
    }
    Vector previous;
    if (hat_) {
      // One backward midpoint step: (M + h^2/4 K) u^{-1} = M u - h M rate - h^2/4 K u.
      Vector rhs = sys_.mass * linear_combination(1.0, u, -h, rate);
      axpy(-0.25 * h * h, sys_.stiffness * u, rhs);
      previous = hat_solver_.solve(rhs, &stats_);
    } else {
      const Vector accel = mass_solver_.solve(negated(sys_.stiffness * u), &stats_);
      previous = u;
      axpy(-h, rate, previous);
      axpy(0.5 * h * h, accel, previous);
    }
    state.set(spec_.field, -2, std::move(previous));
    state.set(spec_.field, 0, u);
    return state;
  }

  void step(SchemeState& state, int direction) const override {
    const double h = signed_dt(direction);
    const long long top = top_stamp(state);
    const Vector& cur = state.at(spec_.field, top);
    const Vector& prev = state.at(spec_.field, top - 2);
    const Vector& center = direction > 0 ? cur : prev;
    const Vector& other = direction > 0 ? prev : cur;

    Vector next;
    if (hat_) {
      Vector rhs = sys_.mass * linear_combination(2.0, center, -1.0, other);
      axpy(-0.25 * h * h, sys_.stiffness * linear_combination(2.0, center, 1.0, other), rhs);
      next = hat_solver_.solve(rhs, &stats_);
    } else {
      next = linear_combination(2.0, center, -1.0, other);
      axpy(-h * h, mass_solver_.solve(sys_.stiffness * center, &stats_), next);
    }
    SchemeState out;
    out.step = state.step + direction;
    if (direction > 0) {
      out.set(spec_.field, top, cur);
      out.set(spec_.field, top + 2, std::move(next));
    } else {
      out.set(spec_.field, top - 4, std::move(next));
      out.set(spec_.field, top - 2, prev);
    }
    state = std::move(out);
  }

  double energy(const SchemeState& state) const override {
    const long long top = top_stamp(state);
    const Vector& cur = state.at(spec_.field, top);
    const Vector& prev = state.at(spec_.field, top - 2);
    const Vector w = linear_combination(1.0 / cfg_.dt, cur, -1.0 / cfg_.dt, prev);
    if (hat_) {
      const Vector mean = linear_combination(0.5, cur, 0.5, prev);
      return 0.5 * quadratic_form(sys_.mass, w) + 0.5 * quadratic_form(sys_.stiffness, mean);
    }
    return 0.5 * quadratic_form(sys_.mass, w) + 0.5 * bilinear_form(sys_.stiffness, prev, cur);
  }

  double instantaneous_energy(const SchemeState& state) const override {
    const long long top = top_stamp(state);
    const Vector& cur = state.at(spec_.field, top);
    const Vector& prev = state.at(spec_.field, top - 2);
    const Vector w = linear_combination(1.0 / cfg_.dt, cur, -1.0 / cfg_.dt, prev);
    const Vector mean = linear_combination(0.5, cur, 0.5, prev);
    return 0.5 * quadratic_form(sys_.mass, w) + 0.5 * quadratic_form(sys_.stiffness, mean);
  }

 private:
  long long top_stamp(const SchemeState& state) const { return 2 * state.step + (spec_.staggered ? 1 : 0); }

  SecondOrderSystem sys_;
  RecurrenceSpec spec_;
  bool hat_ = false;
  LinearSolver mass_solver_;
  LinearSolver hat_solver_;
};

}  // namespace

std::unique_ptr<Stepper> make_newmark(SecondOrderSystem system, const IntegratorConfig& cfg,
                                      const SolverConfig& solver) {
  return std::make_unique<NewmarkStepper>(std::move(system), cfg, solver);
}

std::unique_ptr<Stepper> make_stormer_verlet(FirstOrderSystem system, const IntegratorConfig& cfg,
                                             const SolverConfig& solver) {
  return std::make_unique<StormerVerletStepper>(std::move(system), cfg, solver);
}

std::unique_ptr<Stepper> make_midpoint(FirstOrderSystem system, const IntegratorConfig& cfg,
                                       const SolverConfig& solver) {
  return std::make_unique<MidpointStepper>(std::move(system), cfg, solver);
}

std::unique_ptr<Stepper> make_three_field(ConstrainedSystem system, const IntegratorConfig& cfg,
                                          const SolverConfig& solver) {
  return std::make_unique<ThreeFieldStepper>(std::move(system), cfg, solver);
}

std::unique_ptr<Stepper> make_recurrence(SecondOrderSystem system, RecurrenceSpec spec, const IntegratorConfig& cfg,
                                         const SolverConfig& solver) {
  return std::make_unique<RecurrenceStepper>(std::move(system), spec, cfg, solver);
}

SchemeState newmark_step(const SparseMatrix& mass, const SparseMatrix& stiffness, const SchemeState& state,
                         const IntegratorConfig& cfg, const SolverConfig& solver) {
  if (cfg.scheme != Scheme::newmark) {
    IntegratorConfig as_newmark = cfg;
    as_newmark.scheme = Scheme::newmark;
    return newmark_step(mass, stiffness, state, as_newmark, solver);
  }
  const NewmarkStepper stepper({mass, stiffness}, cfg, solver);
  SchemeState next = state;
  stepper.step(next, 1);
  return next;
}

SchemeState stormer_verlet_step(const FirstOrderSystem& system, const SchemeState& state, const IntegratorConfig& cfg,
                                const SolverConfig& solver) {
  const long long s = 2 * state.step;
  if (!state.find(system.x_field, s - 1) || !state.find(system.x_field, s + 1) || state.find(system.x_field, s)) {
    throw InvalidState("Stormer-Verlet needs the x field at the two neighbouring half steps only");
  }
  const StormerVerletStepper stepper(system, cfg, solver);
  SchemeState next = state;
  stepper.step(next, 1);
  return next;
}

SchemeState midpoint_step(const FirstOrderSystem& system, const SchemeState& state, const IntegratorConfig& cfg,
                          const SolverConfig& solver) {
  const long long s = 2 * state.step;
  if (!state.find(system.x_field, s) || state.find(system.x_field, s - 1) || state.find(system.x_field, s + 1)) {
    throw InvalidState("implicit midpoint needs a collocated state");
  }
  const MidpointStepper stepper(system, cfg, solver);
  SchemeState next = state;
  stepper.step(next, 1);
  return next;
}

Vector trapezoidal_reconstruct(std::span<const double> q, std::span<const double> v_begin,
                               std::span<const double> v_end, const IntegratorConfig& cfg, Reconstruction mode) {
  if (!std::isfinite(cfg.dt)) {
    throw InvalidArgument("time step must be finite");
  }
  if (mode == Reconstruction::none) {
    throw InvalidState("no reconstruction requested");
  }
  if (cfg.staggered() && mode != Reconstruction::half_step) {
    throw InvalidState("staggered schemes reconstruct q with the half-step relation");
  }
  if (cfg.scheme == Scheme::implicit_midpoint && mode != Reconstruction::trapezoidal) {
    throw InvalidState("implicit midpoint reconstructs q with the trapezoidal rule");
  }
  if (v_begin.size() != q.size()) {
    throw LayoutMismatch("velocity and displacement lengths differ");
  }
  Vector out(q.begin(), q.end());
  if (mode == Reconstruction::half_step) {
    if (!v_end.empty()) {
      throw InvalidState("half-step reconstruction takes a single velocity sample");
    }
    axpy(cfg.dt, v_begin, out);
    return out;
  }
  if (v_end.size() != q.size()) {
    throw LayoutMismatch("velocity and displacement lengths differ");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += 0.5 * cfg.dt * (v_begin[i] + v_end[i]);
  }
  return out;
}

}  // namespace wavelab
