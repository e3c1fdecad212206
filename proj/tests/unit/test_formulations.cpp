#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "wavelab/assembly.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/formulations.hpp"
#include "wavelab/verification.hpp"

using namespace wavelab;

namespace {

FormulationSpec spec_1d(FormulationKind kind, Index n, int degree = 1, MaterialParams mat = {}) {
  FormulationSpec s;
  s.kind = kind;
  s.mesh = build_interval_mesh(0, 1, n);
  s.degree = degree;
  s.material = mat;
  return s;
}

FormulationSpec spec_2d(FormulationKind kind, Index n, MaterialParams mat = {}) {
  FormulationSpec s;
  s.kind = kind;
  s.mesh = build_rect_mesh({0, 1}, {0, 1}, n, n);
  s.material = mat;
  return s;
}

double diff_inf(std::span<const double> a, std::span<const double> b) {
  return norm_inf(linear_combination(1.0, a, -1.0, b));
}

}  // namespace

TEST(FormulationKind, StableIds) {
  const std::vector<std::string> ids{"lagrangian-2nd-order", "hamiltonian-vq",   "mixed-grad-vs",   "mixed-div-vs",
                                     "three-field-vqs",      "velocity-only-2nd", "stress-only-2nd", "maxwell-tm"};
  const auto kinds = all_formulation_kinds();
  ASSERT_EQ(kinds.size(), ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(to_string(kinds[i]), ids[i]);
    EXPECT_EQ(parse_formulation_kind(ids[i]), kinds[i]);
  }
  EXPECT_FALSE(parse_formulation_kind("mixed-grad").has_value());
}

TEST(BuildFormulation, MixedGradBlockShapes) {
  const Index n = 6;
  const auto sys = build_formulation(spec_1d(FormulationKind::mixed_grad, n, 2));
  EXPECT_EQ(sys->mass_velocity().rows(), 2 * n - 1);
  EXPECT_EQ(sys->mass_stress().rows(), 2 * n);
  EXPECT_EQ(sys->coupling().rows(), 2 * n);
  EXPECT_EQ(sys->coupling().cols(), 2 * n - 1);
  EXPECT_TRUE(sys->first_order().has_value());
  EXPECT_FALSE(sys->second_order().has_value());
}

TEST(BuildFormulation, LagrangianHasNoCoupling) {
  const auto sys = build_formulation(spec_1d(FormulationKind::lagrangian, 8));
  EXPECT_TRUE(sys->second_order().has_value());
  EXPECT_FALSE(sys->first_order().has_value());
  EXPECT_FALSE(sys->has_stress_space());
  EXPECT_THROW(sys->coupling(), InvalidState);
  EXPECT_THROW(sys->mass_stress(), InvalidState);
}

TEST(BuildFormulation, LayoutsMatchSpaces) {
  for (FormulationKind kind : all_formulation_kinds()) {
    const FormulationSpec spec =
        kind == FormulationKind::maxwell_tm ? spec_2d(kind, 4) : spec_1d(kind, 7, 2);
    const auto sys = build_formulation(spec);
    const SchemeState init = initial_conditions(*sys, Profile{});
    for (const auto& [field, length] : sys->layout()) {
      ASSERT_TRUE(init.find(field, 0)) << to_string(kind) << " " << to_string(field);
      EXPECT_EQ(static_cast<Index>(init.at(field, 0).size()), length) << to_string(kind);
    }
  }
}

TEST(BuildFormulation, BoundaryConditionSide) {
  const auto grad = build_formulation(spec_1d(FormulationKind::mixed_grad, 5));
  EXPECT_EQ(grad->velocity_space().boundary_condition(), BoundaryCondition::dirichlet);
  const auto div = build_formulation(spec_1d(FormulationKind::mixed_div, 5));
  EXPECT_EQ(div->stress_space().boundary_condition(), BoundaryCondition::none);
  EXPECT_EQ(div->stress_space().dof_count(), 6);
  EXPECT_EQ(div->velocity_space().family(), Family::discontinuous_lagrange);
}

TEST(BuildFormulation, Errors) {
  EXPECT_THROW(build_formulation(spec_2d(FormulationKind::mixed_grad, 3)), CompatibilityViolation);
  EXPECT_THROW(build_formulation(spec_1d(FormulationKind::maxwell_tm, 3)), InvalidArgument);
  EXPECT_THROW(maxwell_tm_adapter(spec_1d(FormulationKind::lagrangian, 3)), InvalidArgument);
  auto p2 = spec_2d(FormulationKind::mixed_div, 3);
  p2.degree = 2;
  EXPECT_THROW(build_formulation(p2), UnsupportedSpace);
  FormulationSpec no_mesh;
  EXPECT_THROW(build_formulation(no_mesh), InvalidArgument);
  EXPECT_THROW(build_formulation(spec_1d(FormulationKind::lagrangian, 4, 0)), UnsupportedSpace);
}

TEST(InitialConditions, HandSlopesOnFourCells) {
  const double k = 2.0;
  const auto sys = build_formulation(spec_1d(FormulationKind::mixed_grad, 4, 1, MaterialParams(1.0, k)));
  const SchemeState s = initial_conditions(*sys, Profile{});
  const double r = std::sqrt(0.5);
  const Vector nodes{0.0, r, 1.0, r, 0.0};
  const Vector& q = s.at(Field::q, 0);
  ASSERT_EQ(q.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(q[i], nodes[i + 1], 1e-15);
  }
  const Vector& sigma = s.at(Field::sigma, 0);
  ASSERT_EQ(sigma.size(), 4u);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(sigma[c], k * (nodes[c + 1] - nodes[c]) / 0.25, 1e-13) << c;
  }
  EXPECT_EQ(norm_inf(s.at(Field::v, 0)), 0.0);
}

TEST(InitialConditions, ZeroProfileGivesZeroState) {
  for (FormulationKind kind : all_formulation_kinds()) {
    const FormulationSpec spec = kind == FormulationKind::maxwell_tm ? spec_2d(kind, 3) : spec_1d(kind, 5, 2);
    const auto sys = build_formulation(spec);
    const SchemeState s = initial_conditions(*sys, Profile{1, 1, 0.0, 0.0});
    for (const auto& slot : s.slots()) {
      EXPECT_EQ(norm_inf(slot.values), 0.0) << to_string(kind);
    }
    EXPECT_EQ(collocated_energy(*sys, s), 0.0);
  }
}

TEST(InitialConditions, StressIsTheGradientImage) {
  // sigma0 minimizes |sigma - k dq/dx| in W; with W the exact image the residual vanishes
  for (int degree = 1; degree <= 3; ++degree) {
    const MaterialParams mat(1.0, 1.7);
    const auto sys = build_formulation(spec_1d(FormulationKind::mixed_grad, 9, degree, mat));
    const SchemeState s = initial_conditions(*sys, Profile{2, 1, 0.8, 0.0});
    const Vector& q = s.at(Field::q, 0);
    const Vector& sigma = s.at(Field::sigma, 0);
    const auto& w = sys->stress_space();
    const auto& v = sys->velocity_space();
    const auto rule = gauss_legendre(degree + 2);
    BasisValues bw;
    BasisValues bv;
    double worst = 0.0;
    for (Index c = 0; c < v.mesh().num_cells(); ++c) {
      for (const auto& pt : rule.points) {
        const double sw = evaluate_field(w, sigma, c, pt)[0];
        v.evaluate(c, pt, bv);
        double dq = 0.0;
        const auto dofs = v.cell_dofs(c);
        for (int i = 0; i < bv.num_local; ++i) {
          if (dofs[static_cast<std::size_t>(i)] >= 0) {
            dq += q[static_cast<std::size_t>(dofs[static_cast<std::size_t>(i)])] * bv.divergence[static_cast<std::size_t>(i)];
          }
        }
        worst = std::max(worst, std::abs(sw - mat.k_stiff() * dq));
      }
    }
    EXPECT_LE(worst, 1e-12 * norm_inf(sigma)) << "k=" << degree;
  }
}

TEST(InitialConditions, ThreeFieldConstraint) {
  const auto sys = build_formulation(spec_1d(FormulationKind::three_field, 12, 2, MaterialParams(1.2, 0.8)));
  const SchemeState s = initial_conditions(*sys, Profile{1, 1, 1.0, 0.5});
  const auto& c = *sys->constrained();
  const Vector residual = linear_combination(1.0, c.mass_sigma * s.at(Field::sigma, 0), 1.0,
                                             c.div.transpose() * s.at(Field::q, 0));
  EXPECT_LE(norm_inf(residual), 1e-12);

  const auto cfg = IntegratorConfig::midpoint(0.01, 50);
  const auto run = simulate(*sys, cfg, Profile{1, 1, 1.0, 0.5});
  for (const auto& state : run.states) {
    const long long s2 = 2 * state.step;
    const Vector r = linear_combination(1.0, c.mass_sigma * state.at(Field::sigma, s2), 1.0,
                                        c.div.transpose() * state.at(Field::q, s2));
    EXPECT_LE(norm_inf(r), 1e-12);
  }
}

TEST(InitialConditions, ThreeFieldConstraintIn2D) {
  const auto sys = build_formulation(spec_2d(FormulationKind::three_field, 5));
  const SchemeState s = initial_conditions(*sys, Profile{1, 2, 1.0, 0.0});
  const auto& c = *sys->constrained();
  const Vector residual = linear_combination(1.0, c.mass_sigma * s.at(Field::sigma, 0), 1.0,
                                             c.div.transpose() * s.at(Field::q, 0));
  EXPECT_LE(norm_inf(residual), 1e-12);
}

TEST(Energy, ZeroAndScalar) {
  const auto sys = build_formulation(spec_1d(FormulationKind::lagrangian, 6));
  SchemeState zero;
  zero.set(Field::q, 0, Vector(5, 0.0));
  zero.set(Field::v, 0, Vector(5, 0.0));
  EXPECT_EQ(collocated_energy(*sys, zero), 0.0);
  SchemeState bad;
  bad.set(Field::q, 0, Vector(5, 0.0));
  EXPECT_THROW(collocated_energy(*sys, bad), InvalidState);
}

TEST(Energy, LagrangianMatchesQuadraticForm) {
  const auto sys = build_formulation(spec_1d(FormulationKind::lagrangian, 10, 2, MaterialParams(2.0, 3.0)));
  const SchemeState s = initial_conditions(*sys, Profile{1, 1, 1.0, 0.5});
  const double expected = 0.5 * quadratic_form(sys->mass_velocity(), s.at(Field::v, 0)) +
                          0.5 * quadratic_form(sys->stiffness(), s.at(Field::q, 0));
  EXPECT_DOUBLE_EQ(collocated_energy(*sys, s), expected);
  // the continuous energy of the standing wave is rho (A^2 w^2 + B^2)/4 with w = pi sqrt(k/rho)
  const double w2 = std::numbers::pi * std::numbers::pi * 3.0 / 2.0;
  EXPECT_NEAR(collocated_energy(*sys, s), 2.0 * (w2 + 0.25) / 4.0, 1e-3);
}

TEST(Energy, SameAtStartAcrossFormulations) {
  const MaterialParams mat(1.5, 0.6);
  for (int degree = 1; degree <= 3; ++degree) {
    const Profile profile{2, 1, 0.9, 0.3};
    const auto lag = build_formulation(spec_1d(FormulationKind::lagrangian, 10, degree, mat));
    const auto mix = build_formulation(spec_1d(FormulationKind::mixed_grad, 10, degree, mat));
    const auto ham = build_formulation(spec_1d(FormulationKind::hamiltonian_vq, 10, degree, mat));
    const double hl = collocated_energy(*lag, initial_conditions(*lag, profile));
    EXPECT_NEAR(hl, collocated_energy(*mix, initial_conditions(*mix, profile)), 1e-12);
    EXPECT_NEAR(hl, collocated_energy(*ham, initial_conditions(*ham, profile)), 1e-12);
  }
}

TEST(Energy, DivPairMatchesThreeFieldAtStart) {
  const MaterialParams mat(1.5, 0.6);
  const Profile profile{1, 1, 0.9, 0.3};
  const auto div = build_formulation(spec_1d(FormulationKind::mixed_div, 10, 2, mat));
  const auto tri = build_formulation(spec_1d(FormulationKind::three_field, 10, 2, mat));
  EXPECT_NEAR(collocated_energy(*div, initial_conditions(*div, profile)),
              collocated_energy(*tri, initial_conditions(*tri, profile)), 1e-12);
}

TEST(Energy, StaggeredTwoTimeProduct) {
  const auto sys = build_formulation(spec_1d(FormulationKind::mixed_grad, 16));
  const auto cfg = IntegratorConfig::leapfrog(0.01, 1);
  const auto stepper = make_stepper(*sys, cfg);
  SchemeState s = stepper->start(initial_conditions(*sys, Profile{1, 1, 1.0, 0.2}));
  stepper->step(s);
  const double expected = 0.5 * bilinear_form(sys->mass_velocity(), s.at(Field::v, 1), s.at(Field::v, 3)) +
                          0.5 * quadratic_form(sys->mass_stress(), s.at(Field::sigma, 2));
  EXPECT_NEAR(energy(*sys, s, cfg), expected, 1e-15);
  EXPECT_NEAR(stepper->energy(s), expected, 1e-15);
}

TEST(Skewness, CouplingOperatorIsSkew) {
  std::vector<FormulationSpec> specs{spec_1d(FormulationKind::mixed_grad, 7, 2, MaterialParams(2, 3)),
                                     spec_1d(FormulationKind::mixed_div, 7, 3, MaterialParams(2, 3)),
                                     spec_1d(FormulationKind::hamiltonian_vq, 7, 1),
                                     spec_2d(FormulationKind::mixed_div, 4, MaterialParams(2, 3)),
                                     spec_2d(FormulationKind::maxwell_tm, 4, MaterialParams(2, 0.5))};
  for (const auto& spec : specs) {
    const auto sys = build_formulation(spec);
    const auto& fo = *sys->first_order();
    if (spec.kind == FormulationKind::hamiltonian_vq) {
      // (v, q) is skew in the energy inner product: A = -K, B = I, E_y = K
      EXPECT_EQ(max_abs_difference(fo.coupling_xy, fo.energy_y.scaled(-1.0)), 0.0);
      continue;
    }
    // J = [0 A; B 0] with A = -B^T
    EXPECT_EQ(max_abs_difference(fo.coupling_xy, fo.coupling_yx.transpose().scaled(-1.0)), 0.0) << to_string(spec.kind);
  }
}

TEST(Reduction, SchurComplementIsTheStiffness) {
  for (Index n : {4, 8, 16, 32}) {
    for (int degree = 1; degree <= 3; ++degree) {
      const MaterialParams mat(1.0, 2.5);
      const auto sys = build_formulation(spec_1d(FormulationKind::mixed_grad, n, degree, mat));
      const Eigen::MatrixXd g = oracle::dense(sys->coupling());
      const Eigen::MatrixXd mc = oracle::dense(sys->mass_stress());
      const Eigen::MatrixXd reduced = g.transpose() * mc.inverse() * g;
      const auto v = make_space(build_interval_mesh(0, 1, n), Family::continuous_lagrange, degree,
                                BoundaryCondition::dirichlet);
      const Eigen::MatrixXd k = oracle::dense(assemble_stiffness_grad(v, 1.0)) / mat.compliance();
      EXPECT_LE(oracle::max_abs(reduced - k), 1e-11 * oracle::max_abs(k)) << n << " k=" << degree;
    }
  }
}

TEST(Reduction, DivSchurComplement) {
  const MaterialParams mat(2.0, 1.0);
  const auto sys = build_formulation(spec_1d(FormulationKind::mixed_div, 16, 2, mat));
  const Eigen::MatrixXd d = oracle::dense(sys->coupling());
  const Eigen::MatrixXd reduced = d.transpose() * oracle::dense(sys->mass_velocity()).inverse() * d;
  EXPECT_LE(oracle::max_abs(reduced - oracle::dense(sys->stiffness())), 1e-11 * oracle::max_abs(reduced));
}

TEST(Maxwell, RotatedGradientPairing) {
  const auto mesh = build_rect_mesh({0, 1}, {0, 2}, 4, 3);
  FormulationSpec spec;
  spec.kind = FormulationKind::maxwell_tm;
  spec.mesh = mesh;
  const auto sys = maxwell_tm_adapter(spec);
  const auto e = make_space(mesh, Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
  const auto h = make_space(mesh, Family::discontinuous_lagrange, 0, BoundaryCondition::none, ValueShape::vector);
  const SparseMatrix g = assemble_coupling_grad(h, e);
  const SparseMatrix curl = assemble_coupling_curl(h, e);
  EXPECT_LE(max_abs_difference(sys->coupling(), rotate_vector_rows(g)), 1e-13);
  EXPECT_LE(max_abs_difference(sys->coupling(), curl), 1e-13);
  EXPECT_LE(max_abs_difference(sys->mass_velocity(), assemble_mass(e, 1.0)), 1e-13);
  EXPECT_LE(max_abs_difference(sys->mass_stress(), assemble_mass(h, 1.0)), 1e-13);
  // rotation keeps the Schur complement: C^T M^{-1} C = G^T M^{-1} G = K
  const Eigen::MatrixXd c = oracle::dense(sys->coupling());
  const Eigen::MatrixXd mi = oracle::dense(sys->mass_stress()).inverse();
  EXPECT_LE(oracle::max_abs(c.transpose() * mi * c - oracle::dense(assemble_stiffness_grad(e, 1.0))), 1e-11);
}

TEST(Maxwell, RotationEntrywise) {
  const auto m = SparseMatrix::from_triplets(4, 2, {{0, 0, 1.0}, {1, 0, 2.0}, {2, 1, 3.0}, {3, 1, 4.0}});
  const auto r = rotate_vector_rows(m);
  EXPECT_EQ(r.coeff(0, 0), 2.0);
  EXPECT_EQ(r.coeff(1, 0), -1.0);
  EXPECT_EQ(r.coeff(2, 1), 4.0);
  EXPECT_EQ(r.coeff(3, 1), -3.0);
  EXPECT_THROW(rotate_vector_rows(SparseMatrix::identity(3)), LayoutMismatch);
}

TEST(Maxwell, MidpointConservesEnergy) {
  const auto sys = build_formulation(spec_2d(FormulationKind::maxwell_tm, 6, MaterialParams::electromagnetic(2.0, 0.5)));
  const auto trace = energy_audit(*sys, IntegratorConfig::midpoint(0.02, 1000), Profile{1, 1, 1.0, 0.0});
  EXPECT_TRUE(trace.stable);
  EXPECT_EQ(trace.steps.size(), 1001u);
  EXPECT_LE(trace.max_relative_drift, 1e-10);
  const SchemeState zero = initial_conditions(*sys, Profile{1, 1, 0.0, 0.0});
  EXPECT_EQ(collocated_energy(*sys, zero), 0.0);
}

TEST(MixedGrad, StressTracksDisplacementGradient) {
  const MaterialParams mat(1.3, 2.2);
  const auto sys = build_formulation(spec_1d(FormulationKind::mixed_grad, 12, 2, mat));
  for (const auto& cfg : {IntegratorConfig::leapfrog(0.005, 200), IntegratorConfig::midpoint(0.005, 200)}) {
    const auto run = simulate(*sys, cfg, Profile{1, 1, 1.0, 0.4});
    double worst = 0.0;
    for (const auto& s : run.states) {
      const long long s2 = 2 * s.step;
      const Vector& sigma = s.at(Field::sigma, s2);
      worst = std::max(worst, diff_inf(sigma, sys->stress_from_displacement(s.at(Field::q, s2))));
    }
    EXPECT_LE(worst, 1e-12) << cfg.label();
  }
}

TEST(Observe, DerivedFields) {
  const auto ham = build_formulation(spec_1d(FormulationKind::hamiltonian_vq, 8));
  const SchemeState s = initial_conditions(*ham, Profile{1, 1, 1.0, 1.0});
  bool momentum = false;
  bool stress = false;
  for (const auto& obs : observe(*ham, s)) {
    if (obs.field == Field::p) {
      momentum = true;
      EXPECT_EQ(obs.weight, nullptr);
      EXPECT_LE(diff_inf(obs.values, ham->mass_velocity() * s.at(Field::v, 0)), 1e-15);
    }
    if (obs.field == Field::sigma) {
      stress = true;
      EXPECT_EQ(obs.space, derivative_space(ham->velocity_space()).describe());
    }
  }
  EXPECT_TRUE(momentum);
  EXPECT_TRUE(stress);
}

TEST(MakeStepper, NewmarkOnlyForDisplacementForm) {
  const auto cfg = IntegratorConfig::newmark(0.01, 0.5, 0.25, 1);
  EXPECT_NO_THROW(make_stepper(*build_formulation(spec_1d(FormulationKind::lagrangian, 4)), cfg));
  for (FormulationKind kind : {FormulationKind::mixed_grad, FormulationKind::mixed_div, FormulationKind::three_field,
                               FormulationKind::velocity_only, FormulationKind::stress_only}) {
    EXPECT_THROW(make_stepper(*build_formulation(spec_1d(kind, 4)), cfg), InvalidArgument) << to_string(kind);
  }
}

TEST(CriticalStep, MatchesDenseEigenvalue) {
  for (FormulationKind kind : {FormulationKind::lagrangian, FormulationKind::mixed_grad, FormulationKind::mixed_div}) {
    const auto sys = build_formulation(spec_1d(kind, 20, 2, MaterialParams(1.4, 0.9)));
    const auto eff = sys->effective_second_order();
    const auto ev = oracle::generalized_eigenvalues(eff.stiffness, eff.mass);
    const double top = ev(ev.size() - 1);
    EXPECT_NEAR(max_generalized_eigenvalue(*sys), top, 1e-8 * top) << to_string(kind);
    EXPECT_NEAR(critical_time_step(*sys), 2.0 / std::sqrt(top), 1e-8) << to_string(kind);
  }
}
