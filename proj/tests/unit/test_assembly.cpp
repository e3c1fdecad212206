#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "wavelab/assembly.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/function_space.hpp"
#include "wavelab/solvers.hpp"

using namespace wavelab;

namespace {

// Polynomials that every CG-k (k >= 2) Dirichlet space on [0, 1] contains.
double bubble(const Point& x) { return x[0] * (1.0 - x[0]); }
double bubble_dx(const Point& x) { return 1.0 - 2.0 * x[0]; }
double tilted(const Point& x) { return x[0] * (1.0 - x[0]) * (0.5 + x[0]); }
double tilted_dx(const Point& x) { return 0.5 + x[0] - 3.0 * x[0] * x[0]; }

}  // namespace

TEST(Material, DerivedParameters) {
  const MaterialParams m(2.5, 4.0);
  EXPECT_NEAR(m.compliance() * m.k_stiff(), 1.0, 1e-15);
  EXPECT_NEAR(m.specific_volume() * m.rho(), 1.0, 1e-15);
  EXPECT_THROW(MaterialParams(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(MaterialParams(1.0, -1.0), InvalidArgument);
  EXPECT_THROW(MaterialParams(1.0, std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(Assembly, MassTwoCellsDirichlet) {
  const auto v = make_space(build_interval_mesh(0, 1, 2), Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
  const SparseMatrix m = assemble_mass(v, 1.0);
  ASSERT_EQ(m.rows(), 1);
  EXPECT_NEAR(m.coeff(0, 0), 1.0 / 3.0, 1e-15);
}

TEST(Assembly, MassDG0IsCellLengths) {
  const auto mesh = build_interval_mesh(0, 3, 7);
  const SparseMatrix m = assemble_mass(make_space(mesh, Family::discontinuous_lagrange, 0), 1.0);
  EXPECT_EQ(m.nnz(), 7);
  for (Index c = 0; c < 7; ++c) {
    EXPECT_NEAR(m.coeff(c, c), mesh->cell_measure(c), 1e-15);
  }
}

TEST(Assembly, MassMatchesElementOracleP1) {
  const Index n = 9;
  const auto mesh = build_interval_mesh(0, 2, n);
  const double h = 2.0 / n;
  const auto v = make_space(mesh, Family::continuous_lagrange, 1);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::MatrixXd kexpect = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (Index c = 0; c < n; ++c) {
    expect.block(c, c, 2, 2) += h / 6.0 * Eigen::Matrix2d{{2, 1}, {1, 2}};
    kexpect.block(c, c, 2, 2) += 1.0 / h * Eigen::Matrix2d{{1, -1}, {-1, 1}};
  }
  // the library numbers vertex DOFs left to right for CG-1
  EXPECT_LE(oracle::max_abs(oracle::dense(assemble_mass(v, 1.0)) - expect), 1e-15);
  EXPECT_LE(oracle::max_abs(oracle::dense(assemble_stiffness_grad(v, 1.0)) - kexpect), 1e-12);
}

TEST(Assembly, BilinearFormsOfInterpolatedPolynomials) {
  const auto mesh = build_interval_mesh(0, 1, 5);
  for (int k = 3; k <= 4; ++k) {
    const auto v = make_space(mesh, Family::continuous_lagrange, k, BoundaryCondition::dirichlet);
    const Vector a = interpolate(v, bubble);
    const Vector b = interpolate(v, tilted);
    // int x(1-x) * x(1-x)(1/2+x) = 1/30 * 1/2 + int x^3 (1-x)^2 = 1/60 + 1/60
    EXPECT_NEAR(bilinear_form(assemble_mass(v, 1.0), a, b), 1.0 / 30.0, 1e-14);
    const double k_exact = [] {
      double s = 0.0;
      const QuadratureRule q = gauss_legendre(6);
      for (std::size_t i = 0; i < q.size(); ++i) {
        const Point x{q.points[i][0], 0.0};
        s += q.weights[i] * bubble_dx(x) * tilted_dx(x);
      }
      return s;
    }();
    EXPECT_NEAR(bilinear_form(assemble_stiffness_grad(v, 3.0), a, b), 3.0 * k_exact, 1e-13);
    EXPECT_NEAR(bilinear_form(assemble_stiffness_div(v, 3.0), a, b), 3.0 * k_exact, 1e-13);
  }
}

TEST(Assembly, MassIsSPD) {
  std::mt19937_64 rng(oracle::seed());
  const auto line = build_interval_mesh(0, 1, 6);
  const auto sq = build_rect_mesh({0, 1}, {0, 1}, 3, 3);
  std::vector<FunctionSpace> spaces{
      make_space(line, Family::continuous_lagrange, 2, BoundaryCondition::dirichlet),
      make_space(line, Family::discontinuous_lagrange, 1),
      make_space(sq, Family::continuous_lagrange, 1, BoundaryCondition::dirichlet),
      make_space(sq, Family::discontinuous_lagrange, 0, BoundaryCondition::none, ValueShape::vector),
      make_space(sq, Family::raviart_thomas, 0),
  };
  for (const auto& s : spaces) {
    const SparseMatrix m = assemble_mass(s, 1.7);
    EXPECT_TRUE(m.is_symmetric(1e-13)) << s.describe();
    for (int trial = 0; trial < 100; ++trial) {
      const Vector x = oracle::random_vector(rng, static_cast<std::size_t>(m.rows()));
      EXPECT_GT(quadratic_form(m, x), 0.0);
    }
    EXPECT_NO_THROW(BandedCholesky{m});
  }
}

TEST(Assembly, MassRejectsNonPositiveCoefficient) {
  const auto v = make_space(build_interval_mesh(0, 1, 4), Family::continuous_lagrange, 1);
  EXPECT_THROW(assemble_mass(v, 0.0), InvalidArgument);
  EXPECT_THROW(assemble_mass(v, -1.0), InvalidArgument);
  EXPECT_THROW(assemble_stiffness_grad(v, 0.0), InvalidArgument);
}

TEST(Assembly, StiffnessTwoCellsDirichlet) {
  const auto v = make_space(build_interval_mesh(0, 1, 2), Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
  const SparseMatrix k = assemble_stiffness_grad(v, 1.0);
  ASSERT_EQ(k.rows(), 1);
  EXPECT_NEAR(k.coeff(0, 0), 4.0, 1e-14);
}

TEST(Assembly, StiffnessKernelIsConstants) {
  const auto line = build_interval_mesh(0, 1, 7);
  const auto sq = build_rect_mesh({0, 1}, {0, 1}, 4, 3);
  for (const auto& s : {make_space(line, Family::continuous_lagrange, 3), make_space(sq, Family::continuous_lagrange, 1)}) {
    const SparseMatrix k = assemble_stiffness_grad(s, 2.0);
    EXPECT_TRUE(k.is_symmetric(1e-13));
    const Vector ones(static_cast<std::size_t>(k.rows()), 1.0);
    EXPECT_LE(norm_inf(k * ones), 1e-12);
  }
}

TEST(Assembly, StiffnessRejectsDG) {
  const auto w = make_space(build_interval_mesh(0, 1, 4), Family::discontinuous_lagrange, 0);
  EXPECT_THROW(assemble_stiffness_grad(w, 1.0), UnsupportedSpace);
  EXPECT_THROW(assemble_stiffness_div(w, 1.0), UnsupportedSpace);
}

TEST(Assembly, SmallestEigenvalueApproximatesPiSquared) {
  const auto v = make_space(build_interval_mesh(0, 1, 64), Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
  const double lmin = inverse_power_iteration_genevp(assemble_stiffness_grad(v, 1.0), assemble_mass(v, 1.0));
  const double pi2 = std::numbers::pi * std::numbers::pi;
  EXPECT_NEAR(lmin, pi2, 0.005 * pi2);
}

TEST(Assembly, EigenvaluesConvergeAtSecondOrder) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int m = 1; m <= 3; ++m) {
    double previous = 0.0;
    for (Index n : {8, 16, 32}) {
      const auto v = make_space(build_interval_mesh(0, 1, n), Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
      const auto ev = oracle::generalized_eigenvalues(assemble_stiffness_grad(v, 1.0), assemble_mass(v, 1.0));
      const double err = ev(m - 1) - m * m * pi2;
      EXPECT_GT(err, 0.0);
      if (previous > 0.0) {
        EXPECT_NEAR(std::log2(previous / err), 2.0, 0.1) << "mode " << m << " n " << n;
      }
      previous = err;
    }
  }
}

TEST(Assembly, DivStiffnessEqualsGradStiffnessIn1D) {
  const auto v = make_space(build_interval_mesh(0, 1, 6), Family::continuous_lagrange, 2);
  EXPECT_LE(max_abs_difference(assemble_stiffness_div(v, 1.3), assemble_stiffness_grad(v, 1.3)), 1e-13);
}

TEST(Assembly, DivStiffnessRankOnTwoTriangles) {
  const auto rt = make_space(build_rect_mesh({0, 1}, {0, 1}, 1, 1), Family::raviart_thomas, 0);
  const Eigen::MatrixXd k = oracle::dense(assemble_stiffness_div(rt, 1.0));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  lu.setThreshold(1e-10);
  EXPECT_EQ(lu.rank(), 2);
}

TEST(Assembly, CoefficientBilinearity) {
  const auto line = build_interval_mesh(0, 1, 5);
  const auto rt = make_space(build_rect_mesh({0, 1}, {0, 1}, 2, 3), Family::raviart_thomas, 0);
  const auto cg = make_space(line, Family::continuous_lagrange, 2);
  EXPECT_LE(max_abs_difference(assemble_stiffness_div(rt, 2.0), assemble_stiffness_div(rt, 1.0).scaled(2.0)), 1e-13);
  EXPECT_LE(max_abs_difference(assemble_mass(rt, 0.5), assemble_mass(rt, 1.0).scaled(0.5)), 1e-15);
  EXPECT_LE(max_abs_difference(assemble_stiffness_grad(cg, 3.0), assemble_stiffness_grad(cg, 1.0).scaled(3.0)), 1e-12);
}

TEST(Assembly, RaviartThomasFormsOfLowestOrderField) {
  const auto sq = build_rect_mesh({0, 1}, {0, 1}, 3, 2);
  const auto rt = make_space(sq, Family::raviart_thomas, 0);
  const double a = 0.4;
  const double b = -0.3;
  const double g = 0.8;
  const Vector u = interpolate(rt, [&](const Point& x) { return std::array<double, 2>{a + g * x[0], b + g * x[1]}; });
  // int (a + g x)^2 + (b + g y)^2 over the unit square
  const double mass_exact = a * a + a * g + g * g / 3.0 + b * b + b * g + g * g / 3.0;
  EXPECT_NEAR(quadratic_form(assemble_mass(rt, 1.0), u), mass_exact, 1e-13);
  EXPECT_NEAR(quadratic_form(assemble_stiffness_div(rt, 1.0), u), 4.0 * g * g, 1e-12);
  const auto w = derivative_space(rt);
  const Vector ones(static_cast<std::size_t>(w.dof_count()), 1.0);
  EXPECT_NEAR(bilinear_form(assemble_coupling_div(w, rt), ones, u), 2.0 * g, 1e-13);
}

TEST(Assembly, GradCouplingTwoCells) {
  const auto v = make_space(build_interval_mesh(0, 1, 2), Family::continuous_lagrange, 1, BoundaryCondition::dirichlet);
  const auto w = derivative_space(v);
  const Eigen::MatrixXd g = oracle::dense(assemble_coupling_grad(w, v));
  ASSERT_EQ(g.rows(), 2);
  ASSERT_EQ(g.cols(), 1);
  EXPECT_NEAR(g(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(g(1, 0), -1.0, 1e-15);
}

TEST(Assembly, GradCouplingAnnihilatesConstantStress) {
  const auto v = make_space(build_interval_mesh(0, 1, 6), Family::continuous_lagrange, 3, BoundaryCondition::dirichlet);
  const auto w = derivative_space(v);
  const Vector sigma = interpolate(w, [](const Point&) { return 2.5; });
  Vector out(static_cast<std::size_t>(v.dof_count()));
  assemble_coupling_grad(w, v).multiply_transpose(sigma, out);
  EXPECT_LE(norm_inf(out), 1e-13);
}

TEST(Assembly, GradCouplingExactImage) {
  // M_W^{-1} G u are the DG coefficients of du/dx
  const auto v = make_space(build_interval_mesh(0, 1, 5), Family::continuous_lagrange, 2);
  const auto w = derivative_space(v);
  const Vector u = interpolate(v, [](const Point& x) { return x[0] * x[0]; });
  const Vector image = solve_spd(assemble_mass(w, 1.0), assemble_coupling_grad(w, v) * u);
  const Vector expect = interpolate(w, [](const Point& x) { return 2.0 * x[0]; });
  for (std::size_t i = 0; i < image.size(); ++i) {
    EXPECT_NEAR(image[i], expect[i], 1e-12);
  }
}

TEST(Assembly, GradCouplingRejectsIncompatibleTestSpace) {
  const auto mesh = build_interval_mesh(0, 1, 4);
  const auto v = make_space(mesh, Family::continuous_lagrange, 2, BoundaryCondition::dirichlet);
  EXPECT_THROW(assemble_coupling_grad(make_space(mesh, Family::discontinuous_lagrange, 0), v), CompatibilityViolation);
  const auto rt = make_space(build_rect_mesh({0, 1}, {0, 1}, 2, 2), Family::raviart_thomas, 0);
  EXPECT_THROW(assemble_coupling_div(make_space(mesh, Family::discontinuous_lagrange, 0), rt), CompatibilityViolation);
}

TEST(Assembly, DivCouplingMirrorsGradIn1D) {
  const auto v = make_space(build_interval_mesh(0, 1, 6), Family::continuous_lagrange, 2, BoundaryCondition::dirichlet);
  const auto w = derivative_space(v);
  EXPECT_LE(max_abs_difference(assemble_coupling_div(w, v), assemble_coupling_grad(w, v)), 1e-14);
}

TEST(Assembly, DivCouplingDivergenceTheorem) {
  // sum over cells of D(i, e) is the net boundary flux of xi_e
  const auto sq = build_rect_mesh({0, 2}, {0, 1}, 3, 2);
  const auto rt = make_space(sq, Family::raviart_thomas, 0);
  const auto w = derivative_space(rt);
  const Eigen::MatrixXd d = oracle::dense(assemble_coupling_div(w, rt));
  const std::array<std::array<double, 2>, 3> mid{{{0.5, 0.5}, {0.0, 0.5}, {0.5, 0.0}}};
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(rt.dof_count());
  BasisValues b;
  for (Index c = 0; c < sq->num_cells(); ++c) {
    const auto verts = sq->cell(c);
    const auto dofs = rt.cell_dofs(c);
    const auto edges = sq->cell_edges(c);
    for (int i = 0; i < 3; ++i) {
      const Index e = edges[static_cast<std::size_t>(i)];
      if (!sq->is_boundary_edge(e)) {
        continue;
      }
      // outward normal times length of the edge opposite local vertex i
      const Point& p = sq->vertex(verts[static_cast<std::size_t>((i + 1) % 3)]);
      const Point& q = sq->vertex(verts[static_cast<std::size_t>((i + 2) % 3)]);
      const std::array<double, 2> outward{q[1] - p[1], -(q[0] - p[0])};
      rt.evaluate(c, mid[static_cast<std::size_t>(i)], b);
      for (int j = 0; j < 3; ++j) {
        flux(dofs[static_cast<std::size_t>(j)]) += b.value(j, 0) * outward[0] + b.value(j, 1) * outward[1];
      }
    }
  }
  const Eigen::VectorXd column_sums = d.colwise().sum();
  EXPECT_LE((column_sums - flux).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_GT(flux.cwiseAbs().maxCoeff(), 0.1);
}

TEST(Assembly, DivCouplingOfZeroField) {
  const auto rt = make_space(build_rect_mesh({0, 1}, {0, 1}, 2, 2), Family::raviart_thomas, 0);
  const Vector zero(static_cast<std::size_t>(rt.dof_count()), 0.0);
  EXPECT_EQ(norm_inf(assemble_coupling_div(derivative_space(rt), rt) * zero), 0.0);
}

TEST(Assembly, DiscreteIntegrationByParts) {
  // <xi, dv/dx> = -<dxi/dx, v> when v vanishes on the boundary
  const auto mesh = build_interval_mesh(0, 1, 7);
  for (int k = 1; k <= 3; ++k) {
    const auto v = make_space(mesh, Family::continuous_lagrange, k, BoundaryCondition::dirichlet);
    const auto xi = make_space(mesh, Family::continuous_lagrange, k);
    const SparseMatrix g = detail::assemble_value_derivative_1d(xi, v);
    const SparseMatrix d = detail::assemble_value_derivative_1d(v, xi);
    EXPECT_LE(max_abs_difference(g, d.transpose().scaled(-1.0)), 1e-13) << "k=" << k;
  }
}

TEST(Assembly, CompatibilityPredicates) {
  const auto mesh = build_interval_mesh(0, 1, 4);
  const auto v = make_space(mesh, Family::continuous_lagrange, 2);
  EXPECT_TRUE(holds_gradients_of(derivative_space(v), v));
  EXPECT_FALSE(holds_gradients_of(make_space(mesh, Family::discontinuous_lagrange, 3), v));
  EXPECT_FALSE(holds_gradients_of(make_space(mesh, Family::discontinuous_lagrange, 0), v));
  EXPECT_TRUE(holds_divergences_of(derivative_space(v), v));
  EXPECT_FALSE(holds_divergences_of(make_space(mesh, Family::discontinuous_lagrange, 3), v));
}
