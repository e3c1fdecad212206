#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/function_space.hpp"
#include "wavelab/mesh.hpp"
#include "wavelab/quadrature.hpp"

using namespace wavelab;

namespace {

double monomial_integral_interval(int p) { return 1.0 / (p + 1); }

// int_T x^a y^b over the unit triangle = a! b! / (a + b + 2)!
double monomial_integral_triangle(int a, int b) {
  return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
}

}  // namespace

TEST(Mesh, IntervalTwoCells) {
  const auto m = build_interval_mesh(0.0, 1.0, 2);
  ASSERT_EQ(m->num_vertices(), 3);
  ASSERT_EQ(m->num_cells(), 2);
  EXPECT_DOUBLE_EQ(m->vertex(0)[0], 0.0);
  EXPECT_DOUBLE_EQ(m->vertex(1)[0], 0.5);
  EXPECT_DOUBLE_EQ(m->vertex(2)[0], 1.0);
  EXPECT_TRUE(m->is_boundary_vertex(0));
  EXPECT_FALSE(m->is_boundary_vertex(1));
  EXPECT_TRUE(m->is_boundary_vertex(2));
}

TEST(Mesh, IntervalSingleCell) {
  const auto m = build_interval_mesh(0.0, 1.0, 1);
  EXPECT_EQ(m->num_cells(), 1);
  EXPECT_TRUE(m->is_boundary_vertex(0));
  EXPECT_TRUE(m->is_boundary_vertex(1));
}

TEST(Mesh, IntervalSize) {
  EXPECT_DOUBLE_EQ(build_interval_mesh(-1.0, 3.0, 8)->h(), 0.5);
}

TEST(Mesh, IntervalCellsSortedAndContiguous) {
  const auto m = build_interval_mesh(-2.0, 5.0, 13);
  for (Index c = 0; c < m->num_cells(); ++c) {
    const auto v = m->cell(c);
    EXPECT_LT(m->vertex(v[0])[0], m->vertex(v[1])[0]);
    if (c > 0) {
      EXPECT_EQ(m->cell(c - 1)[1], v[0]);
    }
  }
  EXPECT_NEAR(m->measure(), 7.0, 7.0 * 1e-12);
}

TEST(Mesh, IntervalRejectsBadInput) {
  EXPECT_THROW(build_interval_mesh(1.0, 0.0, 4), InvalidArgument);
  EXPECT_THROW(build_interval_mesh(0.0, 0.0, 4), InvalidArgument);
  EXPECT_THROW(build_interval_mesh(0.0, 1.0, 0), InvalidArgument);
  EXPECT_THROW(build_interval_mesh(0.0, std::numeric_limits<double>::infinity(), 4), InvalidArgument);
  EXPECT_THROW(build_interval_mesh(std::nan(""), 1.0, 4), InvalidArgument);
}

TEST(Mesh, RectangleCounts) {
  const auto one = build_rect_mesh({0, 1}, {0, 1}, 1, 1);
  EXPECT_EQ(one->num_cells(), 2);
  EXPECT_EQ(one->num_vertices(), 4);
  const auto two = build_rect_mesh({0, 1}, {0, 1}, 2, 2);
  EXPECT_EQ(two->num_cells(), 8);
  EXPECT_EQ(two->num_vertices(), 9);
  EXPECT_EQ(two->num_edges(), 16);
}

TEST(Mesh, RectanglePartitionAndOrientation) {
  for (auto [nx, ny] : {std::pair<Index, Index>{1, 1}, {3, 2}, {7, 5}, {16, 16}}) {
    const auto m = build_rect_mesh({0, 1}, {0, 1}, nx, ny);
    double area = 0.0;
    for (Index c = 0; c < m->num_cells(); ++c) {
      const auto v = m->cell(c);
      const Point& a = m->vertex(v[0]);
      const Point& b = m->vertex(v[1]);
      const Point& d = m->vertex(v[2]);
      const double signed_area = 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
      EXPECT_GT(signed_area, 0.0);
      EXPECT_NEAR(signed_area, m->cell_measure(c), 1e-15);
      area += m->cell_measure(c);
    }
    EXPECT_NEAR(area, 1.0, 1e-12);
    EXPECT_EQ(m->num_cells(), 2 * nx * ny);
  }
}

TEST(Mesh, RectangleDiagonalSplit) {
  // each quad is cut from its lower-left to its upper-right corner
  const auto m = build_rect_mesh({0, 1}, {0, 1}, 1, 1);
  for (Index c = 0; c < m->num_cells(); ++c) {
    bool has_origin = false;
    bool has_far = false;
    for (Index v : m->cell(c)) {
      has_origin = has_origin || (m->vertex(v)[0] == 0.0 && m->vertex(v)[1] == 0.0);
      has_far = has_far || (m->vertex(v)[0] == 1.0 && m->vertex(v)[1] == 1.0);
    }
    EXPECT_TRUE(has_origin && has_far);
  }
}

TEST(Mesh, RectangleEdgesOrientedLowToHigh) {
  const auto m = build_rect_mesh({0, 2}, {0, 1}, 3, 2);
  Index boundary = 0;
  for (Index e = 0; e < m->num_edges(); ++e) {
    EXPECT_LT(m->edge(e).first, m->edge(e).second);
    boundary += m->is_boundary_edge(e) ? 1 : 0;
  }
  EXPECT_EQ(boundary, 2 * (3 + 2));
}

TEST(Mesh, RectangleRejectsDegenerateExtent) {
  EXPECT_THROW(build_rect_mesh({0, 0}, {0, 1}, 2, 2), InvalidArgument);
  EXPECT_THROW(build_rect_mesh({0, 1}, {1, 0}, 2, 2), InvalidArgument);
  EXPECT_THROW(build_rect_mesh({0, 1}, {0, 1}, 0, 2), InvalidArgument);
}

TEST(Quadrature, GaussLegendreExactness) {
  for (int n = 1; n <= 9; ++n) {
    const QuadratureRule q = gauss_legendre(n);
    ASSERT_EQ(q.size(), static_cast<std::size_t>(n));
    for (double w : q.weights) {
      EXPECT_GT(w, 0.0);
    }
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        s += q.weights[i] * std::pow(q.points[i][0], p);
      }
      EXPECT_NEAR(s, monomial_integral_interval(p), 1e-14) << "n=" << n << " p=" << p;
    }
  }
}

TEST(Quadrature, TriangleDegreeFour) {
  const QuadratureRule q = triangle_degree4();
  EXPECT_EQ(q.exact_degree, 4);
  for (double w : q.weights) {
    EXPECT_GT(w, 0.0);
  }
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; a + b <= 4; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        s += q.weights[i] * std::pow(q.points[i][0], a) * std::pow(q.points[i][1], b);
      }
      EXPECT_NEAR(s, monomial_integral_triangle(a, b), 1e-15) << a << "," << b;
    }
  }
}

TEST(FunctionSpace, DofCounts) {
  const auto m4 = build_interval_mesh(0, 1, 4);
  EXPECT_EQ(make_space(m4, Family::continuous_lagrange, 2, BoundaryCondition::dirichlet).dof_count(), 7);
  EXPECT_EQ(make_space(m4, Family::discontinuous_lagrange, 1).dof_count(), 8);
  for (int k = 1; k <= 4; ++k) {
    EXPECT_EQ(make_space(m4, Family::continuous_lagrange, k, BoundaryCondition::dirichlet).dof_count(), 4 * k - 1);
    EXPECT_EQ(make_space(m4, Family::continuous_lagrange, k).dof_count(), 4 * k + 1);
  }
  const auto sq = build_rect_mesh({0, 1}, {0, 1}, 2, 2);
  EXPECT_EQ(make_space(sq, Family::raviart_thomas, 0).dof_count(), 16);
  EXPECT_EQ(make_space(sq, Family::discontinuous_lagrange, 0).dof_count(), 8);
  EXPECT_EQ(make_space(sq, Family::continuous_lagrange, 1, BoundaryCondition::dirichlet).dof_count(), 1);
}

TEST(FunctionSpace, UnsupportedCombinations) {
  const auto line = build_interval_mesh(0, 1, 4);
  const auto sq = build_rect_mesh({0, 1}, {0, 1}, 2, 2);
  EXPECT_THROW(make_space(line, Family::continuous_lagrange, 5), UnsupportedSpace);
  EXPECT_THROW(make_space(line, Family::raviart_thomas, 0), UnsupportedSpace);
  EXPECT_THROW(make_space(sq, Family::continuous_lagrange, 2), UnsupportedSpace);
  EXPECT_THROW(make_space(sq, Family::discontinuous_lagrange, 1), UnsupportedSpace);
}

TEST(FunctionSpace, ContinuousDofsSharedDiscontinuousLocal) {
  const auto m = build_interval_mesh(0, 1, 5);
  const auto cg = make_space(m, Family::continuous_lagrange, 3);
  const auto dg = make_space(m, Family::discontinuous_lagrange, 3);
  for (Index c = 0; c + 1 < m->num_cells(); ++c) {
    const auto a = cg.cell_dofs(c);
    const auto b = cg.cell_dofs(c + 1);
    const auto shared = std::count_if(a.begin(), a.end(), [&](Index d) { return std::find(b.begin(), b.end(), d) != b.end(); });
    EXPECT_EQ(shared, 1);
    const auto da = dg.cell_dofs(c);
    const auto db = dg.cell_dofs(c + 1);
    for (Index d : da) {
      EXPECT_EQ(std::find(db.begin(), db.end(), d), db.end());
    }
  }
}

TEST(FunctionSpace, DirichletDofsExcluded) {
  const auto m = build_interval_mesh(0, 1, 3);
  const auto v = make_space(m, Family::continuous_lagrange, 2, BoundaryCondition::dirichlet);
  int eliminated = 0;
  for (Index c = 0; c < m->num_cells(); ++c) {
    for (Index d : v.cell_dofs(c)) {
      eliminated += d < 0 ? 1 : 0;
      EXPECT_LT(d, v.dof_count());
    }
  }
  EXPECT_EQ(eliminated, 2);
}

TEST(FunctionSpace, PartitionOfUnity) {
  const auto line = build_interval_mesh(0, 2, 5);
  const auto sq = build_rect_mesh({0, 1}, {0, 2}, 3, 4);
  std::vector<FunctionSpace> spaces;
  for (int k = 1; k <= 4; ++k) {
    spaces.push_back(make_space(line, Family::continuous_lagrange, k));
    spaces.push_back(make_space(line, Family::discontinuous_lagrange, k));
  }
  spaces.push_back(make_space(line, Family::discontinuous_lagrange, 0));
  spaces.push_back(make_space(sq, Family::continuous_lagrange, 1));
  spaces.push_back(make_space(sq, Family::discontinuous_lagrange, 0));
  BasisValues b;
  for (const auto& s : spaces) {
    const QuadratureRule q = s.quadrature();
    for (Index c = 0; c < s.mesh().num_cells(); ++c) {
      for (const auto& p : q.points) {
        s.evaluate(c, std::span<const double>(p.data(), static_cast<std::size_t>(s.mesh().dimension())), b);
        double sum = 0.0;
        for (int i = 0; i < b.num_local; ++i) {
          sum += b.value(i);
        }
        EXPECT_NEAR(sum, 1.0, 1e-13) << s.describe();
      }
    }
  }
}

TEST(FunctionSpace, InterpolationReproducesPolynomials) {
  const auto m = build_interval_mesh(-1, 2, 6);
  for (int k = 1; k <= 4; ++k) {
    const auto s = make_space(m, Family::continuous_lagrange, k);
    auto poly = [k](const Point& x) {
      double v = 0.0;
      for (int j = 0; j <= k; ++j) {
        v += (j + 1) * std::pow(x[0], j) * (j % 2 ? -0.5 : 1.0);
      }
      return v;
    };
    const Vector u = interpolate(s, poly);
    double worst = 0.0;
    for (Index c = 0; c < m->num_cells(); ++c) {
      for (const auto& p : s.quadrature().points) {
        const double ref[1] = {p[0]};
        const double value = evaluate_field(s, u, c, ref)[0];
        worst = std::max(worst, std::abs(value - poly(m->map_to_physical(c, ref))));
      }
    }
    EXPECT_LE(worst, 1e-12) << "k=" << k;
  }
  const auto sq = build_rect_mesh({0, 1}, {0, 1}, 3, 3);
  const auto p1 = make_space(sq, Family::continuous_lagrange, 1);
  auto affine = [](const Point& x) { return 0.3 - 2.0 * x[0] + 0.7 * x[1]; };
  const Vector u = interpolate(p1, affine);
  for (Index c = 0; c < sq->num_cells(); ++c) {
    for (const auto& p : p1.quadrature().points) {
      EXPECT_NEAR(evaluate_field(p1, u, c, p)[0], affine(sq->map_to_physical(c, p)), 1e-12);
    }
  }
}

TEST(FunctionSpace, RaviartThomasNormalTraceContinuity) {
  const auto m = build_rect_mesh({0, 1}, {0, 1}, 4, 3);
  const auto rt = make_space(m, Family::raviart_thomas, 0);
  // reference midpoint of the edge opposite local vertex i
  const std::array<std::array<double, 2>, 3> mid{{{0.5, 0.5}, {0.0, 0.5}, {0.5, 0.0}}};
  std::vector<std::vector<std::pair<Index, int>>> owners(static_cast<std::size_t>(m->num_edges()));
  for (Index c = 0; c < m->num_cells(); ++c) {
    const auto edges = m->cell_edges(c);
    for (int i = 0; i < 3; ++i) {
      owners[static_cast<std::size_t>(edges[static_cast<std::size_t>(i)])].push_back({c, i});
    }
  }
  BasisValues b;
  int interior = 0;
  for (Index e = 0; e < m->num_edges(); ++e) {
    const auto& own = owners[static_cast<std::size_t>(e)];
    if (own.size() != 2) {
      continue;
    }
    ++interior;
    const Point& a = m->vertex(m->edge(e).first);
    const Point& z = m->vertex(m->edge(e).second);
    const std::array<double, 2> normal{z[1] - a[1], -(z[0] - a[0])};
    double trace[2];
    for (int side = 0; side < 2; ++side) {
      const auto [c, local_edge] = own[static_cast<std::size_t>(side)];
      rt.evaluate(c, mid[static_cast<std::size_t>(local_edge)], b);
      const auto dofs = rt.cell_dofs(c);
      const auto j = static_cast<int>(std::find(dofs.begin(), dofs.end(), e) - dofs.begin());
      ASSERT_LT(j, 3);
      trace[side] = b.value(j, 0) * normal[0] + b.value(j, 1) * normal[1];
    }
    EXPECT_NEAR(trace[0], trace[1], 1e-13);
    EXPECT_GT(std::abs(trace[0]), 0.1);
  }
  EXPECT_GT(interior, 0);
}

TEST(FunctionSpace, DerivativeSpaceDegrees) {
  const auto m = build_interval_mesh(0, 1, 6);
  const auto cg2 = make_space(m, Family::continuous_lagrange, 2, BoundaryCondition::dirichlet);
  const auto w = derivative_space(cg2);
  EXPECT_EQ(w.family(), Family::discontinuous_lagrange);
  EXPECT_EQ(w.degree(), 1);
  EXPECT_EQ(w.dof_count(), 12);
  const auto sq = build_rect_mesh({0, 1}, {0, 1}, 3, 3);
  const auto dg0 = derivative_space(make_space(sq, Family::raviart_thomas, 0));
  EXPECT_EQ(dg0.family(), Family::discontinuous_lagrange);
  EXPECT_EQ(dg0.degree(), 0);
  EXPECT_EQ(dg0.dof_count(), sq->num_cells());
  EXPECT_THROW(derivative_space(make_space(m, Family::discontinuous_lagrange, 1)), UnsupportedSpace);
  EXPECT_THROW(derivative_space(make_space(sq, Family::continuous_lagrange, 1)), UnsupportedSpace);
}

TEST(FunctionSpace, DerivativeImageProperty1D) {
  // d/dx of every basis function of CG-k is a polynomial of degree k-1 per
  // cell: the least-squares fit by the DG-(k-1) basis leaves no residual.
  const auto m = build_interval_mesh(0, 1.5, 4);
  const QuadratureRule pts = gauss_legendre(8);
  BasisValues bv;
  BasisValues bw;
  for (int k = 1; k <= 4; ++k) {
    const auto v = make_space(m, Family::continuous_lagrange, k);
    const auto w = derivative_space(v);
    for (Index c = 0; c < m->num_cells(); ++c) {
      Eigen::MatrixXd basis(static_cast<Eigen::Index>(pts.size()), w.local_dof_count());
      Eigen::MatrixXd target(static_cast<Eigen::Index>(pts.size()), v.local_dof_count());
      for (std::size_t p = 0; p < pts.size(); ++p) {
        const double ref[1] = {pts.points[p][0]};
        v.evaluate(c, ref, bv);
        w.evaluate(c, ref, bw);
        for (int j = 0; j < bw.num_local; ++j) {
          basis(static_cast<Eigen::Index>(p), j) = bw.value(j);
        }
        for (int j = 0; j < bv.num_local; ++j) {
          target(static_cast<Eigen::Index>(p), j) = bv.gradient(j, 0);
        }
      }
      const Eigen::MatrixXd coeffs = basis.colPivHouseholderQr().solve(target);
      EXPECT_LE(oracle::max_abs(basis * coeffs - target) / std::max(1.0, oracle::max_abs(target)), 1e-12);
    }
  }
}

TEST(FunctionSpace, RaviartThomasDivergenceIsCellConstant) {
  const auto m = build_rect_mesh({0, 2}, {0, 1}, 3, 2);
  const auto rt = make_space(m, Family::raviart_thomas, 0);
  BasisValues b;
  const QuadratureRule q = triangle_degree4();
  for (Index c = 0; c < m->num_cells(); ++c) {
    rt.evaluate(c, q.points[0], b);
    const Vector first = b.divergence;
    for (const auto& p : q.points) {
      rt.evaluate(c, p, b);
      for (int j = 0; j < 3; ++j) {
        EXPECT_NEAR(b.divergence[static_cast<std::size_t>(j)], first[static_cast<std::size_t>(j)], 1e-12);
      }
    }
  }
}

TEST(FunctionSpace, RaviartThomasInterpolatesLowestOrderFields) {
  // fields (a + g x, b + g y) lie in RT0
  const auto m = build_rect_mesh({0, 1}, {0, 1}, 3, 3);
  const auto rt = make_space(m, Family::raviart_thomas, 0);
  auto f = [](const Point& x) { return std::array<double, 2>{0.2 - 1.5 * x[0], -0.7 - 1.5 * x[1]}; };
  const Vector u = interpolate(rt, f);
  for (Index c = 0; c < m->num_cells(); ++c) {
    for (const auto& p : triangle_degree4().points) {
      const auto value = evaluate_field(rt, u, c, p);
      const auto exact = f(m->map_to_physical(c, p));
      EXPECT_NEAR(value[0], exact[0], 1e-12);
      EXPECT_NEAR(value[1], exact[1], 1e-12);
    }
  }
}
