#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wavelab/mesh.hpp"
#include "wavelab/quadrature.hpp"

namespace wavelab {

using Vector = std::vector<double>;

enum class Family { continuous_lagrange, discontinuous_lagrange, raviart_thomas };
enum class ValueShape { scalar, vector };
enum class BoundaryCondition { none, dirichlet };

/// Local basis functions of one cell evaluated at one point, already mapped to
/// physical coordinates and multiplied by the global orientation signs.
struct BasisValues {
  int num_local = 0;
  int components = 1;
  int dimension = 1;
  Vector values;      // [i * components + comp]
  Vector gradients;   // scalar spaces only: [i * dimension + d]
  Vector divergence;  // divergence (vector spaces) or d/dx (1D scalar spaces): [i]

  double value(int i, int comp = 0) const { return values[static_cast<std::size_t>(i * components + comp)]; }
  double gradient(int i, int d) const { return gradients[static_cast<std::size_t>(i * dimension + d)]; }
};

/// A finite element space over a mesh with its local-to-global map.
///
/// Free DOFs are numbered 0..dof_count()-1. Under homogeneous Dirichlet
/// conditions the boundary DOFs are eliminated; cell_dofs() reports them as -1.
class FunctionSpace {
 public:
  FunctionSpace(MeshPtr mesh, Family family, int degree, BoundaryCondition bc, ValueShape shape);

  const Mesh& mesh() const noexcept { return *mesh_; }
  const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
  Family family() const noexcept { return family_; }
  int degree() const noexcept { return degree_; }
  BoundaryCondition boundary_condition() const noexcept { return bc_; }
  ValueShape value_shape() const noexcept { return shape_; }
  int components() const noexcept { return shape_ == ValueShape::vector ? 2 : 1; }
  Index dof_count() const noexcept { return dof_count_; }
  int local_dof_count() const noexcept { return local_count_; }

  std::span<const Index> cell_dofs(Index c) const;
  std::span<const double> cell_signs(Index c) const;

  void evaluate(Index c, std::span<const double> ref, BasisValues& out) const;

  /// Default rule: 2k+1 Gauss points in 1D, the degree-4 triangle rule in 2D.
  QuadratureRule quadrature() const;

  /// Physical location of every free DOF (Lagrange families only).
  std::vector<Point> dof_points() const;

  /// Same mesh object, family, degree, shape and boundary condition.
  bool same_as(const FunctionSpace& other) const noexcept;

  std::string describe() const;

 private:
  void number_dofs();

  MeshPtr mesh_;
  Family family_;
  int degree_;
  BoundaryCondition bc_;
  ValueShape shape_;
  int local_count_ = 0;
  Index dof_count_ = 0;
  std::vector<Index> cell_dofs_;
  std::vector<double> cell_signs_;
};

FunctionSpace make_space(MeshPtr mesh, Family family, int degree,
                         BoundaryCondition bc = BoundaryCondition::none,
                         ValueShape shape = ValueShape::scalar);

/// Image of the space under its differential operator: 1D CG-k -> DG-(k-1),
/// 2D RT0 -> DG0. Throws UnsupportedSpace for anything else.
FunctionSpace derivative_space(const FunctionSpace& space);

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<std::array<double, 2>(const Point&)>;

/// Nodal interpolation for scalar Lagrange spaces.
Vector interpolate(const FunctionSpace& space, const ScalarField& f);
/// Edge fluxes for RT0, centroid values for vector DG0.
Vector interpolate(const FunctionSpace& space, const VectorField& f);

/// Value of a discrete field at a reference point of one cell.
std::array<double, 2> evaluate_field(const FunctionSpace& space, std::span<const double> coeffs,
                                     Index c, std::span<const double> ref);

/// L2 distance between a scalar discrete field and a function, integrated
/// with an over-resolved rule.
double l2_error(const FunctionSpace& space, std::span<const double> coeffs, const ScalarField& f);

/// Reference-cell rule able to integrate products of the two spaces' bases.
QuadratureRule pairing_quadrature(const FunctionSpace& a, const FunctionSpace& b);

std::string_view to_string(Family family) noexcept;

}  // namespace wavelab
