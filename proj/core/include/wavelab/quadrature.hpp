#pragma once

#include <array>
#include <vector>

namespace wavelab {

/// Quadrature on a reference cell: the unit interval [0, 1] or the unit
/// triangle {(0,0), (1,0), (0,1)}. Weights sum to the reference measure.
struct QuadratureRule {
  int dimension = 1;
  int exact_degree = 0;
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
};

/// n-point Gauss-Legendre rule on [0, 1], exact to degree 2n - 1.
QuadratureRule gauss_legendre(int n);

/// Six-point symmetric rule on the unit triangle, exact to degree 4.
QuadratureRule triangle_degree4();

}  // namespace wavelab
