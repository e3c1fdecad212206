#pragma once

#include "wavelab/function_space.hpp"
#include "wavelab/sparse.hpp"

namespace wavelab {

/// Constant material coefficients. Wave: density rho and stiffness k.
/// Maxwell reuses the same slots: epsilon in rho, and mu as the compliance,
/// i.e. k = 1/mu.
class MaterialParams {
 public:
  MaterialParams(double rho = 1.0, double k_stiff = 1.0);

  static MaterialParams electromagnetic(double epsilon, double mu) { return {epsilon, 1.0 / mu}; }

  double rho() const noexcept { return rho_; }
  double k_stiff() const noexcept { return k_; }
  double compliance() const noexcept { return 1.0 / k_; }
  double specific_volume() const noexcept { return 1.0 / rho_; }

 private:
  double rho_;
  double k_;
};

/// coeff * (psi_i, psi_j); vector spaces use the componentwise dot product.
SparseMatrix assemble_mass(const FunctionSpace& space, double coeff);

/// coeff * (grad psi_i, grad psi_j) on continuous Lagrange spaces.
SparseMatrix assemble_stiffness_grad(const FunctionSpace& space, double coeff);

/// coeff * (div xi_i, div xi_j) on H(div)-conforming spaces (1D CG, 2D RT0).
SparseMatrix assemble_stiffness_div(const FunctionSpace& space, double coeff);

/// G(e, j) = (xi_e, grad psi_j): rows index the test space W, columns the
/// continuous trial space. W must be the gradient image of the trial space.
SparseMatrix assemble_coupling_grad(const FunctionSpace& test_space, const FunctionSpace& trial_space);

/// D(i, e) = (psi_i, div xi_e): rows index W, columns the H(div) trial space.
/// W must be the divergence image of the trial space.
SparseMatrix assemble_coupling_div(const FunctionSpace& test_space, const FunctionSpace& trial_space);

/// (xi_e, rot grad psi_j) with rot(a, b) = (b, -a): the scalar-curl pairing of
/// the transverse-mode Maxwell system, assembled from the basis directly.
SparseMatrix assemble_coupling_curl(const FunctionSpace& test_space, const FunctionSpace& trial_space);

/// True when test_space is exactly the gradient image of trial_space.
bool holds_gradients_of(const FunctionSpace& test_space, const FunctionSpace& trial_space);
/// True when test_space is exactly the divergence image of trial_space.
bool holds_divergences_of(const FunctionSpace& test_space, const FunctionSpace& trial_space);

namespace detail {
/// (a_i, d b_j / dx) on two 1D spaces of the same mesh, no compatibility checks.
SparseMatrix assemble_value_derivative_1d(const FunctionSpace& a, const FunctionSpace& b);
}  // namespace detail

}  // namespace wavelab
