#include "wavelab/assembly.hpp"

#include <cmath>

#include "wavelab/errors.hpp"

namespace wavelab {

MaterialParams::MaterialParams(double rho, double k_stiff) : rho_(rho), k_(k_stiff) {
  if (!std::isfinite(rho_) || !std::isfinite(k_) || rho_ <= 0.0 || k_ <= 0.0) {
    throw InvalidArgument("material coefficients must be finite and strictly positive");
  }
}

namespace {

void require_positive(double coeff) {
  if (!std::isfinite(coeff) || coeff <= 0.0) {
    throw InvalidArgument("coefficient must be finite and strictly positive");
  }
}

// Accumulates coeff * sum_q w_q |J| kernel(test_i, trial_j) cell by cell, in
// cell-index order.
template <typename Kernel>
SparseMatrix assemble_pairing(const FunctionSpace& test, const FunctionSpace& trial, double coeff,
                              Kernel kernel) {
  if (test.mesh_ptr() != trial.mesh_ptr()) {
    throw CompatibilityViolation("paired spaces must live on the same mesh");
  }
  const Mesh& mesh = test.mesh();
  const QuadratureRule rule = pairing_quadrature(test, trial);
  const double ref_scale = mesh.dimension() == 1 ? 1.0 : 2.0;

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_cells() * test.local_dof_count() *
                                            trial.local_dof_count()));
  BasisValues test_basis;
  BasisValues trial_basis;
  std::vector<double> local(static_cast<std::size_t>(test.local_dof_count() * trial.local_dof_count()));
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    std::fill(local.begin(), local.end(), 0.0);
    const double jac = ref_scale * mesh.cell_measure(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      test.evaluate(c, rule.points[q], test_basis);
      trial.evaluate(c, rule.points[q], trial_basis);
      const double w = rule.weights[q] * jac;
      for (int i = 0; i < test_basis.num_local; ++i) {
        for (int j = 0; j < trial_basis.num_local; ++j) {
          local[static_cast<std::size_t>(i * trial_basis.num_local + j)] +=
              w * kernel(test_basis, i, trial_basis, j);
        }
      }
    }
    const auto test_dofs = test.cell_dofs(c);
    const auto trial_dofs = trial.cell_dofs(c);
    for (int i = 0; i < test.local_dof_count(); ++i) {
      const Index row = test_dofs[static_cast<std::size_t>(i)];
      if (row < 0) {
        continue;
      }
      for (int j = 0; j < trial.local_dof_count(); ++j) {
        const Index col = trial_dofs[static_cast<std::size_t>(j)];
        if (col < 0) {
          continue;
        }
        triplets.push_back({row, col, coeff * local[static_cast<std::size_t>(i * trial.local_dof_count() + j)]});
      }
    }
  }
  return SparseMatrix::from_triplets(test.dof_count(), trial.dof_count(), std::move(triplets));
}

double value_dot(const BasisValues& a, int i, const BasisValues& b, int j) {
  double sum = 0.0;
  for (int comp = 0; comp < a.components; ++comp) {
    sum += a.value(i, comp) * b.value(j, comp);
  }
  return sum;
}

bool is_h_div(const FunctionSpace& space) {
  return (space.mesh().dimension() == 1 && space.family() == Family::continuous_lagrange) ||
         space.family() == Family::raviart_thomas;
}

}  // namespace

SparseMatrix assemble_mass(const FunctionSpace& space, double coeff) {
  require_positive(coeff);
  return assemble_pairing(space, space, coeff, value_dot);
}

SparseMatrix assemble_stiffness_grad(const FunctionSpace& space, double coeff) {
  require_positive(coeff);
  if (space.family() != Family::continuous_lagrange) {
    throw UnsupportedSpace("gradient stiffness needs a continuous Lagrange space, got " + space.describe());
  }
  return assemble_pairing(space, space, coeff, [](const BasisValues& a, int i, const BasisValues& b, int j) {
    double sum = 0.0;
    for (int d = 0; d < a.dimension; ++d) {
      sum += a.gradient(i, d) * b.gradient(j, d);
    }
    return sum;
  });
}

SparseMatrix assemble_stiffness_div(const FunctionSpace& space, double coeff) {
  require_positive(coeff);
  if (!is_h_div(space)) {
    throw UnsupportedSpace("divergence stiffness needs an H(div) space, got " + space.describe());
  }
  return assemble_pairing(space, space, coeff, [](const BasisValues& a, int i, const BasisValues& b, int j) {
    return a.divergence[static_cast<std::size_t>(i)] * b.divergence[static_cast<std::size_t>(j)];
  });
}

bool holds_gradients_of(const FunctionSpace& test_space, const FunctionSpace& trial_space) {
  if (test_space.mesh_ptr() != trial_space.mesh_ptr() ||
      trial_space.family() != Family::continuous_lagrange ||
      test_space.family() != Family::discontinuous_lagrange) {
    return false;
  }
  if (trial_space.mesh().dimension() == 1) {
    return test_space.degree() == trial_space.degree() - 1 &&
           test_space.value_shape() == ValueShape::scalar;
  }
  // Gradients of P1 are cellwise constant vectors.
  return trial_space.degree() == 1 && test_space.degree() == 0 &&
         test_space.value_shape() == ValueShape::vector;
}

bool holds_divergences_of(const FunctionSpace& test_space, const FunctionSpace& trial_space) {
  if (test_space.mesh_ptr() != trial_space.mesh_ptr() || !is_h_div(trial_space) ||
      test_space.family() != Family::discontinuous_lagrange ||
      test_space.value_shape() != ValueShape::scalar) {
    return false;
  }
  if (trial_space.family() == Family::raviart_thomas) {
    return test_space.degree() == 0;
  }
  return test_space.degree() == trial_space.degree() - 1;
}

SparseMatrix assemble_coupling_grad(const FunctionSpace& test_space, const FunctionSpace& trial_space) {
  if (!holds_gradients_of(test_space, trial_space)) {
    throw CompatibilityViolation(test_space.describe() + " does not hold the gradients of " +
                                 trial_space.describe());
  }
  return assemble_pairing(test_space, trial_space, 1.0,
                          [](const BasisValues& a, int i, const BasisValues& b, int j) {
                            double sum = 0.0;
                            for (int d = 0; d < b.dimension; ++d) {
                              sum += a.value(i, a.components == 1 ? 0 : d) * b.gradient(j, d);
                            }
                            return sum;
                          });
}

SparseMatrix assemble_coupling_div(const FunctionSpace& test_space, const FunctionSpace& trial_space) {
  if (!holds_divergences_of(test_space, trial_space)) {
    throw CompatibilityViolation(test_space.describe() + " is not the divergence image of " +
                                 trial_space.describe());
  }
  return assemble_pairing(test_space, trial_space, 1.0,
                          [](const BasisValues& a, int i, const BasisValues& b, int j) {
                            return a.value(i) * b.divergence[static_cast<std::size_t>(j)];
                          });
}

SparseMatrix assemble_coupling_curl(const FunctionSpace& test_space, const FunctionSpace& trial_space) {
  if (trial_space.mesh().dimension() != 2 || !holds_gradients_of(test_space, trial_space)) {
    throw CompatibilityViolation("scalar-curl pairing needs 2D CG1 and vector DG0 on one mesh");
  }
  return assemble_pairing(test_space, trial_space, 1.0,
                          [](const BasisValues& a, int i, const BasisValues& b, int j) {
                            // curl of a scalar: (d/dy, -d/dx)
                            return a.value(i, 0) * b.gradient(j, 1) - a.value(i, 1) * b.gradient(j, 0);
                          });
}

namespace detail {

SparseMatrix assemble_value_derivative_1d(const FunctionSpace& a, const FunctionSpace& b) {
  if (a.mesh().dimension() != 1 || b.mesh().dimension() != 1) {
    throw UnsupportedSpace("value-derivative pairing is 1D only");
  }
  return assemble_pairing(a, b, 1.0, [](const BasisValues& x, int i, const BasisValues& y, int j) {
    return x.value(i) * y.gradient(j, 0);
  });
}

}  // namespace detail

}  // namespace wavelab
