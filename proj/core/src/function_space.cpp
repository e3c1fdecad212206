#include "wavelab/function_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wavelab/errors.hpp"

namespace wavelab {

namespace {

constexpr int kMaxDegree1D = 4;

double lagrange_node(int degree, int j) {
  return degree == 0 ? 0.5 : static_cast<double>(j) / static_cast<double>(degree);
}

// Value and derivative of the j-th equispaced Lagrange polynomial on [0, 1].
void lagrange_1d(int degree, int j, double xi, double& value, double& deriv) {
  if (degree == 0) {
    value = 1.0;
    deriv = 0.0;
    return;
  }
  const double xj = lagrange_node(degree, j);
  value = 1.0;
  deriv = 0.0;
  for (int m = 0; m <= degree; ++m) {
    if (m == j) {
      continue;
    }
    const double xm = lagrange_node(degree, m);
    const double factor = (xi - xm) / (xj - xm);
    deriv = deriv * factor + value / (xj - xm);
    value *= factor;
  }
}

bool supported(int dim, Family family, int degree, ValueShape shape) {
  if (dim == 1) {
    if (shape != ValueShape::scalar) {
      return false;
    }
    switch (family) {
      case Family::continuous_lagrange:
        return degree >= 1 && degree <= kMaxDegree1D;
      case Family::discontinuous_lagrange:
        return degree >= 0 && degree <= kMaxDegree1D;
      case Family::raviart_thomas:
        return false;
    }
  }
  switch (family) {
    case Family::continuous_lagrange:
      return degree == 1 && shape == ValueShape::scalar;
    case Family::discontinuous_lagrange:
      return degree == 0;
    case Family::raviart_thomas:
      return degree == 0;
  }
  return false;
}

}  // namespace

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::continuous_lagrange:
      return "CG";
    case Family::discontinuous_lagrange:
      return "DG";
    case Family::raviart_thomas:
      return "RT";
  }
  return "?";
}

FunctionSpace::FunctionSpace(MeshPtr mesh, Family family, int degree, BoundaryCondition bc,
                             ValueShape shape)
    : mesh_(std::move(mesh)), family_(family), degree_(degree), bc_(bc), shape_(shape) {
  if (!mesh_) {
    throw InvalidArgument("function space needs a mesh");
  }
  if (family_ == Family::raviart_thomas) {
    shape_ = ValueShape::vector;
  }
  if (!supported(mesh_->dimension(), family_, degree_, shape_)) {
    throw UnsupportedSpace("unsupported space " + describe());
  }
  if (bc_ == BoundaryCondition::dirichlet && family_ != Family::continuous_lagrange) {
    throw UnsupportedSpace("Dirichlet elimination is only defined for continuous Lagrange spaces");
  }
  number_dofs();
}

void FunctionSpace::number_dofs() {
  const Mesh& m = *mesh_;
  const Index cells = m.num_cells();
  const bool dirichlet = bc_ == BoundaryCondition::dirichlet;

  if (m.dimension() == 1) {
    local_count_ = degree_ + 1;
    cell_dofs_.resize(static_cast<std::size_t>(cells * local_count_));
    if (family_ == Family::continuous_lagrange) {
      const Index nodes = cells * degree_ + 1;
      for (Index c = 0; c < cells; ++c) {
        for (int j = 0; j < local_count_; ++j) {
          const Index g = c * degree_ + j;
          Index dof = g;
          if (dirichlet) {
            dof = (g == 0 || g == nodes - 1) ? -1 : g - 1;
          }
          cell_dofs_[static_cast<std::size_t>(c * local_count_ + j)] = dof;
        }
      }
      dof_count_ = dirichlet ? nodes - 2 : nodes;
    } else {
      for (Index i = 0; i < static_cast<Index>(cell_dofs_.size()); ++i) {
        cell_dofs_[static_cast<std::size_t>(i)] = i;
      }
      dof_count_ = static_cast<Index>(cell_dofs_.size());
    }
    cell_signs_.assign(cell_dofs_.size(), 1.0);
    return;
  }

  switch (family_) {
    case Family::continuous_lagrange: {
      local_count_ = 3;
      std::vector<Index> vertex_dof(static_cast<std::size_t>(m.num_vertices()), -1);
      Index next = 0;
      for (Index v = 0; v < m.num_vertices(); ++v) {
        if (!(dirichlet && m.is_boundary_vertex(v))) {
          vertex_dof[static_cast<std::size_t>(v)] = next++;
        }
      }
      dof_count_ = next;
      for (Index c = 0; c < cells; ++c) {
        for (Index v : m.cell(c)) {
          cell_dofs_.push_back(vertex_dof[static_cast<std::size_t>(v)]);
        }
      }
      cell_signs_.assign(cell_dofs_.size(), 1.0);
      break;
    }
    case Family::discontinuous_lagrange: {
      local_count_ = components();
      for (Index c = 0; c < cells; ++c) {
        for (int comp = 0; comp < local_count_; ++comp) {
          cell_dofs_.push_back(c * local_count_ + comp);
        }
      }
      dof_count_ = cells * local_count_;
      cell_signs_.assign(cell_dofs_.size(), 1.0);
      break;
    }
    case Family::raviart_thomas: {
      local_count_ = 3;
      dof_count_ = m.num_edges();
      for (Index c = 0; c < cells; ++c) {
        const auto verts = m.cell(c);
        const auto edges = m.cell_edges(c);
        for (int i = 0; i < 3; ++i) {
          cell_dofs_.push_back(edges[static_cast<std::size_t>(i)]);
          // Counter-clockwise traversal of local edge i runs from vertex i+1
          // to vertex i+2; the global edge runs from the lower index.
          const Index a = verts[static_cast<std::size_t>((i + 1) % 3)];
          const Index b = verts[static_cast<std::size_t>((i + 2) % 3)];
          cell_signs_.push_back(a < b ? 1.0 : -1.0);
        }
      }
      break;
    }
  }
}

std::span<const Index> FunctionSpace::cell_dofs(Index c) const {
  return {cell_dofs_.data() + static_cast<std::size_t>(c * local_count_),
          static_cast<std::size_t>(local_count_)};
}

std::span<const double> FunctionSpace::cell_signs(Index c) const {
  return {cell_signs_.data() + static_cast<std::size_t>(c * local_count_),
          static_cast<std::size_t>(local_count_)};
}

void FunctionSpace::evaluate(Index c, std::span<const double> ref, BasisValues& out) const {
  const Mesh& m = *mesh_;
  const int dim = m.dimension();
  out.num_local = local_count_;
  out.components = components();
  out.dimension = dim;
  out.values.assign(static_cast<std::size_t>(local_count_ * out.components), 0.0);
  out.gradients.assign(static_cast<std::size_t>(local_count_ * dim), 0.0);
  out.divergence.assign(static_cast<std::size_t>(local_count_), 0.0);

  if (dim == 1) {
    const double length = m.cell_measure(c);
    for (int j = 0; j < local_count_; ++j) {
      double value = 0.0;
      double deriv = 0.0;
      lagrange_1d(degree_, j, ref[0], value, deriv);
      out.values[static_cast<std::size_t>(j)] = value;
      out.gradients[static_cast<std::size_t>(j)] = deriv / length;
      out.divergence[static_cast<std::size_t>(j)] = deriv / length;
    }
    return;
  }

  const auto verts = m.cell(c);
  const Point& p0 = m.vertex(verts[0]);
  const Point& p1 = m.vertex(verts[1]);
  const Point& p2 = m.vertex(verts[2]);
  const double area = m.cell_measure(c);

  switch (family_) {
    case Family::continuous_lagrange: {
      const double xi = ref[0];
      const double eta = ref[1];
      out.values = {1.0 - xi - eta, xi, eta};
      // grad(lambda_i) = rot90(p_{i+2} - p_{i+1}) / (2 |T|)
      const std::array<const Point*, 3> p = {&p0, &p1, &p2};
      for (int i = 0; i < 3; ++i) {
        const Point& a = *p[static_cast<std::size_t>((i + 1) % 3)];
        const Point& b = *p[static_cast<std::size_t>((i + 2) % 3)];
        out.gradients[static_cast<std::size_t>(2 * i)] = (a[1] - b[1]) / (2.0 * area);
        out.gradients[static_cast<std::size_t>(2 * i + 1)] = (b[0] - a[0]) / (2.0 * area);
      }
      break;
    }
    case Family::discontinuous_lagrange: {
      if (shape_ == ValueShape::scalar) {
        out.values[0] = 1.0;
      } else {
        out.values = {1.0, 0.0, 0.0, 1.0};
      }
      break;
    }
    case Family::raviart_thomas: {
      const Point x = m.map_to_physical(c, ref);
      const std::array<const Point*, 3> p = {&p0, &p1, &p2};
      const auto signs = cell_signs(c);
      for (int i = 0; i < 3; ++i) {
        const double s = signs[static_cast<std::size_t>(i)];
        const Point& pi = *p[static_cast<std::size_t>(i)];
        out.values[static_cast<std::size_t>(2 * i)] = s * (x[0] - pi[0]) / (2.0 * area);
        out.values[static_cast<std::size_t>(2 * i + 1)] = s * (x[1] - pi[1]) / (2.0 * area);
        out.divergence[static_cast<std::size_t>(i)] = s / area;
      }
      break;
    }
  }
}

QuadratureRule FunctionSpace::quadrature() const {
  if (mesh_->dimension() == 1) {
    return gauss_legendre(2 * degree_ + 1);
  }
  return triangle_degree4();
}

std::vector<Point> FunctionSpace::dof_points() const {
  if (family_ == Family::raviart_thomas) {
    throw UnsupportedSpace("RT0 degrees of freedom are edge fluxes, not point values");
  }
  const Mesh& m = *mesh_;
  std::vector<Point> points(static_cast<std::size_t>(dof_count_));
  for (Index c = 0; c < m.num_cells(); ++c) {
    const auto dofs = cell_dofs(c);
    for (int j = 0; j < local_count_; ++j) {
      const Index dof = dofs[static_cast<std::size_t>(j)];
      if (dof < 0) {
        continue;
      }
      std::array<double, 2> ref{};
      if (m.dimension() == 1) {
        ref[0] = lagrange_node(degree_, j);
      } else if (family_ == Family::continuous_lagrange) {
        ref = j == 0 ? std::array<double, 2>{0.0, 0.0}
                     : (j == 1 ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0});
      } else {
        ref = {1.0 / 3.0, 1.0 / 3.0};
      }
      points[static_cast<std::size_t>(dof)] = m.map_to_physical(c, ref);
    }
  }
  return points;
}

bool FunctionSpace::same_as(const FunctionSpace& other) const noexcept {
  return mesh_ == other.mesh_ && family_ == other.family_ && degree_ == other.degree_ &&
         bc_ == other.bc_ && shape_ == other.shape_;
}

std::string FunctionSpace::describe() const {
  std::ostringstream os;
  os << to_string(family_) << degree_ << (shape_ == ValueShape::vector ? "[vec]" : "")
     << (bc_ == BoundaryCondition::dirichlet ? "_0" : "") << " on " << mesh_->dimension() << "D mesh";
  return os.str();
}

FunctionSpace make_space(MeshPtr mesh, Family family, int degree, BoundaryCondition bc,
                         ValueShape shape) {
  return FunctionSpace(std::move(mesh), family, degree, bc, shape);
}

FunctionSpace derivative_space(const FunctionSpace& space) {
  const int dim = space.mesh().dimension();
  if (dim == 1 && space.family() == Family::continuous_lagrange) {
    return make_space(space.mesh_ptr(), Family::discontinuous_lagrange, space.degree() - 1);
  }
  if (dim == 2 && space.family() == Family::raviart_thomas) {
    return make_space(space.mesh_ptr(), Family::discontinuous_lagrange, 0);
  }
  throw UnsupportedSpace("no representable derivative image for " + space.describe());
}

Vector interpolate(const FunctionSpace& space, const ScalarField& f) {
  if (space.value_shape() != ValueShape::scalar) {
    throw InvalidArgument("scalar interpolation requested on a vector space");
  }
  const auto points = space.dof_points();
  Vector coeffs(points.size());
  std::transform(points.begin(), points.end(), coeffs.begin(), f);
  return coeffs;
}

Vector interpolate(const FunctionSpace& space, const VectorField& f) {
  const Mesh& m = space.mesh();
  Vector coeffs(static_cast<std::size_t>(space.dof_count()), 0.0);
  if (space.family() == Family::raviart_thomas) {
    const QuadratureRule rule = gauss_legendre(3);
    for (Index e = 0; e < m.num_edges(); ++e) {
      const auto& [a, b] = m.edge(e);
      const Point& pa = m.vertex(a);
      const Point& pb = m.vertex(b);
      // Unit normal: tangent a -> b rotated clockwise; scaled by the length it
      // turns the line integral into a plain parameter integral.
      const std::array<double, 2> scaled_normal = {pb[1] - pa[1], -(pb[0] - pa[0])};
      double flux = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double t = rule.points[q][0];
        const auto value = f({pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])});
        flux += rule.weights[q] * (value[0] * scaled_normal[0] + value[1] * scaled_normal[1]);
      }
      coeffs[static_cast<std::size_t>(e)] = flux;
    }
    return coeffs;
  }
  if (space.family() == Family::discontinuous_lagrange && space.value_shape() == ValueShape::vector) {
    const std::array<double, 2> centroid = {1.0 / 3.0, 1.0 / 3.0};
    for (Index c = 0; c < m.num_cells(); ++c) {
      const auto value = f(m.map_to_physical(c, centroid));
      coeffs[static_cast<std::size_t>(2 * c)] = value[0];
      coeffs[static_cast<std::size_t>(2 * c + 1)] = value[1];
    }
    return coeffs;
  }
  throw InvalidArgument("vector interpolation requested on scalar space " + space.describe());
}

std::array<double, 2> evaluate_field(const FunctionSpace& space, std::span<const double> coeffs,
                                     Index c, std::span<const double> ref) {
  BasisValues basis;
  space.evaluate(c, ref, basis);
  const auto dofs = space.cell_dofs(c);
  std::array<double, 2> result{};
  for (int i = 0; i < basis.num_local; ++i) {
    const Index dof = dofs[static_cast<std::size_t>(i)];
    if (dof < 0) {
      continue;
    }
    for (int comp = 0; comp < basis.components; ++comp) {
      result[static_cast<std::size_t>(comp)] += coeffs[static_cast<std::size_t>(dof)] * basis.value(i, comp);
    }
  }
  return result;
}

double l2_error(const FunctionSpace& space, std::span<const double> coeffs, const ScalarField& f) {
  if (static_cast<Index>(coeffs.size()) != space.dof_count()) {
    throw LayoutMismatch("coefficient vector does not match the space");
  }
  const Mesh& m = space.mesh();
  const QuadratureRule rule =
      m.dimension() == 1 ? gauss_legendre(space.degree() + 4) : triangle_degree4();
  double sum = 0.0;
  for (Index c = 0; c < m.num_cells(); ++c) {
    const double measure = m.cell_measure(c);
    const double jac = m.dimension() == 1 ? measure : 2.0 * measure;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto value = evaluate_field(space, coeffs, c, rule.points[q]);
      const double diff = value[0] - f(m.map_to_physical(c, rule.points[q]));
      sum += rule.weights[q] * jac * diff * diff;
    }
  }
  return std::sqrt(sum);
}

QuadratureRule pairing_quadrature(const FunctionSpace& a, const FunctionSpace& b) {
  if (a.mesh().dimension() == 1) {
    return gauss_legendre(2 * std::max(a.degree(), b.degree()) + 1);
  }
  return triangle_degree4();
}

}  // namespace wavelab
