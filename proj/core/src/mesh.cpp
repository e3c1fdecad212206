#include "wavelab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "wavelab/errors.hpp"

namespace wavelab {

namespace {

double distance(const Point& a, const Point& b) { return std::hypot(b[0] - a[0], b[1] - a[1]); }

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

}  // namespace

Mesh::Mesh(int dimension, std::vector<Point> vertices, std::vector<Index> cell_vertices,
           std::vector<bool> boundary_vertex)
    : dimension_(dimension),
      vertices_(std::move(vertices)),
      cell_vertices_(std::move(cell_vertices)),
      boundary_vertex_(std::move(boundary_vertex)) {
  if (dimension_ != 1 && dimension_ != 2) {
    throw InvalidArgument("mesh dimension must be 1 or 2");
  }
  const auto per_cell = static_cast<std::size_t>(vertices_per_cell());
  if (cell_vertices_.empty() || cell_vertices_.size() % per_cell != 0) {
    throw InvalidArgument("cell connectivity length is not a multiple of the cell size");
  }
  if (boundary_vertex_.size() != vertices_.size()) {
    throw InvalidArgument("boundary flags must match the vertex count");
  }
  for (Index v : cell_vertices_) {
    if (v < 0 || v >= num_vertices()) {
      throw InvalidArgument("cell references vertex " + std::to_string(v) + " out of range");
    }
  }
  for (Index c = 0; c < num_cells(); ++c) {
    const auto verts = cell(c);
    if (dimension_ == 1) {
      if (!(vertex(verts[1])[0] > vertex(verts[0])[0])) {
        throw InvalidArgument("1D cells must be sorted left to right");
      }
      if (c > 0 && cell(c - 1)[1] != verts[0]) {
        throw InvalidArgument("1D cells must be contiguous");
      }
    } else if (!(signed_area(vertex(verts[0]), vertex(verts[1]), vertex(verts[2])) > 0.0)) {
      throw InvalidArgument("triangle " + std::to_string(c) + " is not positively oriented");
    }
    h_ = std::max(h_, cell_diameter(c));
  }
  if (dimension_ == 2) {
    build_edges();
  }
}

Index Mesh::num_cells() const noexcept {
  return static_cast<Index>(cell_vertices_.size()) / vertices_per_cell();
}

std::span<const Index> Mesh::cell(Index c) const {
  const auto per_cell = static_cast<std::size_t>(vertices_per_cell());
  return {cell_vertices_.data() + static_cast<std::size_t>(c) * per_cell, per_cell};
}

double Mesh::cell_measure(Index c) const {
  const auto verts = cell(c);
  if (dimension_ == 1) {
    return vertex(verts[1])[0] - vertex(verts[0])[0];
  }
  return signed_area(vertex(verts[0]), vertex(verts[1]), vertex(verts[2]));
}

double Mesh::cell_diameter(Index c) const {
  const auto verts = cell(c);
  if (dimension_ == 1) {
    return cell_measure(c);
  }
  return std::max({distance(vertex(verts[0]), vertex(verts[1])),
                   distance(vertex(verts[1]), vertex(verts[2])),
                   distance(vertex(verts[2]), vertex(verts[0]))});
}

double Mesh::measure() const {
  double total = 0.0;
  for (Index c = 0; c < num_cells(); ++c) {
    total += cell_measure(c);
  }
  return total;
}

Point Mesh::map_to_physical(Index c, std::span<const double> ref) const {
  const auto verts = cell(c);
  const Point& p0 = vertex(verts[0]);
  const Point& p1 = vertex(verts[1]);
  if (dimension_ == 1) {
    return {p0[0] + ref[0] * (p1[0] - p0[0]), 0.0};
  }
  const Point& p2 = vertex(verts[2]);
  return {p0[0] + ref[0] * (p1[0] - p0[0]) + ref[1] * (p2[0] - p0[0]),
          p0[1] + ref[0] * (p1[1] - p0[1]) + ref[1] * (p2[1] - p0[1])};
}

std::span<const Index> Mesh::cell_edges(Index c) const {
  return {cell_edges_.data() + static_cast<std::size_t>(c) * 3, 3};
}

double Mesh::edge_length(Index e) const {
  const auto& [a, b] = edge(e);
  return distance(vertex(a), vertex(b));
}

void Mesh::build_edges() {
  std::map<std::pair<Index, Index>, Index> lookup;
  std::vector<int> incidence;
  cell_edges_.reserve(cell_vertices_.size());
  for (Index c = 0; c < num_cells(); ++c) {
    const auto verts = cell(c);
    for (int i = 0; i < 3; ++i) {
      const Index a = verts[(i + 1) % 3];
      const Index b = verts[(i + 2) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = lookup.try_emplace({key.first, key.second}, num_edges());
      if (inserted) {
        edges_.emplace_back(key.first, key.second);
        incidence.push_back(0);
      }
      ++incidence[static_cast<std::size_t>(it->second)];
      cell_edges_.push_back(it->second);
    }
  }
  boundary_edge_.resize(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    boundary_edge_[e] = incidence[e] == 1;
  }
}

MeshPtr build_interval_mesh(double a, double b, Index n) {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidArgument("interval bounds must be finite");
  }
  if (!(a < b)) {
    throw InvalidArgument("interval requires a < b");
  }
  if (n < 1) {
    throw InvalidArgument("interval mesh needs at least one cell");
  }
  std::vector<Point> vertices(static_cast<std::size_t>(n + 1));
  std::vector<bool> boundary(vertices.size(), false);
  const double h = (b - a) / static_cast<double>(n);
  for (Index i = 0; i <= n; ++i) {
    vertices[static_cast<std::size_t>(i)] = {i == n ? b : a + h * static_cast<double>(i), 0.0};
  }
  boundary.front() = true;
  boundary.back() = true;
  std::vector<Index> cells;
  cells.reserve(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i < n; ++i) {
    cells.push_back(i);
    cells.push_back(i + 1);
  }
  return std::make_shared<const Mesh>(1, std::move(vertices), std::move(cells), std::move(boundary));
}

MeshPtr build_rect_mesh(std::pair<double, double> x_extent, std::pair<double, double> y_extent,
                        Index nx, Index ny) {
  const auto [x0, x1] = x_extent;
  const auto [y0, y1] = y_extent;
  if (!std::isfinite(x0) || !std::isfinite(x1) || !std::isfinite(y0) || !std::isfinite(y1)) {
    throw InvalidArgument("rectangle extents must be finite");
  }
  if (!(x0 < x1) || !(y0 < y1)) {
    throw InvalidArgument("rectangle extents are degenerate");
  }
  if (nx < 1 || ny < 1) {
    throw InvalidArgument("rectangle mesh needs at least one cell per direction");
  }
  const auto id = [nx](Index i, Index j) { return j * (nx + 1) + i; };
  std::vector<Point> vertices;
  std::vector<bool> boundary;
  vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (Index j = 0; j <= ny; ++j) {
    const double y = j == ny ? y1 : y0 + (y1 - y0) * static_cast<double>(j) / static_cast<double>(ny);
    for (Index i = 0; i <= nx; ++i) {
      const double x = i == nx ? x1 : x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(nx);
      vertices.push_back({x, y});
      boundary.push_back(i == 0 || j == 0 || i == nx || j == ny);
    }
  }
  std::vector<Index> cells;
  cells.reserve(static_cast<std::size_t>(6 * nx * ny));
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      const Index v00 = id(i, j);
      const Index v10 = id(i + 1, j);
      const Index v11 = id(i + 1, j + 1);
      const Index v01 = id(i, j + 1);
      cells.insert(cells.end(), {v00, v10, v11});
      cells.insert(cells.end(), {v00, v11, v01});
    }
  }
  return std::make_shared<const Mesh>(2, std::move(vertices), std::move(cells), std::move(boundary));
}

}  // namespace wavelab
