#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace wavelab {

using Index = std::int64_t;
using Point = std::array<double, 2>;

/// Simplicial mesh of an interval (segments) or a rectangle (triangles).
///
/// Vertices of a 1D mesh carry y = 0. In 2D every triangle is stored with
/// positive orientation, and the mesh additionally owns an edge table: edge e
/// joins vertices (a, b) with a < b, and local edge i of a triangle is the one
/// opposite its local vertex i.
class Mesh {
 public:
  Mesh(int dimension, std::vector<Point> vertices, std::vector<Index> cell_vertices,
       std::vector<bool> boundary_vertex);

  int dimension() const noexcept { return dimension_; }
  int vertices_per_cell() const noexcept { return dimension_ + 1; }

  Index num_vertices() const noexcept { return static_cast<Index>(vertices_.size()); }
  Index num_cells() const noexcept;
  Index num_edges() const noexcept { return static_cast<Index>(edges_.size()); }

  const Point& vertex(Index v) const { return vertices_[static_cast<std::size_t>(v)]; }
  bool is_boundary_vertex(Index v) const { return boundary_vertex_[static_cast<std::size_t>(v)]; }
  std::span<const Index> cell(Index c) const;

  /// Segment length or triangle area.
  double cell_measure(Index c) const;
  /// Segment length or longest triangle edge.
  double cell_diameter(Index c) const;
  /// Characteristic size: the largest cell diameter.
  double h() const noexcept { return h_; }
  /// Sum of all cell measures.
  double measure() const;

  /// Affine map of a reference-cell point (unit interval / unit triangle).
  Point map_to_physical(Index c, std::span<const double> ref) const;

  // 2D edge structure.
  const std::pair<Index, Index>& edge(Index e) const { return edges_[static_cast<std::size_t>(e)]; }
  std::span<const Index> cell_edges(Index c) const;
  bool is_boundary_edge(Index e) const { return boundary_edge_[static_cast<std::size_t>(e)]; }
  double edge_length(Index e) const;

 private:
  void build_edges();

  int dimension_;
  std::vector<Point> vertices_;
  std::vector<Index> cell_vertices_;
  std::vector<bool> boundary_vertex_;
  std::vector<std::pair<Index, Index>> edges_;
  std::vector<Index> cell_edges_;
  std::vector<bool> boundary_edge_;
  double h_ = 0.0;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Uniform partition of [a, b] into n segments.
MeshPtr build_interval_mesh(double a, double b, Index n);

/// Structured triangulation of [x0, x1] x [y0, y1]: every grid quad is split
/// along its lower-left to upper-right diagonal.
MeshPtr build_rect_mesh(std::pair<double, double> x_extent, std::pair<double, double> y_extent,
                        Index nx, Index ny);

}  // namespace wavelab
