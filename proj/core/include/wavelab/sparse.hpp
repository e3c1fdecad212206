#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "wavelab/mesh.hpp"

namespace wavelab {

using Vector = std::vector<double>;

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed-row real matrix. Column indices are strictly increasing within
/// each row; the object is immutable once built.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets, std::vector<Index> col_indices,
               Vector values);

  /// Sums duplicates in insertion order (stable), then drops entries whose
  /// magnitude is at most drop_tolerance times the largest entry.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets,
                                    double drop_tolerance = 1e-14);
  static SparseMatrix identity(Index n);
  static SparseMatrix diagonal(std::span<const double> diag);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return static_cast<Index>(values_.size()); }
  bool empty() const noexcept { return rows_ == 0 && cols_ == 0; }

  std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  double coeff(Index i, Index j) const;
  double max_abs() const noexcept;
  /// Largest |i - j| over stored entries.
  Index bandwidth() const noexcept;

  void multiply(std::span<const double> x, std::span<double> y) const;
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;

  SparseMatrix transpose() const;
  SparseMatrix scaled(double alpha) const;
  /// Entrywise check |A_ij - A_ji| <= tol * max|A|.
  bool is_symmetric(double tol = 1e-13) const;
  /// (A + A^T) / 2.
  SparseMatrix symmetrized() const;

  std::vector<Vector> to_dense() const;

  /// Coordinate text: header comment, then "row col value" per line.
  void write_coordinate(std::ostream& os) const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  Vector values_;
};

/// alpha * A + beta * B.
SparseMatrix add(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta);
/// A * B.
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

/// Entrywise max |A_ij - B_ij| over the union pattern; shapes must agree.
double max_abs_difference(const SparseMatrix& a, const SparseMatrix& b);

// Dense vector helpers.
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
double norm_inf(std::span<const double> x);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vector linear_combination(double alpha, std::span<const double> x, double beta, std::span<const double> y);
Vector scaled(double alpha, std::span<const double> x);
/// x^T A x.
double quadratic_form(const SparseMatrix& a, std::span<const double> x);
/// x^T A y.
double bilinear_form(const SparseMatrix& a, std::span<const double> x, std::span<const double> y);

}  // namespace wavelab
