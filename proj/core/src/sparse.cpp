#include "wavelab/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <string>

#include "wavelab/errors.hpp"

namespace wavelab {

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
                           std::vector<Index> col_indices, Vector values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (rows_ < 0 || cols_ < 0 || static_cast<Index>(row_offsets_.size()) != rows_ + 1 ||
      col_indices_.size() != values_.size() || row_offsets_.front() != 0 ||
      row_offsets_.back() != static_cast<Index>(values_.size())) {
    throw InvalidArgument("inconsistent compressed-row arrays");
  }
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[static_cast<std::size_t>(i)]; k < row_offsets_[static_cast<std::size_t>(i + 1)]; ++k) {
      const Index j = col_indices_[static_cast<std::size_t>(k)];
      if (j < 0 || j >= cols_) {
        throw InvalidArgument("column index out of range");
      }
      if (k > row_offsets_[static_cast<std::size_t>(i)] && col_indices_[static_cast<std::size_t>(k - 1)] >= j) {
        throw InvalidArgument("column indices must be strictly increasing within a row");
      }
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets,
                                         double drop_tolerance) {
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  double scale = 0.0;
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw InvalidArgument("triplet index out of range");
    }
    scale = std::max(scale, std::abs(t.value));
  }
  const double cutoff = drop_tolerance * scale;

  std::vector<Index> offsets(static_cast<std::size_t>(rows + 1), 0);
  std::vector<Index> col_indices;
  Vector values;
  std::size_t k = 0;
  while (k < triplets.size()) {
    const Index r = triplets[k].row;
    const Index c = triplets[k].col;
    double sum = 0.0;
    while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
      sum += triplets[k].value;
      ++k;
    }
    if (std::abs(sum) > cutoff) {
      col_indices.push_back(c);
      values.push_back(sum);
      ++offsets[static_cast<std::size_t>(r + 1)];
    }
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return SparseMatrix(rows, cols, std::move(offsets), std::move(col_indices), std::move(values));
}

SparseMatrix SparseMatrix::identity(Index n) {
  Vector ones(static_cast<std::size_t>(n), 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> diag) {
  const auto n = static_cast<Index>(diag.size());
  std::vector<Index> offsets(diag.size() + 1);
  std::iota(offsets.begin(), offsets.end(), Index{0});
  std::vector<Index> cols(diag.size());
  std::iota(cols.begin(), cols.end(), Index{0});
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), Vector(diag.begin(), diag.end()));
}

double SparseMatrix::coeff(Index i, Index j) const {
  const auto begin = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(i)];
  const auto end = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(i + 1)];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) {
    return 0.0;
  }
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

double SparseMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

Index SparseMatrix::bandwidth() const noexcept {
  Index bw = 0;
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[static_cast<std::size_t>(i)]; k < row_offsets_[static_cast<std::size_t>(i + 1)]; ++k) {
      bw = std::max(bw, std::abs(col_indices_[static_cast<std::size_t>(k)] - i));
    }
  }
  return bw;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<Index>(x.size()) != cols_ || static_cast<Index>(y.size()) != rows_) {
    throw LayoutMismatch("matrix-vector product size mismatch");
  }
  for (Index i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (Index k = row_offsets_[static_cast<std::size_t>(i)]; k < row_offsets_[static_cast<std::size_t>(i + 1)]; ++k) {
      sum += values_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col_indices_[static_cast<std::size_t>(k)])];
    }
    y[static_cast<std::size_t>(i)] = sum;
  }
}

void SparseMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  if (static_cast<Index>(x.size()) != rows_ || static_cast<Index>(y.size()) != cols_) {
    throw LayoutMismatch("transposed matrix-vector product size mismatch");
  }
  std::fill(y.begin(), y.end(), 0.0);
  for (Index i = 0; i < rows_; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    for (Index k = row_offsets_[static_cast<std::size_t>(i)]; k < row_offsets_[static_cast<std::size_t>(i + 1)]; ++k) {
      y[static_cast<std::size_t>(col_indices_[static_cast<std::size_t>(k)])] += values_[static_cast<std::size_t>(k)] * xi;
    }
  }
}

Vector SparseMatrix::operator*(std::span<const double> x) const {
  Vector y(static_cast<std::size_t>(rows_));
  multiply(x, y);
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Index> offsets(static_cast<std::size_t>(cols_ + 1), 0);
  for (Index j : col_indices_) {
    ++offsets[static_cast<std::size_t>(j + 1)];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
  std::vector<Index> cols(values_.size());
  Vector vals(values_.size());
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[static_cast<std::size_t>(i)]; k < row_offsets_[static_cast<std::size_t>(i + 1)]; ++k) {
      const auto j = static_cast<std::size_t>(col_indices_[static_cast<std::size_t>(k)]);
      const auto slot = static_cast<std::size_t>(cursor[j]++);
      cols[slot] = i;
      vals[slot] = values_[static_cast<std::size_t>(k)];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::scaled(double alpha) const {
  SparseMatrix result = *this;
  for (double& v : result.values_) {
    v *= alpha;
  }
  return result;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) {
    return false;
  }
  return max_abs_difference(*this, transpose()) <= tol * std::max(max_abs(), 1e-300);
}

SparseMatrix SparseMatrix::symmetrized() const { return add(*this, 0.5, transpose(), 0.5); }

std::vector<Vector> SparseMatrix::to_dense() const {
  std::vector<Vector> dense(static_cast<std::size_t>(rows_), Vector(static_cast<std::size_t>(cols_), 0.0));
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[static_cast<std::size_t>(i)]; k < row_offsets_[static_cast<std::size_t>(i + 1)]; ++k) {
      dense[static_cast<std::size_t>(i)][static_cast<std::size_t>(col_indices_[static_cast<std::size_t>(k)])] =
          values_[static_cast<std::size_t>(k)];
    }
  }
  return dense;
}

void SparseMatrix::write_coordinate(std::ostream& os) const {
  os << "# rows " << rows_ << " cols " << cols_ << " nnz " << nnz() << '\n';
  os << std::setprecision(17);
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[static_cast<std::size_t>(i)]; k < row_offsets_[static_cast<std::size_t>(i + 1)]; ++k) {
      os << i << ' ' << col_indices_[static_cast<std::size_t>(k)] << ' ' << values_[static_cast<std::size_t>(k)] << '\n';
    }
  }
}

SparseMatrix add(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw LayoutMismatch("matrix sum shape mismatch");
  }
  std::vector<Index> offsets(static_cast<std::size_t>(a.rows() + 1), 0);
  std::vector<Index> cols;
  Vector vals;
  cols.reserve(static_cast<std::size_t>(a.nnz() + b.nnz()));
  vals.reserve(cols.capacity());
  const auto ao = a.row_offsets();
  const auto bo = b.row_offsets();
  const auto ac = a.col_indices();
  const auto bc = b.col_indices();
  const auto av = a.values();
  const auto bv = b.values();
  for (Index i = 0; i < a.rows(); ++i) {
    auto ka = ao[static_cast<std::size_t>(i)];
    auto kb = bo[static_cast<std::size_t>(i)];
    const auto ea = ao[static_cast<std::size_t>(i + 1)];
    const auto eb = bo[static_cast<std::size_t>(i + 1)];
    while (ka < ea || kb < eb) {
      const Index ja = ka < ea ? ac[static_cast<std::size_t>(ka)] : a.cols();
      const Index jb = kb < eb ? bc[static_cast<std::size_t>(kb)] : b.cols();
      double value = 0.0;
      Index j = 0;
      if (ja == jb) {
        j = ja;
        value = alpha * av[static_cast<std::size_t>(ka++)] + beta * bv[static_cast<std::size_t>(kb++)];
      } else if (ja < jb) {
        j = ja;
        value = alpha * av[static_cast<std::size_t>(ka++)];
      } else {
        j = jb;
        value = beta * bv[static_cast<std::size_t>(kb++)];
      }
      cols.push_back(j);
      vals.push_back(value);
    }
    offsets[static_cast<std::size_t>(i + 1)] = static_cast<Index>(cols.size());
  }
  return SparseMatrix(a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw LayoutMismatch("matrix product shape mismatch");
  }
  const auto ao = a.row_offsets();
  const auto bo = b.row_offsets();
  const auto ac = a.col_indices();
  const auto bc = b.col_indices();
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<Index> offsets(static_cast<std::size_t>(a.rows() + 1), 0);
  std::vector<Index> cols;
  Vector vals;
  Vector accumulator(static_cast<std::size_t>(b.cols()), 0.0);
  std::vector<char> touched(static_cast<std::size_t>(b.cols()), 0);
  std::vector<Index> pattern;
  for (Index i = 0; i < a.rows(); ++i) {
    pattern.clear();
    for (Index ka = ao[static_cast<std::size_t>(i)]; ka < ao[static_cast<std::size_t>(i + 1)]; ++ka) {
      const Index k = ac[static_cast<std::size_t>(ka)];
      const double aik = av[static_cast<std::size_t>(ka)];
      for (Index kb = bo[static_cast<std::size_t>(k)]; kb < bo[static_cast<std::size_t>(k + 1)]; ++kb) {
        const auto j = static_cast<std::size_t>(bc[static_cast<std::size_t>(kb)]);
        if (!touched[j]) {
          touched[j] = 1;
          pattern.push_back(static_cast<Index>(j));
        }
        accumulator[j] += aik * bv[static_cast<std::size_t>(kb)];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (Index j : pattern) {
      cols.push_back(j);
      vals.push_back(accumulator[static_cast<std::size_t>(j)]);
      accumulator[static_cast<std::size_t>(j)] = 0.0;
      touched[static_cast<std::size_t>(j)] = 0;
    }
    offsets[static_cast<std::size_t>(i + 1)] = static_cast<Index>(cols.size());
  }
  return SparseMatrix(a.rows(), b.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

double max_abs_difference(const SparseMatrix& a, const SparseMatrix& b) {
  const SparseMatrix diff = add(a, 1.0, b, -1.0);
  return diff.max_abs();
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw LayoutMismatch("dot product size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i] * y[i];
  }
  return sum;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw LayoutMismatch("axpy size mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] += alpha * x[i];
  }
}

Vector linear_combination(double alpha, std::span<const double> x, double beta, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw LayoutMismatch("linear combination size mismatch");
  }
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    z[i] = alpha * x[i] + beta * y[i];
  }
  return z;
}

Vector scaled(double alpha, std::span<const double> x) {
  Vector z(x.begin(), x.end());
  for (double& v : z) {
    v *= alpha;
  }
  return z;
}

double quadratic_form(const SparseMatrix& a, std::span<const double> x) { return bilinear_form(a, x, x); }

double bilinear_form(const SparseMatrix& a, std::span<const double> x, std::span<const double> y) {
  return dot(x, a * y);
}

}  // namespace wavelab
