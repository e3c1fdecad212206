#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "wavelab/sparse.hpp"

namespace wavelab {

/// automatic: block-diagonal inverse when the pattern allows it, a banded
/// direct factorization for narrow bands (every 1D operator here), and
/// CG / GMRES otherwise.
enum class SolverMethod { automatic, cg, gmres, banded };

std::string_view to_string(SolverMethod method) noexcept;
std::optional<SolverMethod> parse_solver_method(std::string_view name) noexcept;

struct SolverConfig {
  double tolerance = 1e-12;
  int max_iterations = 10000;
  SolverMethod method = SolverMethod::automatic;
  int restart = 50;
  /// Widest band routed to the direct solver under SolverMethod::automatic.
  Index banded_threshold = 4;

  /// Throws InvalidArgument unless tolerance lies in (0, 1), max_iterations
  /// and restart are at least 1.
  void validate() const;
};

struct SolverStats {
  long long solves = 0;
  long long iterations = 0;
  double max_relative_residual = 0.0;

  void record(int iterations_used, double relative_residual);
  void merge(const SolverStats& other);
};

/// Dense Cholesky of a symmetric positive definite band matrix.
class BandedCholesky {
 public:
  explicit BandedCholesky(const SparseMatrix& a);

  Vector solve(std::span<const double> b) const;
  Index bandwidth() const noexcept { return bandwidth_; }

 private:
  double& at(Index i, Index j) { return band_[static_cast<std::size_t>(i * (bandwidth_ + 1) + (i - j))]; }
  double at(Index i, Index j) const { return band_[static_cast<std::size_t>(i * (bandwidth_ + 1) + (i - j))]; }

  Index n_ = 0;
  Index bandwidth_ = 0;
  Vector band_;
};

/// Contiguous diagonal blocks [begin, end) covering the matrix, or nullopt if
/// the pattern couples across blocks wider than max_block.
std::optional<std::vector<std::pair<Index, Index>>> diagonal_blocks(const SparseMatrix& a, Index max_block = 16);

/// Exact inverse of a block-diagonal matrix (dense inversion per block).
SparseMatrix block_diagonal_inverse(const SparseMatrix& a);

/// Reusable solver for one matrix: factorizes once where the method allows.
class LinearSolver {
 public:
  enum class Kind { block_diagonal, banded, cg, gmres };

  LinearSolver() = default;
  /// spd selects CG over GMRES for the iterative fallback.
  LinearSolver(SparseMatrix a, SolverConfig cfg, bool spd = true);

  Vector solve(std::span<const double> b, SolverStats* stats = nullptr) const;

  const SparseMatrix& matrix() const noexcept { return matrix_; }
  Kind kind() const noexcept { return kind_; }

 private:
  SparseMatrix matrix_;
  SolverConfig cfg_;
  Kind kind_ = Kind::cg;
  SparseMatrix inverse_;
  std::optional<BandedCholesky> cholesky_;
};

/// Solves A x = b for symmetric positive definite A with
/// ||A x - b|| <= tol ||b||. Asymmetric input -> InvalidArgument;
/// non-convergence -> SolverFailure.
Vector solve_spd(const SparseMatrix& a, std::span<const double> b, const SolverConfig& cfg = {},
                 SolverStats* stats = nullptr);

/// Restarted GMRES for square nonsingular A.
Vector solve_general(const SparseMatrix& a, std::span<const double> b, const SolverConfig& cfg = {},
                     SolverStats* stats = nullptr);

/// Largest eigenvalue of K x = lambda M x (K symmetric PSD, M SPD), to
/// relative tolerance tol on successive Rayleigh quotients.
double power_iteration_genevp(const SparseMatrix& k, const SparseMatrix& m, double tol = 1e-12,
                              const SolverConfig& cfg = {}, int max_iterations = 200000);

/// Smallest eigenvalue of K x = lambda M x for SPD K and M.
double inverse_power_iteration_genevp(const SparseMatrix& k, const SparseMatrix& m, double tol = 1e-12,
                                      const SolverConfig& cfg = {}, int max_iterations = 200000);

}  // namespace wavelab
