#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace purecd {

using Vector = std::vector<double>;

/// Thrown for malformed matrix input (bad indices, duplicates, parse errors).
class MatrixError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Immutable CSR matrix with the per-row and per-column summaries the
/// coordinate solvers need: row norms ||A_i||, column counts |I(j)| and
/// the column sampling frequencies pi_j = |I(j)| / n.
///
/// Column indices within a row are sorted. Explicit zeros in the input
/// are dropped, so the stored pattern of row i is exactly J(i).
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Build from coordinate triplets. Rejects out-of-range indices and
  /// duplicate (i, j) pairs. Empty columns are allowed here; solvers that
  /// cannot handle them check has_empty_column().
  static SparseMatrix build(std::span<const Triplet> triplets, std::size_t n_rows,
                            std::size_t n_cols);

  /// Dense row-major input, mostly for tests and small examples.
  static SparseMatrix from_dense(std::size_t n_rows, std::size_t n_cols,
                                 std::span<const double> row_major);
  static SparseMatrix from_dense(std::size_t n_rows, std::size_t n_cols,
                                 std::initializer_list<double> row_major) {
    return from_dense(n_rows, n_cols, std::span<const double>(row_major.begin(), row_major.size()));
  }

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  std::size_t nnz() const { return row_ptr_.empty() ? 0 : row_ptr_.back(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }

  /// Column pattern J(i) of row i.
  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_vals(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::size_t row_nnz(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }

  /// Entry lookup by binary search in row i; zero when not stored.
  double at(std::size_t i, std::size_t j) const;

  const Vector& row_norms() const { return row_norms_; }
  double row_norm(std::size_t i) const { return row_norms_[i]; }
  double max_row_norm() const { return max_row_norm_; }
  double sum_row_norms() const { return sum_row_norms_; }
  double frobenius_norm() const;

  const std::vector<std::size_t>& col_counts() const { return col_count_; }
  const Vector& pi() const { return pi_; }
  double pi(std::size_t j) const { return pi_[j]; }

  bool has_empty_column() const;
  bool has_empty_row() const;

  /// Dense row-major copy.
  Vector to_dense() const;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  Vector values_;
  Vector row_norms_;
  std::vector<std::size_t> col_count_;
  Vector pi_;
  double max_row_norm_ = 0.0;
  double sum_row_norms_ = 0.0;
};

/// <A_i, x> over the stored entries of row i only.
double row_dot(const SparseMatrix& a, std::size_t i, std::span<const double> x);

/// y = A x.
Vector matvec(const SparseMatrix& a, std::span<const double> x);
/// A^T y.
Vector matvec_t(const SparseMatrix& a, std::span<const double> y);

/// Spectral norm ||A||_2 by power iteration on A^T A from a fixed-seed start
/// vector. Stops when the relative change of the estimate drops below tol.
double spectral_norm(const SparseMatrix& a, int max_iter = 5000, double tol = 1e-13);

/// Maintains A^T y under single-coordinate dual changes in O(|J(i)|).
///
/// touch_count() counts value-array entries read or written through this
/// cache (row_dot and apply_dual_delta each add |J(i)|).
class DualCache {
 public:
  DualCache() = default;
  DualCache(const SparseMatrix& a, std::span<const double> y);

  const Vector& aty() const { return aty_; }
  double operator[](std::size_t j) const { return aty_[j]; }

  /// (A^T y)_j += A_ij * delta for j in J(i).
  void apply_dual_delta(const SparseMatrix& a, std::size_t i, double delta);

  /// Counting variant of row_dot.
  double row_dot(const SparseMatrix& a, std::size_t i, std::span<const double> x);

  /// Recompute from scratch (costs nnz(A) touches).
  void reset(const SparseMatrix& a, std::span<const double> y);

  std::uint64_t touch_count() const { return touches_; }

  /// max_j |cache_j - (A^T y)_j| against a fresh product.
  double max_deviation(const SparseMatrix& a, std::span<const double> y) const;

 private:
  Vector aty_;
  std::uint64_t touches_ = 0;
};

/// Matrix Market coordinate (real general) reader; indices are 1-based in
/// the file.
SparseMatrix read_matrix_market(const std::string& path);
/// Plain triplet text: header "n d nnz" then "i j v" lines, 0-based.
SparseMatrix read_triplet_file(const std::string& path);
/// Dispatches on extension: ".mtx" is Matrix Market, anything else triplets.
SparseMatrix read_matrix_file(const std::string& path);
void write_triplet_file(const SparseMatrix& a, const std::string& path);

}  // namespace purecd
