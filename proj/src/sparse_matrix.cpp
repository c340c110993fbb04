#include "purecd/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace purecd {

SparseMatrix SparseMatrix::build(std::span<const Triplet> triplets, std::size_t n_rows,
                                 std::size_t n_cols) {
  std::vector<Triplet> t;
  t.reserve(triplets.size());
  for (const auto& e : triplets) {
    if (e.row >= n_rows || e.col >= n_cols) {
      throw MatrixError("entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                        ") out of range for " + std::to_string(n_rows) + "x" +
                        std::to_string(n_cols) + " matrix");
    }
    if (!std::isfinite(e.value)) {
      throw MatrixError("non-finite value at (" + std::to_string(e.row) + ", " +
                        std::to_string(e.col) + ")");
    }
    t.push_back(e);
  }
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (t[k].row == t[k - 1].row && t[k].col == t[k - 1].col) {
      throw MatrixError("duplicate entry (" + std::to_string(t[k].row) + ", " +
                        std::to_string(t[k].col) + ")");
    }
  }

  SparseMatrix m;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  m.row_ptr_.assign(n_rows + 1, 0);
  m.col_count_.assign(n_cols, 0);
  for (const auto& e : t) {
    if (e.value == 0.0) continue;
    m.row_ptr_[e.row + 1]++;
    m.col_idx_.push_back(e.col);
    m.values_.push_back(e.value);
    m.col_count_[e.col]++;
  }
  std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());

  m.row_norms_.assign(n_rows, 0.0);
  for (std::size_t i = 0; i < n_rows; ++i) {
    double s = 0.0;
    for (double v : m.row_vals(i)) s += v * v;
    m.row_norms_[i] = std::sqrt(s);
    m.max_row_norm_ = std::max(m.max_row_norm_, m.row_norms_[i]);
    m.sum_row_norms_ += m.row_norms_[i];
  }
  m.pi_.assign(n_cols, 0.0);
  if (n_rows > 0) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      m.pi_[j] = static_cast<double>(m.col_count_[j]) / static_cast<double>(n_rows);
    }
  }
  return m;
}

SparseMatrix SparseMatrix::from_dense(std::size_t n_rows, std::size_t n_cols,
                                      std::span<const double> row_major) {
  if (row_major.size() != n_rows * n_cols) {
    throw MatrixError("dense input has " + std::to_string(row_major.size()) +
                      " values, expected " + std::to_string(n_rows * n_cols));
  }
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      double v = row_major[i * n_cols + j];
      if (v != 0.0) t.push_back({i, j, v});
    }
  }
  return build(t, n_rows, n_cols);
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  auto cols = row_cols(i);
  auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0.0;
  return values_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
}

double SparseMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

bool SparseMatrix::has_empty_column() const {
  return std::any_of(col_count_.begin(), col_count_.end(),
                     [](std::size_t c) { return c == 0; });
}

bool SparseMatrix::has_empty_row() const {
  for (std::size_t i = 0; i < n_rows_; ++i) {
    if (row_nnz(i) == 0) return true;
  }
  return false;
}

Vector SparseMatrix::to_dense() const {
  Vector out(n_rows_ * n_cols_, 0.0);
  for (std::size_t i = 0; i < n_rows_; ++i) {
    auto cols = row_cols(i);
    auto vals = row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out[i * n_cols_ + cols[k]] = vals[k];
  }
  return out;
}

double row_dot(const SparseMatrix& a, std::size_t i, std::span<const double> x) {
  auto cols = a.row_cols(i);
  auto vals = a.row_vals(i);
  double s = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) s += vals[k] * x[cols[k]];
  return s;
}

Vector matvec(const SparseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) {
    throw MatrixError("matvec: vector length " + std::to_string(x.size()) + " != cols " +
                      std::to_string(a.cols()));
  }
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = row_dot(a, i, x);
  return out;
}

Vector matvec_t(const SparseMatrix& a, std::span<const double> y) {
  if (y.size() != a.rows()) {
    throw MatrixError("matvec_t: vector length " + std::to_string(y.size()) + " != rows " +
                      std::to_string(a.rows()));
  }
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (y[i] == 0.0) continue;
    auto cols = a.row_cols(i);
    auto vals = a.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += vals[k] * y[i];
  }
  return out;
}

double spectral_norm(const SparseMatrix& a, int max_iter, double tol) {
  if (a.nnz() == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Vector v(a.cols());
  for (auto& e : v) e = u(rng);
  auto normalize = [](Vector& w) {
    double s = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    if (s > 0) for (auto& e : w) e /= s;
    return s;
  };
  normalize(v);
  double est = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = matvec_t(a, matvec(a, v));
    double lam = normalize(w);
    v = std::move(w);
    double next = std::sqrt(lam);
    if (it > 0 && std::abs(next - est) <= tol * next) {
      est = next;
      break;
    }
    est = next;
  }
  return est;
}

DualCache::DualCache(const SparseMatrix& a, std::span<const double> y) { reset(a, y); }

void DualCache::reset(const SparseMatrix& a, std::span<const double> y) {
  aty_ = matvec_t(a, y);
  touches_ += a.nnz();
}

void DualCache::apply_dual_delta(const SparseMatrix& a, std::size_t i, double delta) {
  auto cols = a.row_cols(i);
  auto vals = a.row_vals(i);
  touches_ += cols.size();
  if (delta == 0.0) return;
  for (std::size_t k = 0; k < cols.size(); ++k) aty_[cols[k]] += vals[k] * delta;
}

double DualCache::row_dot(const SparseMatrix& a, std::size_t i, std::span<const double> x) {
  touches_ += a.row_nnz(i);
  return purecd::row_dot(a, i, x);
}

double DualCache::max_deviation(const SparseMatrix& a, std::span<const double> y) const {
  Vector fresh = matvec_t(a, y);
  double m = 0.0;
  for (std::size_t j = 0; j < fresh.size(); ++j) m = std::max(m, std::abs(fresh[j] - aty_[j]));
  return m;
}

}  // namespace purecd
