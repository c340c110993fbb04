#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "purecd/sparse_matrix.hpp"

using namespace purecd;

namespace {

SparseMatrix small() {
  std::vector<Triplet> t{{0, 0, 3}, {0, 1, 4}, {1, 1, 5}};
  return SparseMatrix::build(t, 2, 2);
}

SparseMatrix random_sparse(std::mt19937_64& rng, std::size_t n, std::size_t d, double density) {
  std::uniform_real_distribution<double> u(0, 1), val(-2, 2);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (u(rng) < density) t.push_back({i, j, val(rng)});
  return SparseMatrix::build(t, n, d);
}

}  // namespace

TEST_CASE("build computes row norms and column frequencies") {
  auto a = small();
  CHECK(a.nnz() == 3);
  CHECK(a.row_norm(0) == doctest::Approx(5.0));
  CHECK(a.row_norm(1) == doctest::Approx(5.0));
  CHECK(a.pi(0) == doctest::Approx(0.5));
  CHECK(a.pi(1) == doctest::Approx(1.0));
  CHECK(a.row_ptr().back() == a.nnz());
  CHECK(a.at(1, 0) == 0.0);
  CHECK(a.at(0, 1) == 4.0);
}

TEST_CASE("build edge cases") {
  auto empty = SparseMatrix::build({}, 2, 2);
  CHECK(empty.nnz() == 0);
  CHECK(empty.pi(0) == 0.0);
  CHECK(empty.pi(1) == 0.0);
  CHECK(empty.has_empty_column());

  std::vector<Triplet> one{{0, 0, 1}};
  auto id = SparseMatrix::build(one, 1, 1);
  CHECK(id.row_norm(0) == 1.0);
  CHECK(id.pi(0) == 1.0);
  CHECK_FALSE(id.has_empty_column());
}

TEST_CASE("build rejects bad input") {
  std::vector<Triplet> oob{{2, 0, 1}};
  CHECK_THROWS_AS(SparseMatrix::build(oob, 2, 2), MatrixError);
  std::vector<Triplet> dup{{0, 1, 1}, {0, 1, 2}};
  CHECK_THROWS_AS(SparseMatrix::build(dup, 2, 2), MatrixError);
}

TEST_CASE("row_dot") {
  auto a = small();
  std::vector<double> x{1, 1};
  CHECK(row_dot(a, 0, x) == 7.0);
  std::vector<double> e0{1, 0};
  CHECK(row_dot(a, 1, e0) == 0.0);
  std::vector<double> x2{0, 2};
  CHECK(row_dot(a, 1, x2) == 10.0);
}

TEST_CASE("apply_dual_delta") {
  auto a = small();
  std::vector<double> y{1, 1};
  DualCache c(a, y);
  REQUIRE(c[0] == 3.0);
  REQUIRE(c[1] == 9.0);

  DualCache c1 = c;
  c1.apply_dual_delta(a, 1, 1.0);
  CHECK(c1[0] == 3.0);
  CHECK(c1[1] == 14.0);

  DualCache c2 = c;
  c2.apply_dual_delta(a, 1, 0.0);
  CHECK(c2.aty() == c.aty());

  DualCache c3 = c;
  c3.apply_dual_delta(a, 0, -1.0);
  CHECK(c3[0] == 0.0);
  CHECK(c3[1] == 5.0);
}

TEST_CASE("touch_count counts row entries") {
  auto a = small();
  std::vector<double> y{0, 0};
  DualCache c(a, y);
  auto base = c.touch_count();
  std::vector<double> x{1, 1};
  c.row_dot(a, 0, x);
  CHECK(c.touch_count() == base + 2);
  c.apply_dual_delta(a, 1, 1.0);
  CHECK(c.touch_count() == base + 3);
}

TEST_CASE("matvec and matvec_t") {
  auto a = small();
  std::vector<double> x{1, 1};
  CHECK(matvec(a, x) == std::vector<double>{7, 5});
  std::vector<double> z{0, 0};
  CHECK(matvec(a, z) == std::vector<double>{0, 0});
  CHECK(matvec_t(a, x) == std::vector<double>{3, 9});
  std::vector<double> bad{1};
  CHECK_THROWS_AS(matvec(a, bad), MatrixError);
  CHECK_THROWS_AS(matvec_t(a, bad), MatrixError);
}

TEST_CASE("spectral norm of a 2x2 matches the characteristic polynomial") {
  auto a = small();
  // A^T A = [[9,12],[12,41]]; largest eigenvalue (50 + sqrt(32^2 + 4*144)) / 2.
  const double tr = 50, det = 9 * 41 - 144;
  const double lam = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
  CHECK(spectral_norm(a) == doctest::Approx(std::sqrt(lam)).epsilon(1e-12));
}

TEST_CASE("random matrices agree with a dense reference") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 50);
  std::uniform_real_distribution<double> dens(0.01, 0.3), val(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = dim(rng), d = dim(rng);
    auto a = random_sparse(rng, n, d, dens(rng));
    auto dense = a.to_dense();
    std::vector<double> x(d), y(n);
    for (auto& v : x) v = val(rng);
    for (auto& v : y) v = val(rng);

    for (std::size_t i = 0; i < n; ++i) {
      double ref = 0, scale = 0, sq = 0;
      for (std::size_t j = 0; j < d; ++j) {
        ref += dense[i * d + j] * x[j];
        scale += std::abs(dense[i * d + j] * x[j]);
        sq += dense[i * d + j] * dense[i * d + j];
      }
      REQUIRE(std::abs(row_dot(a, i, x) - ref) <= 1e-12 * std::max(1.0, scale));
      REQUIRE(std::abs(a.row_norm(i) * a.row_norm(i) - sq) <= 1e-12 * std::max(1.0, sq));
    }
    auto aty = matvec_t(a, y);
    for (std::size_t j = 0; j < d; ++j) {
      double ref = 0, scale = 0;
      for (std::size_t i = 0; i < n; ++i) {
        ref += dense[i * d + j] * y[i];
        scale += std::abs(dense[i * d + j] * y[i]);
      }
      REQUIRE(std::abs(aty[j] - ref) <= 1e-12 * std::max(1.0, scale));
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (a.col_counts()[j] > 0) {
        REQUIRE(a.pi(j) >= 1.0 / static_cast<double>(n) - 1e-15);
        REQUIRE(a.pi(j) <= 1.0);
      }
    }
  }
}

TEST_CASE("dual cache stays consistent over many updates") {
  std::mt19937_64 rng(5);
  auto a = random_sparse(rng, 40, 30, 0.2);
  std::vector<double> y(40, 0.0);
  DualCache c(a, y);
  std::uniform_int_distribution<std::size_t> row(0, 39);
  std::normal_distribution<double> g;
  for (int k = 0; k < 10000; ++k) {
    auto i = row(rng);
    double delta = g(rng);
    y[i] += delta;
    auto before = c.aty();
    c.apply_dual_delta(a, i, delta);
    // Only J(i) may change.
    std::set<std::size_t> cols(a.row_cols(i).begin(), a.row_cols(i).end());
    for (std::size_t j = 0; j < 30; ++j) {
      if (!cols.count(j)) REQUIRE(c[j] == before[j]);
    }
  }
  CHECK(c.max_deviation(a, y) <= 1e-9);
}

TEST_CASE("matrix file readers") {
  const std::string mtx = "test_tmp_matrix.mtx";
  {
    std::ofstream out(mtx);
    out << "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 3\n1 1 3\n1 2 4\n2 2 5\n";
  }
  auto a = read_matrix_file(mtx);
  CHECK(a.nnz() == 3);
  CHECK(a.at(0, 1) == 4.0);
  std::remove(mtx.c_str());

  const std::string trip = "test_tmp_matrix.txt";
  write_triplet_file(a, trip);
  auto b = read_matrix_file(trip);
  CHECK(b.to_dense() == a.to_dense());
  std::remove(trip.c_str());

  {
    std::ofstream out(trip);
    out << "2 2 1\n5 0 1.0\n";
  }
  CHECK_THROWS_AS(read_matrix_file(trip), MatrixError);
  std::remove(trip.c_str());
  CHECK_THROWS_AS(read_matrix_file("does_not_exist.mtx"), MatrixError);
}
