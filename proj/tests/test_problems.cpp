#include <random>

#include "doctest.h"
#include "purecd/metrics.hpp"
#include "purecd/oracle.hpp"
#include "purecd/problems.hpp"

using namespace purecd;
using doctest::Approx;

namespace {

double lag(const SaddleProblem& p, const Vector& x, const Vector& y) {
  const SignedValue v = lagrangian(p, x, y);
  REQUIRE(v.infinite == 0);
  return v.value;
}

// L(x, y*) >= L(x*, y*) >= L(x*, y) for random x in dom g, y in dom h*.
void check_saddle(const SaddleProblem& p, std::uint64_t seed) {
  REQUIRE(p.reference);
  const Reference& r = *p.reference;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const double mid = lag(p, r.x_star, r.y_star);
  for (int t = 0; t < 100; ++t) {
    Vector x = r.x_star, y = r.y_star;
    for (std::size_t j = 0; j < p.d(); ++j) {
      x[j] = std::clamp(x[j] + gauss(rng), p.g[j].dom_lo(), p.g[j].dom_hi());
    }
    for (std::size_t i = 0; i < p.n(); ++i) {
      y[i] = std::clamp(y[i] + gauss(rng), p.h_conj[i].dom_lo(), p.h_conj[i].dom_hi());
    }
    CHECK(lag(p, x, r.y_star) >= mid - 1e-8);
    CHECK(lag(p, r.x_star, y) <= mid + 1e-8);
  }
}

}  // namespace

TEST_CASE("constrained QP by hand") {
  auto p = make_constrained_qp(SparseMatrix::from_dense(1, 2, {1, 1}), {1, 1}, {0, 0}, {2});
  attach_reference(p);
  CHECK(p.reference->method == "kkt");
  CHECK(p.reference->x_star[0] == Approx(1.0));
  CHECK(p.reference->x_star[1] == Approx(1.0));
  CHECK(p.reference->y_star[0] == Approx(-1.0));
  CHECK(p.mu_g == 1.0);
  CHECK(p.mu_h == 0.0);

  auto q = make_constrained_qp(SparseMatrix::from_dense(1, 2, {1, 1}), {1, 1}, {0, 0}, {0});
  attach_reference(q);
  CHECK(std::abs(q.reference->x_star[0]) <= 1e-15);
  CHECK(std::abs(q.reference->y_star[0]) <= 1e-15);
}

TEST_CASE("generated constrained QP") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto p = gen_constrained_qp(8, 16, seed, 0.5);
    attach_reference(p);
    const Vector ax = matvec(p.A, p.reference->x_star);
    double res = 0.0;
    for (std::size_t i = 0; i < p.n(); ++i) {
      res += std::pow(ax[i] - (*p.constraint_set)[i].lo, 2);
    }
    CHECK(std::sqrt(res) <= 1e-10);
    CHECK(p.mu_g >= 1.0);
    check_saddle(p, seed);
    CHECK(p.A.has_empty_column() == false);
    CHECK(p.A.has_empty_row() == false);
  }
}

TEST_CASE("hinge ERM") {
  auto p = make_erm_hinge(SparseMatrix::from_dense(2, 2, {1, 0, 0, 1}), {1, 1}, 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(p.h_conj[i].dom_lo() == Approx(-0.5));
    CHECK(p.h_conj[i].dom_hi() == 0.0);
  }
  CHECK(p.mu_g == 0.0);
  // Margins >= 1 make every hinge inactive.
  const ExtValue f = primal_objective(p, Vector{2.0, 1.0});
  CHECK_FALSE(f.infinite);
  CHECK(f.value == 0.0);

  auto q = gen_erm_hinge(12, 6, 3, 1.0);
  CHECK(q.mu_g == 1.0);
  for (std::size_t i = 0; i < q.n(); ++i) CHECK(q.A.row_norm(i) == Approx(1.0));
  attach_reference(q);
  CHECK(q.reference->method == "pdhg");
  CHECK(q.reference->achieved_gap <= 1e-9);
  REQUIRE(q.reference->F_star);
  check_saddle(q, 9);
}

TEST_CASE("lasso and ridge") {
  auto p = gen_lasso(10, 20, 4, 0.1, 0.5);
  CHECK(p.mu_h == 1.0);
  CHECK(p.mu_g == 0.0);
  attach_reference(p);
  CHECK(p.reference->achieved_gap <= 1e-9);
  check_saddle(p, 5);

  auto r = gen_ridge(15, 15, 6, 0.3);
  CHECK(r.mu_g == 1.0);
  CHECK(r.mu_h == 1.0);
  attach_reference(r);
  CHECK(r.reference->method == "kkt");
  check_saddle(r, 7);
}

TEST_CASE("bilinear toy and compact sets") {
  const auto p = gen_bilinear_toy();
  const CompactSet z = CompactSet::centered(Vector{0.0}, Vector{0.0}, 1.0);
  CHECK(z.contains(Vector{1.0}, Vector{-1.0}));
  CHECK_FALSE(z.contains(Vector{1.5}, Vector{0.0}));
  CHECK(z.diameter_sq(Vector{0.0}, Vector{0.0}) == 2.0);
  CHECK(dist_to_reference_sq(p, Vector{3.0}, Vector{4.0}) == 25.0);

  const CompactSet d = default_compact_set(p, Vector{1.0}, Vector{0.0});
  CHECK(d.x[0].hi == 4.0);
  CHECK_THROWS(CompactSet::centered(Vector{0.0}, Vector{0.0}, 0.0));

  // Clipping to dom h* = [-1, 0] for a one-row hinge conjugate.
  auto h = make_erm_hinge(SparseMatrix::from_dense(1, 1, {1}), {1}, 0.0);
  const CompactSet c = CompactSet::centered(Vector{0.0}, Vector{0.0}, 3.0).clipped_to(h);
  CHECK(c.y[0].lo == -1.0);
  CHECK(c.y[0].hi == 0.0);
}

TEST_CASE("problem validation and hashing") {
  CHECK_THROWS(make_problem("bad", SparseMatrix::from_dense(1, 2, {1, 1}),
                            SeparableFunction::uniform(3, ScalarConvexFn::zero()),
                            SeparableFunction::uniform(1, ScalarConvexFn::zero())));
  const auto a = gen_constrained_qp(5, 7, 11);
  const auto b = gen_constrained_qp(5, 7, 11);
  const auto c = gen_constrained_qp(5, 7, 12);
  CHECK(problem_hash(a) == problem_hash(b));
  CHECK(problem_hash(a) != problem_hash(c));
}

TEST_CASE("random matrix coverage") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SparseMatrix m = random_matrix({30, 60, 0.05, false}, seed);
    CHECK_FALSE(m.has_empty_column());
    CHECK_FALSE(m.has_empty_row());
    for (std::size_t j = 0; j < m.cols(); ++j) CHECK(m.pi(j) >= 1.0 / 30.0);
  }
  CHECK_THROWS(random_matrix({3, 3, 0.0, false}, 1));
}
