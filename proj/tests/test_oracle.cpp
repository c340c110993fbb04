#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "purecd/oracle.hpp"

using namespace purecd;
using doctest::Approx;

namespace {

// Random state reached by a few steps from a random start, plus random
// weights and reference point.
struct Tuple {
  IterateState state;
  StepSchedule schedule;
  Vector x_ref, y_ref, b, phi;
};

Tuple random_tuple(const SaddleProblem& p, StepSchedule s, Method m, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> pos(0.1, 2.0);
  Vector x0(p.d()), y0(p.n());
  for (auto& v : x0) v = gauss(rng);
  for (std::size_t i = 0; i < p.n(); ++i) {
    y0[i] = std::clamp(gauss(rng), p.h_conj[i].dom_lo(), p.h_conj[i].dom_hi());
  }
  IterateState st = IterateState::start(p, x0, y0);
  const RowSampler sampler(s.probabilities(), s.uniform_sampling());
  const int steps = static_cast<int>(rng() % 5);
  for (int t = 0; t < steps; ++t) {
    const std::size_t i = sampler(std::uniform_real_distribution<double>(0, 1)(rng));
    if (m == Method::PureCDDense) {
      purecd_dense_step(p, s, st, i);
    } else {
      purecd_sparse_step(p, s, st, i);
    }
  }
  Tuple t{st, s, Vector(p.d()), Vector(p.n()), Vector(p.d()), Vector(p.n())};
  for (auto& v : t.x_ref) v = gauss(rng);
  for (auto& v : t.y_ref) v = gauss(rng);
  for (auto& v : t.b) v = pos(rng);
  for (auto& v : t.phi) v = pos(rng);
  return t;
}

}  // namespace

TEST_CASE("worked dual identity instance") {
  // A = I, g = h* = 0, gamma = 1/2: tau = 1/2, sigma = 1/2, y_k = (1, 1) and
  // x_k chosen so that y_bar = (2, 3).
  auto p = make_problem("toy", SparseMatrix::from_dense(2, 2, {1, 0, 0, 1}),
                        SeparableFunction::uniform(2, ScalarConvexFn::zero()),
                        SeparableFunction::uniform(2, ScalarConvexFn::zero()));
  const StepSchedule s = StepSchedule::dense_importance(p.A, 0.5);
  const IterateState st = IterateState::start(p, {2.5, 4.5}, {1.0, 1.0});
  Vector xb, yb;
  full_bar_iterates(p, s, st, xb, yb);
  CHECK(yb[0] == Approx(2.0));
  CHECK(yb[1] == Approx(3.0));
  const Vector ones(2, 1.0), zeros(2, 0.0);
  const auto checks = enumerate_expectations(p, s, st, Method::PureCDDense, zeros, zeros, ones,
                                             ones);
  CHECK(checks[0].name == "dual");
  CHECK(checks[0].lhs == Approx(7.5));
  CHECK(checks[0].rhs == Approx(7.5));
  for (const auto& c : checks) CHECK_MESSAGE(c.ok, c.name);
}

TEST_CASE("one-step identities by enumeration") {
  std::mt19937_64 rng(17);
  for (std::size_t n : {2u, 3u, 5u}) {
    for (int rep = 0; rep < 20; ++rep) {
      auto lasso = gen_lasso(n, 4, rng(), 0.1, 0.6);
      auto hinge = gen_erm_hinge(n, 3, rng(), 0.5, 1.0, false);
      for (const SaddleProblem* p : {&lasso, &hinge}) {
        for (Method m : {Method::PureCDDense, Method::PureCDSparse}) {
          const StepSchedule s = m == Method::PureCDDense
                                     ? StepSchedule::dense_importance(p->A)
                                     : StepSchedule::sparse_convex(p->A);
          const Tuple t = random_tuple(*p, s, m, rng);
          const auto checks = enumerate_expectations(*p, t.schedule, t.state, m, t.x_ref,
                                                     t.y_ref, t.b, t.phi);
          CHECK(checks.size() == (m == Method::PureCDSparse ? 3u : 2u));
          for (const auto& c : checks) {
            CHECK_MESSAGE(c.ok, c.name << " lhs=" << c.lhs << " rhs=" << c.rhs);
          }
        }
      }
    }
  }
}

TEST_CASE("reference solvers agree") {
  auto qp = gen_constrained_qp(5, 9, 3);
  const Reference kkt = solve_kkt(qp);
  const Reference pd = solve_reference_pdhg(qp);
  for (std::size_t j = 0; j < qp.d(); ++j) CHECK(pd.x_star[j] == Approx(kkt.x_star[j]).epsilon(1e-6));
  for (std::size_t i = 0; i < qp.n(); ++i) CHECK(pd.y_star[i] == Approx(kkt.y_star[i]).epsilon(1e-6));

  const auto toy = gen_bilinear_toy();
  const Reference t = solve_reference_pdhg(toy);
  CHECK(std::abs(t.x_star[0]) <= 1e-6);
  CHECK(std::abs(t.y_star[0]) <= 1e-6);

  // One-dimensional Lasso: argmin 1/2 (a x - b)^2 + lambda |x|.
  const double a = 2.0, b = 3.0, lam = 0.5;
  auto l1 = make_lasso(SparseMatrix::from_dense(1, 1, {a}), {b}, lam);
  const Reference r = solve_reference_pdhg(l1);
  CHECK(r.x_star[0] == Approx((a * b - lam) / (a * a)).epsilon(1e-6));
  REQUIRE(r.F_star);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto p = gen_constrained_qp(6, 12, seed, 0.5);
    const Reference k = solve_kkt(p);
    const Vector ax = matvec(p.A, k.x_star);
    for (std::size_t i = 0; i < p.n(); ++i) {
      CHECK(std::abs(ax[i] - (*p.constraint_set)[i].lo) <= 1e-10);
    }
  }

  CHECK_THROWS_AS(solve_kkt(l1), OracleError);
  // Singular: zero quadratic and zero conjugate.
  auto sing = make_problem("singular", SparseMatrix::from_dense(1, 2, {1, 1}),
                           SeparableFunction::uniform(2, ScalarConvexFn::zero()),
                           SeparableFunction::uniform(1, ScalarConvexFn::zero()));
  CHECK_THROWS_AS(solve_kkt(sing), OracleError);
  PdhgReferenceOptions tiny;
  tiny.max_iterations = 10;
  tiny.check_every = 5;
  CHECK_THROWS_AS(solve_reference_pdhg(gen_lasso(8, 8, 1, 0.1), tiny), OracleError);
}

TEST_CASE("reference json round trip") {
  auto p = gen_constrained_qp(4, 6, 2);
  attach_reference(p);
  const std::string path =
      (std::filesystem::temp_directory_path() / "purecd_ref_test.json").string();
  write_reference_json(p, *p.reference, path);
  const Reference r = read_reference_json(p, path);
  CHECK(r.x_star == p.reference->x_star);
  CHECK(r.y_star == p.reference->y_star);
  CHECK(r.method == "kkt");
  CHECK(r.F_star.has_value() == p.reference->F_star.has_value());
  const auto other = gen_constrained_qp(4, 6, 3);
  CHECK_THROWS_AS(read_reference_json(other, path), OracleError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_reference_json(p, path), OracleError);
}

TEST_CASE("prox property suite") {
  const ProxSuiteResult r = prox_property_suite(1000, 42);
  CHECK(r.samples == 1000 * prox_catalog().size());
  CHECK_MESSAGE(r.failures == 0, (r.failed.empty() ? "" : r.failed.front()));
  CHECK(r.worst_inequality <= 1e-10);
  CHECK(r.worst_moreau <= 1e-10);
}
