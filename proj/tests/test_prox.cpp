#include <cmath>
#include <random>

#include "doctest.h"
#include "purecd/prox.hpp"

using namespace purecd;

namespace {

// Brute-force prox on a uniform grid around v.
double grid_prox(const ScalarConvexFn& f, double tau, double v, double step = 1e-6,
                 double radius = 4.0) {
  double best_u = v, best = INFINITY;
  for (double u = v - radius; u <= v + radius; u += step) {
    auto e = f.eval(u);
    if (e.infinite) continue;
    double obj = e.value + (u - v) * (u - v) / (2 * tau);
    if (obj < best) {
      best = obj;
      best_u = u;
    }
  }
  return best_u;
}

// Brute-force sup_z z v - f(z) on a grid; returns +inf-ish when it runs to the edge.
double grid_conjugate(const ScalarConvexFn& f, double v, double radius = 50.0,
                      double step = 1e-3) {
  double best = -INFINITY;
  for (double z = -radius; z <= radius; z += step) {
    auto e = f.eval(z);
    if (!e.infinite) best = std::max(best, z * v - e.value);
  }
  return best;
}

std::vector<ScalarConvexFn> catalog() {
  return {ScalarConvexFn::zero(),
          ScalarConvexFn::quadratic(2.0, -0.5),
          ScalarConvexFn::quadratic(0.0, 1.5),
          ScalarConvexFn::abs_value(0.7),
          ScalarConvexFn::interval(-1.5, 1.5),
          ScalarConvexFn::point(0.3),
          ScalarConvexFn::linear_interval(1.0, -1.0, 0.0),
          ScalarConvexFn::shifted_square(1.2, 0.5),
          ScalarConvexFn::hinge(1.0, 0.25),
          ScalarConvexFn::hinge(-2.0)};
}

}  // namespace

TEST_CASE("prox examples") {
  auto absf = ScalarConvexFn::abs_value(1.0);
  CHECK(prox(absf, 0.5, 2.0) == doctest::Approx(1.5));
  CHECK(grid_prox(absf, 0.5, 2.0) == doctest::Approx(1.5).epsilon(1e-5));

  CHECK(prox(ScalarConvexFn::zero(), 3.0, 0.37) == 0.37);
  CHECK(prox(ScalarConvexFn::point(4.0), 1.0, -2.0) == 4.0);

  auto hinge_conj = ScalarConvexFn::linear_interval(1.0, -1.0, 0.0);
  CHECK(prox(hinge_conj, 0.2, 0.5) == 0.0);
  CHECK(std::abs(grid_prox(hinge_conj, 0.2, 0.5)) <= 1e-5);

  // Conjugate of the square loss: 1/2 v^2 + b v with b = 1.
  auto sq_conj = ScalarConvexFn::quadratic(1.0, 1.0);
  CHECK(prox(sq_conj, 1.0, 3.0) == doctest::Approx(1.0));
  CHECK(grid_prox(sq_conj, 1.0, 3.0) == doctest::Approx(1.0).epsilon(1e-5));

  auto shifted = ScalarConvexFn::shifted_square(1.0);
  CHECK(prox(shifted, 1.0, 3.0) == doctest::Approx(2.0));
  CHECK(grid_prox(shifted, 1.0, 3.0) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("prox ties and boundaries") {
  auto absf = ScalarConvexFn::abs_value(1.0);
  CHECK(prox(absf, 1.0, 1.0) == 0.0);
  CHECK(prox(absf, 1.0, -1.0) == 0.0);
  auto box = ScalarConvexFn::interval(-1.0, 1.0);
  CHECK(prox(box, 1.0, 5.0) == 1.0);
  CHECK(prox(box, 1.0, -5.0) == -1.0);
  CHECK_THROWS(ScalarConvexFn::interval(1.0, 0.0));
  CHECK_THROWS(prox(box, 0.0, 1.0));
  CHECK_THROWS(prox(box, -1.0, 1.0));
}

TEST_CASE("prox of each family matches the grid oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(-2, 2), step(0.1, 2);
  for (const auto& f : catalog()) {
    for (int k = 0; k < 3; ++k) {
      double v = val(rng), tau = step(rng);
      std::string fam = family_name(f.family());
      CAPTURE(fam);
      if (f.family() == Family::Point) {
        CHECK(prox(f, tau, v) == f.b());  // a grid never lands on the singleton
        continue;
      }
      CHECK(std::abs(prox(f, tau, v) - grid_prox(f, tau, v, 1e-5)) <= 2e-5);
    }
  }
}

TEST_CASE("moduli match the family") {
  CHECK(ScalarConvexFn::quadratic(3.0).mu() == 3.0);
  CHECK(ScalarConvexFn::quadratic(3.0, 0.0, 0.5).mu() == 1.5);
  CHECK(ScalarConvexFn::shifted_square(2.0).mu() == 1.0);
  CHECK(ScalarConvexFn::abs_value(1.0).mu() == 0.0);
  CHECK(ScalarConvexFn::interval(0, 1).mu() == 0.0);
  CHECK(ScalarConvexFn::point(1).mu() == 0.0);
  CHECK(ScalarConvexFn::hinge(1.0).mu() == 0.0);
}

TEST_CASE("eval is convex along random midpoints") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> val(-3, 3);
  for (const auto& f : catalog()) {
    for (int k = 0; k < 100; ++k) {
      double s = val(rng), t = val(rng);
      auto fs = f.eval(s), ft = f.eval(t), fm = f.eval(0.5 * (s + t));
      if (fs.infinite || ft.infinite) continue;
      REQUIRE_FALSE(fm.infinite);
      REQUIRE(fm.value <= 0.5 * (fs.value + ft.value) + 1e-10);
    }
  }
}

TEST_CASE("eval reports infinity outside the domain") {
  auto f = ScalarConvexFn::linear_interval(2.0, -1.0, 0.0);
  CHECK(f.eval(0.5).infinite);
  CHECK_FALSE(f.eval(-0.5).infinite);
  CHECK(f.eval(-0.5).value == doctest::Approx(-1.0));
  CHECK(ScalarConvexFn::point(2).eval(2.0 + 1e-9).infinite);
}

TEST_CASE("prox_diag") {
  auto zero = SeparableFunction::uniform(3, ScalarConvexFn::zero());
  std::vector<double> v{1, -2, 3}, t{1, 1, 1};
  CHECK(zero.prox_diag(t, v) == v);

  auto l1 = SeparableFunction::uniform(2, ScalarConvexFn::abs_value(1.0));
  std::vector<double> taus{0.5, 1.0}, w{2.0, -3.0};
  auto out = l1.prox_diag(taus, w);
  CHECK(out[0] == doctest::Approx(1.5));
  CHECK(out[1] == doctest::Approx(-2.0));
  CHECK(std::abs(grid_prox(l1[1], 1.0, -3.0) - out[1]) <= 1e-5);

  auto f3 = SeparableFunction::uniform(3, ScalarConvexFn::abs_value(1.0));
  std::vector<double> buf{10, 20, 30};
  std::vector<std::size_t> subset{1};
  std::vector<double> v3{5, 5, 5};
  f3.prox_subset(t, v3, subset, buf);
  CHECK(buf == std::vector<double>{10, 4, 30});

  std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS(l1.prox_diag(bad, w));
}

TEST_CASE("separable prox equals the joint minimizer") {
  // Joint objective separates, so a coordinatewise grid search is the joint argmin.
  SeparableFunction f({ScalarConvexFn::abs_value(0.5), ScalarConvexFn::quadratic(1.0, 0.3),
                       ScalarConvexFn::interval(-0.2, 0.4)});
  CHECK(f.mu() == 0.0);
  std::vector<double> taus{0.7, 1.3, 0.4}, v{1.1, -0.6, 0.9};
  auto out = f.prox_diag(taus, v);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(out[j] - grid_prox(f[j], taus[j], v[j], 1e-5)) <= 2e-5);
  }
}

TEST_CASE("conjugate pairs from the catalog") {
  // Square loss with b = 0.
  auto sq = conjugate_pair(ScalarConvexFn::shifted_square(0.0));
  CHECK(sq.conj.family() == Family::Quadratic);
  CHECK(sq.conj.mu() == 1.0);
  for (double v : {-1.0, 0.3, 2.0}) {
    CHECK(sq.conj.eval(v).value == doctest::Approx(0.5 * v * v));
    CHECK(grid_conjugate(sq.primal, v) == doctest::Approx(0.5 * v * v).epsilon(1e-5));
  }

  // Point indicator: support function b v.
  auto pt = conjugate_pair(ScalarConvexFn::point(2.5));
  for (double v : {-1.0, 0.0, 3.0}) CHECK(pt.conj.eval(v).value == doctest::Approx(2.5 * v));

  // Hinge with label +1, scaled by 1/n for n = 2.
  auto hg = conjugate_pair(ScalarConvexFn::hinge(1.0, 0.5));
  CHECK(hg.conj.dom_lo() == doctest::Approx(-0.5));
  CHECK(hg.conj.dom_hi() == 0.0);
  CHECK(grid_conjugate(hg.primal, -0.25) == doctest::Approx(hg.conj.eval(-0.25).value));
  // Outside the domain the sup grows with the grid radius.
  CHECK(grid_conjugate(hg.primal, 0.1, 50.0) > 4.0);
  CHECK(grid_conjugate(hg.primal, -0.6, 50.0) > 4.0);

  auto neg = conjugate_pair(ScalarConvexFn::hinge(-1.0, 0.5));
  CHECK(neg.conj.dom_lo() == 0.0);
  CHECK(neg.conj.dom_hi() == doctest::Approx(0.5));

  CHECK_THROWS_AS(conjugate(ScalarConvexFn::interval(0.0, 1.0)), UnsupportedFamily);
}

TEST_CASE("conjugation round-trips") {
  for (const auto& f : catalog()) {
    ScalarConvexFn c = conjugate(f);
    ScalarConvexFn cc = conjugate(c);
    for (double t : {-1.3, -0.2, 0.0, 0.7, 2.1}) {
      auto a = f.eval(t), b = cc.eval(t);
      std::string fam = family_name(f.family());
      CAPTURE(fam);
      REQUIRE(a.infinite == b.infinite);
      if (!a.infinite) CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
    }
  }
}

TEST_CASE("Fenchel-Young inequality on random samples") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> val(-3, 3);
  for (const auto& f : catalog()) {
    auto c = conjugate(f);
    for (int k = 0; k < 200; ++k) {
      double z = val(rng), v = val(rng);
      auto hz = f.eval(z), hv = c.eval(v);
      if (hz.infinite || hv.infinite) continue;
      REQUIRE(hz.value + hv.value - z * v >= -1e-10);
    }
  }
}

TEST_CASE("restricted conjugate matches grid and ternary search") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> val(-2, 2);
  for (const auto& f : catalog()) {
    for (int k = 0; k < 5; ++k) {
      double s = val(rng);
      double lo = -1.5, hi = 1.7;
      if (std::max(lo, f.dom_lo()) > std::min(hi, f.dom_hi())) continue;
      double closed = restricted_conjugate(f, s, lo, hi);
      double L = std::max(lo, f.dom_lo()), U = std::min(hi, f.dom_hi());
      double tern = maximize_concave_1d([&](double t) { return s * t - f.eval(t).value; }, L, U);
      std::string fam = family_name(f.family());
      CAPTURE(fam);
      CHECK(closed == doctest::Approx(tern).epsilon(1e-8));
      CHECK(closed >= tern - 1e-9);
    }
  }
  CHECK_THROWS(restricted_conjugate(ScalarConvexFn::point(5.0), 1.0, -1.0, 1.0));
}

TEST_CASE("lipschitz of bounded conjugates") {
  auto c = ScalarConvexFn::linear_interval(1.0, -0.5, 0.0);
  REQUIRE(c.lipschitz());
  CHECK(*c.lipschitz() == 0.5);
  CHECK_FALSE(ScalarConvexFn::quadratic(1.0).lipschitz());
  auto sep = SeparableFunction::uniform(4, c);
  CHECK(*sep.lipschitz() == doctest::Approx(1.0));
}
