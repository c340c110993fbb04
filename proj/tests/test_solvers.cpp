#include <random>

#include "doctest.h"
#include "purecd/oracle.hpp"
#include "purecd/solvers.hpp"

using namespace purecd;
using doctest::Approx;

namespace {

std::size_t nonzeros_changed(const Vector& a, const Vector& b) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += a[i] != b[i];
  return c;
}

double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("counter rng and sampler") {
  CHECK(counter_uniform(1, 0, 5) == counter_uniform(1, 0, 5));
  CHECK(counter_uniform(1, 0, 5) != counter_uniform(2, 0, 5));
  CHECK(counter_uniform(1, 0, 5) != counter_uniform(1, 1, 5));
  double mean = 0.0;
  for (std::uint64_t k = 0; k < 100000; ++k) {
    const double u = counter_uniform(7, 0, k);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    mean += u / 100000.0;
  }
  CHECK(mean == Approx(0.5).epsilon(0.01));

  const RowSampler uni(Vector(4, 0.25), true);
  CHECK(uni(0.0) == 0);
  CHECK(uni(0.49) == 1);
  CHECK(uni(0.9999999) == 3);

  const RowSampler law(Vector{0.1, 0.6, 0.3}, false);
  CHECK(law(0.05) == 0);
  CHECK(law(0.5) == 1);
  CHECK(law(0.95) == 2);
  std::vector<int> counts(3, 0);
  for (std::uint64_t k = 0; k < 60000; ++k) ++counts[law(counter_uniform(3, 0, k))];
  CHECK(counts[1] / 60000.0 == Approx(0.6).epsilon(0.02));
}

TEST_CASE("lazy weighted sum") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> pick(0, 4);
  std::normal_distribution<double> gauss;
  Vector v(5, 1.0), naive(5, 0.0);
  LazyWeightedSum lazy(v);
  for (int t = 0; t < 500; ++t) {
    const std::size_t i = pick(rng);
    v[i] = gauss(rng);
    lazy.set(i, v[i]);
    const double w = 0.5 + 0.01 * t;
    lazy.accumulate(w);
    for (std::size_t j = 0; j < 5; ++j) naive[j] += w * v[j];
  }
  const Vector s = lazy.sum();
  for (std::size_t j = 0; j < 5; ++j) CHECK(s[j] == Approx(naive[j]).epsilon(1e-12));
}

TEST_CASE("checkpoint plans") {
  const auto g = geometric_checkpoints(10);
  CHECK(g == std::vector<std::size_t>{0, 1, 2, 4, 8, 10});
  CHECK(geometric_checkpoints(0) == std::vector<std::size_t>{0});
  CHECK(linear_checkpoints(10, 4) == std::vector<std::size_t>{0, 4, 8, 10});
}

TEST_CASE("one-sparse dual updates and sparse locality") {
  auto p = gen_lasso(15, 25, 2, 0.1, 0.2);
  StepSchedule sd = StepSchedule::dense_importance(p.A);
  StepSchedule ss = StepSchedule::csc(p.A, p.mu_h);
  IterateState a = IterateState::start(p, {}, {});
  IterateState b = a;
  const RowSampler sampler(sd.probabilities(), sd.uniform_sampling());
  for (std::size_t k = 0; k < 500; ++k) {
    const Vector ya = a.y, yb = b.y, xb = b.x;
    purecd_dense_step(p, sd, a, sampler(counter_uniform(1, 0, k)));
    const std::size_t row = k % p.n();
    purecd_sparse_step(p, ss, b, row);
    CHECK(nonzeros_changed(ya, a.y) <= 1);
    CHECK(nonzeros_changed(yb, b.y) <= 1);
    auto cols = p.A.row_cols(row);
    for (std::size_t j = 0; j < p.d(); ++j) {
      if (b.x[j] != xb[j]) CHECK(std::binary_search(cols.begin(), cols.end(), j));
    }
  }
  CHECK(a.cache.max_deviation(p.A, a.y) <= 1e-10);
  CHECK(b.cache.max_deviation(p.A, b.y) <= 1e-10);
  CHECK(a.k == 500);
  CHECK(ss.k() == 500);
}

TEST_CASE("dense and sparse algorithms agree on dense A") {
  auto p = gen_erm_hinge(20, 20, 5, 0.5, 1.0, true);
  const StepSchedule dense = StepSchedule::dense_importance(p.A);
  REQUIRE(dense.uniform_sampling());
  RunConfig cfg;
  cfg.iterations = 1000;
  cfg.seed = 11;
  cfg.output = OutputRule::LastIterate;
  cfg.keep_outputs = true;
  cfg.checkpoints = linear_checkpoints(1000, 100);
  const Trace td = run(p, dense, cfg);
  const Trace ts = run(p, StepSchedule::lift_to_sparse(dense), cfg);
  REQUIRE(td.outputs.size() == ts.outputs.size());
  double worst = 0.0;
  for (std::size_t c = 0; c < td.outputs.size(); ++c) {
    worst = std::max(worst, max_abs_diff(td.outputs[c].x, ts.outputs[c].x));
    worst = std::max(worst, max_abs_diff(td.outputs[c].y, ts.outputs[c].y));
  }
  CHECK(worst <= 1e-10);
  CHECK(td.total_cost == 1000 * (p.d() + p.d()));
  CHECK(ts.total_cost == 1000 * p.d());

  // A perturbed theta breaks the agreement.
  StepSchedule bad = StepSchedule::lift_to_sparse(dense);
  bad.perturb_theta(3, 1e-3);
  const Trace tb = run(p, bad, cfg);
  double drift = 0.0;
  for (std::size_t c = 0; c < td.outputs.size(); ++c) {
    drift = std::max(drift, max_abs_diff(td.outputs[c].x, tb.outputs[c].x));
  }
  CHECK(drift > 1e-8);
}

TEST_CASE("determinism and seeds") {
  auto p = gen_lasso(10, 12, 3, 0.2, 0.5);
  RunConfig cfg;
  cfg.iterations = 300;
  cfg.seed = 4;
  cfg.keep_outputs = true;
  const StepSchedule s = StepSchedule::csc(p.A, p.mu_h);
  const Trace a = run(p, s, cfg), b = run(p, s, cfg);
  REQUIRE(a.outputs.size() == b.outputs.size());
  for (std::size_t c = 0; c < a.outputs.size(); ++c) {
    CHECK(a.outputs[c].x == b.outputs[c].x);
    CHECK(a.outputs[c].y == b.outputs[c].y);
  }
  cfg.seed = 5;
  const Trace c = run(p, s, cfg);
  CHECK(c.outputs.back().x != a.outputs.back().x);

  cfg.iterations = 0;
  const Trace z = run(p, s, cfg);
  REQUIRE(z.records.size() == 1);
  CHECK(z.records[0].k == 0);
  CHECK(z.records[0].cost == 0);
}

TEST_CASE("cost accounting") {
  auto p = gen_lasso(12, 30, 8, 0.1, 0.3);
  RunConfig cfg;
  cfg.iterations = 50;
  cfg.check_locality = true;
  const Trace ts = run(p, StepSchedule::csc(p.A, p.mu_h), cfg);
  CHECK(ts.locality_violations == 0);
  CHECK(ts.total_cost < 50 * p.A.nnz());
  const Trace tp = run(p, StepSchedule::pdhg_baseline(p.A), cfg);
  CHECK(tp.total_cost == 50 * (2 * p.A.nnz() + p.n() + p.d()));
}

TEST_CASE("constant iterates at a saddle point") {
  auto p = gen_ridge(6, 6, 3, 1.0);
  attach_reference(p);
  const Reference& r = *p.reference;
  struct Case {
    StepSchedule s;
    OutputRule rule;
  };
  std::vector<Case> cases{{StepSchedule::dense_importance(p.A), OutputRule::Ergodic},
                          {StepSchedule::lambda_restart(p.A), OutputRule::LambdaWeighted},
                          {StepSchedule::sparse_convex(p.A), OutputRule::RandomIterate},
                          {StepSchedule::scsc(p.A, 1.0, 1.0), OutputRule::LastIterate},
                          {StepSchedule::pdhg_baseline(p.A), OutputRule::Ergodic}};
  for (auto& c : cases) {
    RunConfig cfg;
    cfg.iterations = 40;
    cfg.output = c.rule;
    cfg.x0 = r.x_star;
    cfg.y0 = r.y_star;
    cfg.keep_outputs = true;
    const Trace t = run(p, c.s, cfg);
    for (const auto& o : t.outputs) {
      CHECK(max_abs_diff(o.x, r.x_star) <= 1e-12);
      CHECK(max_abs_diff(o.y, r.y_star) <= 1e-12);
    }
  }
}

TEST_CASE("lambda-weighted output matches the explicit sums") {
  auto p = gen_ridge(3, 4, 9, 1.0);
  const StepSchedule s0 = StepSchedule::lambda_restart(p.A, 0.99);
  const std::size_t K = 8;
  RunConfig cfg;
  cfg.iterations = K;
  cfg.seed = 2;
  cfg.checkpoints = linear_checkpoints(K, 1);
  cfg.keep_outputs = true;
  const Trace t = run(p, s0, cfg);

  // Replay by hand: y_hist[k] = y_k, xbar_hist[k] = x_bar_k.
  StepSchedule s = s0;
  IterateState st = IterateState::start(p, {}, {});
  std::vector<Vector> ys{st.y}, xbars{st.x};
  lambda_init_step(p, s, st);
  ys.push_back(st.y);
  xbars.push_back(st.xbar);
  const RowSampler sampler(s.probabilities(), true);
  while (st.k < K) {
    purecd_dense_step(p, s, st, sampler(counter_uniform(2, 0, st.k)));
    ys.push_back(st.y);
    xbars.push_back(st.xbar);
  }
  const double n = 3.0;
  for (std::size_t k = 2; k <= K; ++k) {
    const double Lam = s0.Lambda(k);
    Vector x(p.d(), 0.0), y(p.n(), 0.0);
    double wsum = n * s0.lambda_at(k - 1);
    for (std::size_t t2 = 0; t2 < k; ++t2) {
      for (std::size_t j = 0; j < p.d(); ++j) x[j] += s0.lambda_at(t2) * xbars[t2 + 1][j] / Lam;
    }
    for (std::size_t i = 0; i < p.n(); ++i) y[i] = n * s0.lambda_at(k - 1) * ys[k][i];
    for (std::size_t t2 = 1; t2 + 2 <= k; ++t2) {
      const double w = n * s0.lambda_at(t2) - (n - 1) * s0.lambda_at(t2 + 1);
      CHECK(w >= 0.0);
      wsum += w;
      for (std::size_t i = 0; i < p.n(); ++i) y[i] += w * ys[t2 + 1][i];
    }
    CHECK(wsum == Approx(Lam));
    for (double& v : y) v /= Lam;
    CHECK(max_abs_diff(x, t.outputs[k].x) <= 1e-12);
    CHECK(max_abs_diff(y, t.outputs[k].y) <= 1e-12);
  }
  // n = 3, K = 4: weights (0, 0.25, 3) sum to 3.25.
  CHECK(n * s0.lambda_at(1) - 2 * s0.lambda_at(2) == Approx(0.0));
  CHECK(n * s0.lambda_at(2) - 2 * s0.lambda_at(3) == Approx(0.25));
  CHECK(n * s0.lambda_at(3) == Approx(3.0));
}

TEST_CASE("ergodic and random-iterate outputs") {
  auto p = gen_erm_hinge(8, 5, 1, 0.0, 1.0, true);
  RunConfig cfg;
  cfg.iterations = 1;
  cfg.output = OutputRule::Ergodic;
  cfg.ergodic_dual_bar = true;
  cfg.keep_outputs = true;
  const StepSchedule sd = StepSchedule::dense_importance(p.A);
  const Trace t = run(p, sd, cfg);
  IterateState st = IterateState::start(p, {}, {});
  Vector xb, yb;
  full_bar_iterates(p, sd, st, xb, yb);
  CHECK(max_abs_diff(t.outputs.back().x, xb) <= 1e-15);
  CHECK(max_abs_diff(t.outputs.back().y, yb) <= 1e-15);

  // The random iterate is one of the materialized (x_bar_k, y_bar_k).
  RunConfig rc;
  rc.iterations = 64;
  rc.seed = 3;
  rc.keep_outputs = true;
  rc.checkpoints = {16, 64};
  const StepSchedule ss = StepSchedule::sparse_convex(p.A);
  const Trace tr = run(p, ss, rc);
  REQUIRE(tr.outputs.size() == 3);
  StepSchedule s = ss;
  IterateState it = IterateState::start(p, {}, {});
  const RowSampler sampler(s.probabilities(), true);
  std::vector<Vector> xs, ys;
  while (it.k < 64) {
    full_bar_iterates(p, s, it, xb, yb);
    xs.push_back(xb);
    ys.push_back(yb);
    purecd_sparse_step(p, s, it, sampler(counter_uniform(3, 0, it.k)));
  }
  for (std::size_t c = 1; c < 3; ++c) {
    bool found = false;
    for (std::size_t k = 0; k < tr.outputs[c].k; ++k) {
      found = found || (xs[k] == tr.outputs[c].x && ys[k] == tr.outputs[c].y);
    }
    CHECK(found);
  }
}

TEST_CASE("pdhg step and Fejer monotonicity") {
  auto p = gen_constrained_qp(6, 10, 2);
  attach_reference(p);
  const Reference& r = *p.reference;
  StepSchedule s = StepSchedule::pdhg_baseline(p.A, 0.99);
  IterateState st = IterateState::start(p, {}, {});
  // (y_bar_k, x_bar_{k+1}) follows a Chambolle-Pock recursion with the roles
  // of the variables swapped, so its distance to the saddle in the metric
  // [I/sigma, A; A^T, I/tau] never increases.
  const double tau = s.pdhg_tau(), sig = s.pdhg_sigma();
  double prev = INFINITY;
  for (int k = 0; k < 2000; ++k) {
    const Vector y_prev = st.y;
    pdhg_step(p, s, st);
    Vector dx(p.d()), dy(p.n());
    for (std::size_t j = 0; j < p.d(); ++j) dx[j] = st.xbar[j] - r.x_star[j];
    for (std::size_t i = 0; i < p.n(); ++i) dy[i] = y_prev[i] - r.y_star[i];
    const Vector adx = matvec(p.A, dx);
    double m = 0.0;
    for (double v : dx) m += v * v / tau;
    for (double v : dy) m += v * v / sig;
    for (std::size_t i = 0; i < p.n(); ++i) m += 2.0 * adx[i] * dy[i];
    CHECK(m >= -1e-12);
    CHECK(m <= prev + 1e-9);
    prev = m;
  }
  CHECK(dist_sq(st.xbar, r.x_star) <= 1e-6);

  // GDA keeps x = x_bar.
  StepSchedule g = StepSchedule::pdhg_baseline(p.A, 0.5);
  IterateState gs = IterateState::start(p, {}, {});
  gda_step(p, g, gs);
  CHECK(gs.x == gs.xbar);
}

TEST_CASE("config errors") {
  auto p = gen_lasso(5, 6, 1, 0.1);
  RunConfig cfg;
  cfg.iterations = 3;
  cfg.method = Method::PDHG;
  CHECK_THROWS_AS(run(p, StepSchedule::csc(p.A, 1.0), cfg), SolverError);
  cfg.method.reset();
  cfg.output = OutputRule::LambdaWeighted;
  CHECK_THROWS_AS(run(p, StepSchedule::csc(p.A, 1.0), cfg), SolverError);
  cfg.output.reset();
  cfg.x0 = Vector(2, 0.0);
  CHECK_THROWS_AS(run(p, StepSchedule::csc(p.A, 1.0), cfg), SolverError);
}

TEST_CASE("non-finite iterates abort with the iteration index") {
  auto p = gen_lasso(5, 6, 1, 0.1);
  RunConfig cfg;
  cfg.iterations = 10;
  cfg.y0 = Vector(5, 0.0);
  cfg.y0[2] = NAN;
  CHECK_THROWS_AS(run(p, StepSchedule::dense_importance(p.A), cfg), SolverError);
  cfg.y0.clear();
  cfg.x0 = Vector(6, 1e308);
  try {
    run(p, StepSchedule::dense_importance(p.A), cfg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.iteration() == 1);
  }
}
