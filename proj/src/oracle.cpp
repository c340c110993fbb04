#include "purecd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "purecd/metrics.hpp"

namespace purecd {

namespace {

bool quadratic_like(const ScalarConvexFn& f) {
  return f.family() == Family::Quadratic || f.family() == Family::Zero;
}

// f(t) = alpha/2 t^2 + beta t.
void quadratic_coeffs(const ScalarConvexFn& f, double& alpha, double& beta) {
  if (f.family() == Family::Zero) {
    alpha = beta = 0.0;
    return;
  }
  alpha = f.scale() * f.a();
  beta = f.scale() * f.b();
}

void attach_objective(const SaddleProblem& p, Reference& r) {
  if (!p.h_primal) return;
  const ExtValue f = primal_objective(p, r.x_star);
  if (!f.infinite) r.F_star = f.value;
}

double candidate_gap(const SaddleProblem& p, const Vector& x, const Vector& y) {
  const CompactSet z = CompactSet::centered(x, y, 1.0).clipped_to(p);
  return gap_restricted(p, z, x, y);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

bool kkt_applicable(const SaddleProblem& p) {
  for (const auto& f : p.g.components()) {
    if (!quadratic_like(f)) return false;
  }
  for (const auto& f : p.h_conj.components()) {
    if (!quadratic_like(f)) return false;
  }
  return true;
}

Reference solve_kkt(const SaddleProblem& p) {
  if (!kkt_applicable(p)) throw OracleError(p.name + ": KKT solve needs quadratic g and h*");
  const std::size_t d = p.d(), n = p.n(), m = d + n;
  if (m > 4000) throw OracleError(p.name + ": KKT system too large for the dense solver");
  std::vector<double> k(m * m, 0.0), rhs(m, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return k[r * m + c]; };
  for (std::size_t j = 0; j < d; ++j) {
    double alpha, beta;
    quadratic_coeffs(p.g[j], alpha, beta);
    at(j, j) = alpha;
    rhs[j] = -beta;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double alpha, beta;
    quadratic_coeffs(p.h_conj[i], alpha, beta);
    at(d + i, d + i) = -alpha;
    rhs[d + i] = beta;
    auto cols = p.A.row_cols(i);
    auto vals = p.A.row_vals(i);
    for (std::size_t t = 0; t < cols.size(); ++t) {
      at(d + i, cols[t]) = vals[t];
      at(cols[t], d + i) = vals[t];
    }
  }
  const std::vector<double> k0 = k, rhs0 = rhs;

  double scale = 0.0;
  for (double v : k) scale = std::max(scale, std::abs(v));
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r) {
      if (std::abs(at(r, c)) > std::abs(at(piv, c))) piv = r;
    }
    if (std::abs(at(piv, c)) <= 1e-13 * scale) throw OracleError(p.name + ": KKT system is singular");
    if (piv != c) {
      for (std::size_t t = 0; t < m; ++t) std::swap(at(c, t), at(piv, t));
      std::swap(rhs[c], rhs[piv]);
    }
    for (std::size_t r = c + 1; r < m; ++r) {
      const double f = at(r, c) / at(c, c);
      if (f == 0.0) continue;
      for (std::size_t t = c; t < m; ++t) at(r, t) -= f * at(c, t);
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<double> sol(m);
  for (std::size_t c = m; c-- > 0;) {
    double s = rhs[c];
    for (std::size_t t = c + 1; t < m; ++t) s -= at(c, t) * sol[t];
    sol[c] = s / at(c, c);
  }

  double res = 0.0, bnorm = 1.0;
  for (std::size_t r = 0; r < m; ++r) {
    double s = -rhs0[r];
    for (std::size_t t = 0; t < m; ++t) s += k0[r * m + t] * sol[t];
    res = std::max(res, std::abs(s));
    bnorm = std::max(bnorm, std::abs(rhs0[r]));
  }
  if (res > 1e-10 * bnorm) {
    throw OracleError(p.name + ": KKT residual " + std::to_string(res) + " exceeds 1e-10");
  }

  Reference r;
  r.x_star.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(d));
  r.y_star.assign(sol.begin() + static_cast<std::ptrdiff_t>(d), sol.end());
  r.method = "kkt";
  r.achieved_gap = res;
  attach_objective(p, r);
  return r;
}

Reference solve_reference_pdhg(const SaddleProblem& p, const PdhgReferenceOptions& opt) {
  StepSchedule sched = StepSchedule::pdhg_baseline(p.A, 0.99);
  IterateState st = IterateState::start(p, {}, {});
  Vector xsum(p.d(), 0.0), ysum(p.n(), 0.0);
  double count = 0.0;
  double restart_score = INFINITY;
  Vector best_x = st.x, best_y = st.y;
  double best_gap = INFINITY;

  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    pdhg_step(p, sched, st);
    for (std::size_t j = 0; j < p.d(); ++j) xsum[j] += st.xbar[j];
    for (std::size_t i = 0; i < p.n(); ++i) ysum[i] += st.y[i];
    count += 1.0;
    if (it % opt.check_every != 0 && it != opt.max_iterations) continue;

    Vector xa = xsum, ya = ysum;
    for (double& v : xa) v /= count;
    for (double& v : ya) v /= count;
    const double g_last = candidate_gap(p, st.xbar, st.y);
    const double g_avg = candidate_gap(p, xa, ya);
    const bool avg_better = g_avg < g_last;
    const double score = std::min(g_last, g_avg);
    if (score < best_gap) {
      best_gap = score;
      best_x = avg_better ? xa : st.xbar;
      best_y = avg_better ? ya : st.y;
    }
    if (!std::isfinite(st.x[0]) || !std::isfinite(st.y[0])) {
      throw OracleError(p.name + ": PDHG reference diverged");
    }
    if (best_gap <= opt.target_gap) break;
    if (score <= 0.5 * restart_score) {
      // Restart from the better candidate with a fresh average.
      restart_score = score;
      st.x = avg_better ? xa : st.xbar;
      st.y = avg_better ? ya : st.y;
      st.xbar = st.x;
      st.cache.reset(p.A, st.y);
      std::fill(xsum.begin(), xsum.end(), 0.0);
      std::fill(ysum.begin(), ysum.end(), 0.0);
      count = 0.0;
    }
  }
  if (!(best_gap <= opt.target_gap)) {
    throw OracleError(p.name + ": PDHG reference stopped at gap " + std::to_string(best_gap) +
                      " above the target");
  }
  Reference r;
  r.x_star = std::move(best_x);
  r.y_star = std::move(best_y);
  r.method = "pdhg";
  r.achieved_gap = best_gap;
  attach_objective(p, r);
  return r;
}

void attach_reference(SaddleProblem& p, const PdhgReferenceOptions& opt) {
  p.reference = kkt_applicable(p) ? solve_kkt(p) : solve_reference_pdhg(p, opt);
}

void write_reference_json(const SaddleProblem& p, const Reference& r, const std::string& path) {
  nlohmann::json j;
  j["problem_hash"] = hex64(problem_hash(p));
  j["x_star"] = r.x_star;
  j["y_star"] = r.y_star;
  j["F_star"] = r.F_star ? nlohmann::json(*r.F_star) : nlohmann::json(nullptr);
  j["method"] = r.method;
  j["achieved_gap"] = r.achieved_gap;
  std::ofstream out(path);
  if (!out) throw OracleError("cannot write " + path);
  out << j.dump(2) << "\n";
}

Reference read_reference_json(const SaddleProblem& p, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw OracleError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw OracleError(path + ": " + e.what());
  }
  if (j.value("problem_hash", std::string()) != hex64(problem_hash(p))) {
    throw OracleError(path + ": reference was computed for a different problem");
  }
  Reference r;
  r.x_star = j.at("x_star").get<Vector>();
  r.y_star = j.at("y_star").get<Vector>();
  if (r.x_star.size() != p.d() || r.y_star.size() != p.n()) {
    throw OracleError(path + ": reference has the wrong dimension");
  }
  if (!j.at("F_star").is_null()) r.F_star = j.at("F_star").get<double>();
  r.method = j.value("method", std::string("unknown"));
  r.achieved_gap = j.value("achieved_gap", 0.0);
  return r;
}

std::vector<IdentityCheck> enumerate_expectations(const SaddleProblem& p,
                                                  const StepSchedule& s,
                                                  const IterateState& state, Method method,
                                                  std::span<const double> x_ref,
                                                  std::span<const double> y_ref,
                                                  std::span<const double> primal_weights,
                                                  std::span<const double> dual_weights,
                                                  double tol) {
  if (method != Method::PureCDDense && method != Method::PureCDSparse) {
    throw OracleError("expectations are enumerated for the coordinate methods only");
  }
  const std::size_t n = p.n(), d = p.d();
  const Vector& prob = s.probabilities();
  Vector xbar, ybar;
  full_bar_iterates(p, s, state, xbar, ybar);

  double e_dual = 0.0, e_primal = 0.0, e_h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    IterateState next = state;
    StepSchedule sn = s;
    if (method == Method::PureCDDense) {
      purecd_dense_step(p, sn, next, i);
    } else {
      purecd_sparse_step(p, sn, next, i);
    }
    double dy = 0.0, dx = 0.0;
    for (std::size_t l = 0; l < n; ++l) dy += dual_weights[l] * std::pow(next.y[l] - y_ref[l], 2);
    for (std::size_t j = 0; j < d; ++j) {
      dx += primal_weights[j] * std::pow(next.x[j] - x_ref[j], 2);
    }
    e_dual += prob[i] * dy;
    e_primal += prob[i] * dx;
    e_h += prob[i] * p.h_conj.eval(next.y).value;
  }

  auto make = [&](std::string name, double lhs, double rhs) {
    IdentityCheck c{std::move(name), lhs, rhs, false};
    c.ok = std::abs(lhs - rhs) <= tol * std::max({1.0, std::abs(lhs), std::abs(rhs)});
    return c;
  };
  std::vector<IdentityCheck> out;

  double rhs_dual = 0.0, rhs_h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rhs_dual += dual_weights[i] * (prob[i] * std::pow(ybar[i] - y_ref[i], 2) +
                                   (1.0 - prob[i]) * std::pow(state.y[i] - y_ref[i], 2));
    rhs_h += prob[i] * p.h_conj[i].eval(ybar[i]).value +
             (1.0 - prob[i]) * p.h_conj[i].eval(state.y[i]).value;
  }
  out.push_back(make("dual", e_dual, rhs_dual));
  out.push_back(make("hconj", e_h, rhs_h));

  if (method == Method::PureCDSparse) {
    const double nd = static_cast<double>(n);
    Vector dyv(n);
    for (std::size_t i = 0; i < n; ++i) dyv[i] = ybar[i] - state.y[i];
    const Vector atd = matvec_t(p.A, dyv);
    double rhs = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double b = primal_weights[j], pj = p.A.pi(j);
      const double step = s.primal_step(j) * s.theta(j);
      rhs += b * pj * std::pow(xbar[j] - x_ref[j], 2);
      rhs += b * (1.0 - pj) * std::pow(state.x[j] - x_ref[j], 2);
      rhs -= 2.0 / nd * b * step * atd[j] * (xbar[j] - x_ref[j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double m = 0.0;
      auto cols = p.A.row_cols(i);
      auto vals = p.A.row_vals(i);
      for (std::size_t t = 0; t < cols.size(); ++t) {
        const std::size_t j = cols[t];
        const double step = s.primal_step(j) * s.theta(j);
        m += primal_weights[j] * step * step * vals[t] * vals[t];
      }
      rhs += m / nd * dyv[i] * dyv[i];
    }
    out.push_back(make("primal", e_primal, rhs));
  }
  return out;
}

double check_lambda_weights(std::size_t n, std::size_t K_max) {
  const double nd = static_cast<double>(n);
  double worst = 0.0;
  double Lambda = 1.0;  // Lambda_1
  double tail = 0.0;     // sum_{k=1}^{K-2} weights
  for (std::size_t K = 2; K <= K_max; ++K) {
    Lambda += StepSchedule::lambda_sequence(n, K - 1);
    if (K >= 3) {
      const double w = nd * StepSchedule::lambda_sequence(n, K - 2) -
                       (nd - 1.0) * StepSchedule::lambda_sequence(n, K - 1);
      if (w < -1e-12 * nd) return -1.0;  // zero up to rounding when the ramp is active
      tail += w;
    }
    const double rhs = nd * StepSchedule::lambda_sequence(n, K - 1) + tail;
    worst = std::max(worst, std::abs(Lambda - rhs) / Lambda);
  }
  return worst;
}

double acc_rate_max_ratio(double alpha0, std::size_t K_max) {
  double a = alpha0, worst = 0.0;
  for (std::size_t K = 1; K <= K_max; ++K) {
    a = acc_rate_next(a);
    worst = std::max(worst, static_cast<double>(K) * a);
  }
  return worst;
}

std::vector<ScalarConvexFn> prox_catalog() {
  return {ScalarConvexFn::zero(),
          ScalarConvexFn::quadratic(2.0, -0.5, 1.5),
          ScalarConvexFn::quadratic(0.0, 0.7),
          ScalarConvexFn::abs_value(0.8, 1.25),
          ScalarConvexFn::interval(-1.5, 1.5),
          ScalarConvexFn::point(0.3),
          ScalarConvexFn::shifted_square(-0.4, 2.0),
          ScalarConvexFn::hinge(1.0, 0.5),
          ScalarConvexFn::hinge(-1.0, 0.25),
          ScalarConvexFn::linear_interval(2.0, -0.5, 0.0, 1.0),
          ScalarConvexFn::linear_interval(-1.0, 0.0, 0.75, 1.0)};
}

ProxSuiteResult prox_property_suite(std::size_t samples, std::uint64_t seed, double tol) {
  ProxSuiteResult res;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const ScalarConvexFn& f : prox_catalog()) {
    const ScalarConvexFn fc = conjugate(f);
    std::size_t fam_fail = 0;
    for (std::size_t s = 0; s < samples; ++s) {
      ++res.samples;
      const double tau = std::exp(std::log(1e-3) + unit(rng) * std::log(1e6));
      const double v = normal(rng), w = normal(rng);
      double u = normal(rng);
      if (std::isfinite(f.dom_lo()) && std::isfinite(f.dom_hi())) {
        u = f.dom_lo() + unit(rng) * (f.dom_hi() - f.dom_lo());
      }
      const double pv = prox(f, tau, v), pw = prox(f, tau, w);
      const double nonexp = std::abs(pv - pw) - std::abs(v - w);
      res.worst_nonexpansive = std::max(res.worst_nonexpansive, nonexp);

      const double fu = f.eval(u).value, fp = f.eval(pv).value;
      const double lhs = (pv - v) * (u - pv) / tau + fu - fp;
      const double rhs = 0.5 * f.mu() * (u - pv) * (u - pv);
      const double scale = std::max({1.0, std::abs(fu), std::abs(fp), std::abs(lhs), std::abs(rhs),
                                     std::abs((pv - v) * (u - pv) / tau)});
      const double ineq = (rhs - lhs) / scale;
      res.worst_inequality = std::max(res.worst_inequality, ineq);

      const double moreau = std::abs(v - pv - tau * prox(fc, 1.0 / tau, v / tau)) /
                            std::max(1.0, std::abs(v));
      res.worst_moreau = std::max(res.worst_moreau, moreau);

      if (nonexp > tol * std::max(1.0, std::abs(v - w)) || ineq > tol || moreau > tol) ++fam_fail;
    }
    if (fam_fail > 0) {
      res.failures += fam_fail;
      res.failed.push_back(std::string(family_name(f.family())) + " (" +
                           std::to_string(fam_fail) + " samples)");
    }
  }
  return res;
}

}  // namespace purecd
