#include "purecd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace purecd {

namespace {

const Reference& need_reference(const SaddleProblem& p) {
  if (!p.reference) throw std::invalid_argument(p.name + ": no reference saddle point");
  return *p.reference;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Sum of the restricted conjugates, i.e. max over Z of
// <Ax', y> - h*(y) - g(x) - <x, A^T y'>.
double restricted_terms(const SaddleProblem& p, const CompactSet& z, const Vector& ax,
                        const Vector& aty) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    s += restricted_conjugate(p.h_conj[i], ax[i], z.y[i].lo, z.y[i].hi);
  }
  for (std::size_t j = 0; j < p.d(); ++j) {
    s += restricted_conjugate(p.g[j], -aty[j], z.x[j].lo, z.x[j].hi);
  }
  return s;
}

}  // namespace

SignedValue lagrangian(const SaddleProblem& p, std::span<const double> x,
                       std::span<const double> y) {
  const ExtValue gx = p.g.eval(x);
  const ExtValue hy = p.h_conj.eval(y);
  if (gx.infinite) return {0.0, +1};
  if (hy.infinite) return {0.0, -1};
  const Vector ax = matvec(p.A, x);
  return {gx.value + dot(ax, y) - hy.value, 0};
}

SignedValue g_value(const SaddleProblem& p, std::span<const double> xp,
                    std::span<const double> yp, std::span<const double> x,
                    std::span<const double> y) {
  const SignedValue a = lagrangian(p, xp, y);
  const SignedValue b = lagrangian(p, x, yp);
  // L(x', y) = +inf or L(x, y') = -inf both push G to +inf.
  if (a.infinite > 0 || b.infinite < 0) return {0.0, +1};
  if (a.infinite < 0 || b.infinite > 0) return {0.0, -1};
  return {a.value - b.value, 0};
}

double gap_restricted(const SaddleProblem& p, const CompactSet& z, std::span<const double> xp,
                      std::span<const double> yp) {
  const ExtValue gx = p.g.eval(xp);
  const ExtValue hy = p.h_conj.eval(yp);
  if (gx.infinite || hy.infinite) return INFINITY;
  return gx.value + hy.value + restricted_terms(p, z, matvec(p.A, xp), matvec_t(p.A, yp));
}

double gap_of_mean(const SaddleProblem& p, const CompactSet& z,
                   const std::vector<Vector>& xs, const std::vector<Vector>& ys) {
  if (xs.empty() || xs.size() != ys.size()) {
    throw std::invalid_argument("gap_of_mean needs matching, nonempty candidate lists");
  }
  const double m = static_cast<double>(xs.size());
  double separate = 0.0;
  Vector xm(p.d(), 0.0), ym(p.n(), 0.0);
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const ExtValue gx = p.g.eval(xs[s]);
    const ExtValue hy = p.h_conj.eval(ys[s]);
    if (gx.infinite || hy.infinite) return INFINITY;
    separate += (gx.value + hy.value) / m;
    for (std::size_t j = 0; j < p.d(); ++j) xm[j] += xs[s][j] / m;
    for (std::size_t i = 0; i < p.n(); ++i) ym[i] += ys[s][i] / m;
  }
  return separate + restricted_terms(p, z, matvec(p.A, xm), matvec_t(p.A, ym));
}

double case1_suboptimality(const SaddleProblem& p, std::span<const double> x) {
  const Reference& ref = need_reference(p);
  if (!p.h_primal || !ref.F_star) {
    throw std::invalid_argument(p.name + ": primal objective or F* unavailable");
  }
  const ExtValue f = primal_objective(p, x);
  if (f.infinite) return INFINITY;
  return f.value - *ref.F_star;
}

Case2Measures case2_measures(const SaddleProblem& p, std::span<const double> x) {
  const Reference& ref = need_reference(p);
  if (!p.constraint_set) throw std::invalid_argument(p.name + ": no constraint set");
  const ExtValue gx = p.g.eval(x);
  const ExtValue gs = p.g.eval(ref.x_star);
  Case2Measures out;
  out.g_gap_abs = gx.infinite || gs.infinite ? INFINITY : std::abs(gx.value - gs.value);
  const Vector ax = matvec(p.A, x);
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const Interval& c = (*p.constraint_set)[i];
    const double r = ax[i] - std::clamp(ax[i], c.lo, c.hi);
    s += r * r;
  }
  out.feas_dist = std::sqrt(s);
  return out;
}

double dist_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"gap_restricted", "F_subopt", "g_gap_abs",
                                                 "feas_dist",      "dist_x_sq", "dist_y_sq"};
  return names;
}

std::optional<double> metric_by_name(const MetricsRecord& r, const std::string& name) {
  if (name == "gap_restricted") return r.gap_restricted;
  if (name == "F_subopt") return r.F_subopt;
  if (name == "g_gap_abs") return r.g_gap_abs;
  if (name == "feas_dist") return r.feas_dist;
  if (name == "dist_x_sq") return r.dist_x_sq;
  if (name == "dist_y_sq") return r.dist_y_sq;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

MetricsRecord evaluate_metrics(const SaddleProblem& p, const CompactSet* z,
                               std::span<const double> x, std::span<const double> y,
                               std::size_t k, std::uint64_t cost) {
  MetricsRecord r;
  r.k = k;
  r.cost = cost;
  if (z) r.gap_restricted = gap_restricted(p, *z, x, y);
  if (p.reference) {
    r.dist_x_sq = dist_sq(x, p.reference->x_star);
    r.dist_y_sq = dist_sq(y, p.reference->y_star);
    if (p.h_primal && p.reference->F_star) r.F_subopt = case1_suboptimality(p, x);
    if (p.constraint_set) {
      const Case2Measures c = case2_measures(p, x);
      r.g_gap_abs = c.g_gap_abs;
      r.feas_dist = c.feas_dist;
    }
  }
  return r;
}

RateFit fit_rate(std::span<const double> ks, std::span<const double> values, FitMode mode,
                 double k_lo, double k_hi) {
  if (ks.size() != values.size()) throw std::invalid_argument("fit_rate: size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t t = 0; t < ks.size(); ++t) {
    if (ks[t] < k_lo || ks[t] > k_hi) continue;
    if (mode == FitMode::LogLog && !(ks[t] > 0)) continue;
    if (!(values[t] > 0) || !std::isfinite(values[t])) {
      throw std::invalid_argument("fit_rate: nonpositive or non-finite value at k = " +
                                  std::to_string(ks[t]));
    }
    xs.push_back(mode == FitMode::LogLog ? std::log(ks[t]) : ks[t]);
    ys.push_back(std::log(values[t]));
  }
  if (xs.size() < 5) throw std::invalid_argument("fit_rate: fewer than 5 points in window");
  const double m = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    mx += xs[t] / m;
    my += ys[t] / m;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    sxx += (xs[t] - mx) * (xs[t] - mx);
    sxy += (xs[t] - mx) * (ys[t] - my);
    syy += (ys[t] - my) * (ys[t] - my);
  }
  RateFit f;
  f.points = xs.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

double bound_case1(double sum_row_norms, double K, double gamma, double lipschitz_h,
                   double dist_x0_sq) {
  return 2.0 * sum_row_norms / (K * gamma * (1.0 - gamma)) *
         (4.0 * lipschitz_h * lipschitz_h + dist_x0_sq);
}

Case2Constants case2_constants(const SaddleProblem& p, std::span<const double> x0,
                               std::span<const double> y0) {
  const Reference& ref = need_reference(p);
  Case2Constants c;
  c.dx = std::sqrt(dist_sq(ref.x_star, x0));
  c.dy = std::sqrt(dist_sq(ref.y_star, y0));
  c.y0_norm = norm2(y0);
  c.ys_norm = norm2(ref.y_star);
  c.d_star = c.dx * c.dx + c.dy * c.dy;
  return c;
}

double bound_case2_objective(double sum_row_norms, double K, double gamma,
                             const Case2Constants& c) {
  const double lead = 8.0 * sum_row_norms / (K * gamma * (1.0 - gamma));
  return lead * ((c.dx + c.dy + c.y0_norm + c.ys_norm) * c.ys_norm + c.d_star +
                 c.y0_norm * c.y0_norm);
}

double bound_case2_feasibility(double sum_row_norms, double K, double gamma,
                               const Case2Constants& c) {
  const double lead = 8.0 * sum_row_norms / (K * gamma * (1.0 - gamma));
  return lead * (c.dx + c.dy + c.y0_norm + c.ys_norm);
}

double bound_lambda_restart(std::size_t n, double max_row_norm, double d_z, double Lambda_K,
                            double gamma) {
  return 6.0 * static_cast<double>(n) * max_row_norm * d_z / (Lambda_K * gamma * (1.0 - gamma));
}

double bound_sparse_convex(std::size_t n, double max_row_norm, double d_z, double K) {
  return static_cast<double>(n) * max_row_norm * d_z / K;
}

double bound_scc(std::size_t n, double max_row_norm, double mu_g, double d_star, double K) {
  const double nd = static_cast<double>(n);
  const double r = max_row_norm / mu_g;
  return 9.0 * nd * nd / (K * K) * std::max(1.0, r * r) * d_star;
}

double bound_csc(std::size_t n, double max_row_norm, double mu_h, double d_star, double K) {
  const double nd = static_cast<double>(n);
  const double r = max_row_norm / mu_h;
  return 36.0 * nd * nd / (K * K) * std::max(r * r, 1.0) * d_star;
}

double bound_erm_lipschitz(std::size_t n, double lipschitz_f, double max_row_norm, double d_x,
                           double K) {
  return std::sqrt(static_cast<double>(n)) * lipschitz_f * max_row_norm * d_x / K;
}

ScscEnergy scsc_energy(const SaddleProblem& p, const StepSchedule& s, std::span<const double> x,
                       std::span<const double> y) {
  const Reference& ref = need_reference(p);
  const double nd = static_cast<double>(p.n());
  ScscEnergy e;
  e.min_weight = INFINITY;
  for (std::size_t j = 0; j < p.d(); ++j) {
    const double w = (1.0 / s.primal_step(j) + p.mu_g) / p.A.pi(j) - p.mu_g;
    e.value += w * (x[j] - ref.x_star[j]) * (x[j] - ref.x_star[j]);
    e.min_weight = std::min(e.min_weight, w);
  }
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double w = (1.0 / s.dual_step(i) + p.mu_h) * nd - p.mu_h;
    e.value += w * (y[i] - ref.y_star[i]) * (y[i] - ref.y_star[i]);
    e.min_weight = std::min(e.min_weight, w);
  }
  return e;
}

}  // namespace purecd
