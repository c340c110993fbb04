#include "purecd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

namespace purecd {

namespace {

double inf_norm_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

void SaddleProblem::validate() const {
  if (g.size() != d()) {
    throw std::invalid_argument(name + ": g has " + std::to_string(g.size()) +
                                " components, expected d = " + std::to_string(d()));
  }
  if (h_conj.size() != n()) {
    throw std::invalid_argument(name + ": h_conj has " + std::to_string(h_conj.size()) +
                                " components, expected n = " + std::to_string(n()));
  }
  if (h_primal && h_primal->size() != n()) {
    throw std::invalid_argument(name + ": h_primal length mismatch");
  }
  if (constraint_set && constraint_set->size() != n()) {
    throw std::invalid_argument(name + ": constraint_set length mismatch");
  }
  if (mu_g != g.mu() || mu_h != h_conj.mu()) {
    throw std::invalid_argument(name + ": moduli disagree with the functions");
  }
  if (reference) {
    if (reference->x_star.size() != d() || reference->y_star.size() != n()) {
      throw std::invalid_argument(name + ": reference has wrong dimensions");
    }
  }
}

SaddleProblem make_problem(std::string name, SparseMatrix a, SeparableFunction g,
                           SeparableFunction h_conj, std::optional<SeparableFunction> h_primal,
                           std::optional<std::vector<Interval>> constraint_set) {
  SaddleProblem p;
  p.name = std::move(name);
  p.A = std::move(a);
  p.g = std::move(g);
  p.h_conj = std::move(h_conj);
  p.h_primal = std::move(h_primal);
  p.constraint_set = std::move(constraint_set);
  p.mu_g = p.g.mu();
  p.mu_h = p.h_conj.mu();
  p.validate();
  return p;
}

CompactSet CompactSet::centered(std::span<const double> xc, std::span<const double> yc,
                                double radius) {
  if (!(radius > 0) || !std::isfinite(radius)) {
    throw std::invalid_argument("compact set radius must be positive and finite");
  }
  CompactSet z;
  for (double v : xc) z.x.push_back({v - radius, v + radius});
  for (double v : yc) z.y.push_back({v - radius, v + radius});
  return z;
}

bool CompactSet::contains(std::span<const double> xv, std::span<const double> yv) const {
  for (std::size_t j = 0; j < x.size(); ++j)
    if (xv[j] < x[j].lo || xv[j] > x[j].hi) return false;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (yv[i] < y[i].lo || yv[i] > y[i].hi) return false;
  return true;
}

CompactSet CompactSet::clipped_to(const SaddleProblem& p) const {
  CompactSet z = *this;
  auto clip = [](Interval& iv, const ScalarConvexFn& f) {
    iv.lo = std::max(iv.lo, f.dom_lo());
    iv.hi = std::min(iv.hi, f.dom_hi());
    if (iv.lo > iv.hi) throw std::invalid_argument("compact set misses a function domain");
  };
  for (std::size_t j = 0; j < z.x.size(); ++j) clip(z.x[j], p.g[j]);
  for (std::size_t i = 0; i < z.y.size(); ++i) clip(z.y[i], p.h_conj[i]);
  return z;
}

double CompactSet::diameter_sq(std::span<const double> x0, std::span<const double> y0) const {
  double s = 0.0;
  auto far = [](const Interval& iv, double c) {
    const double a = iv.lo - c, b = iv.hi - c;
    return std::max(a * a, b * b);
  };
  for (std::size_t j = 0; j < x.size(); ++j) s += far(x[j], x0[j]);
  for (std::size_t i = 0; i < y.size(); ++i) s += far(y[i], y0[i]);
  return s;
}

CompactSet default_compact_set(const SaddleProblem& p, std::span<const double> x0,
                               std::span<const double> y0) {
  if (!p.reference) throw std::invalid_argument(p.name + ": default compact set needs a reference");
  const auto& r = *p.reference;
  const double radius =
      2.0 * (1.0 + inf_norm_diff(x0, r.x_star) + inf_norm_diff(y0, r.y_star));
  return CompactSet::centered(r.x_star, r.y_star, radius).clipped_to(p);
}

double dist_to_reference_sq(const SaddleProblem& p, std::span<const double> x0,
                            std::span<const double> y0) {
  if (!p.reference) throw std::invalid_argument(p.name + ": no reference");
  double s = 0.0;
  for (std::size_t j = 0; j < p.d(); ++j) s += std::pow(p.reference->x_star[j] - x0[j], 2);
  for (std::size_t i = 0; i < p.n(); ++i) s += std::pow(p.reference->y_star[i] - y0[i], 2);
  return s;
}

SparseMatrix random_matrix(const MatrixSpec& spec, std::uint64_t seed) {
  if (spec.n == 0 || spec.d == 0) throw std::invalid_argument("matrix dimensions must be positive");
  if (!(spec.density > 0 && spec.density <= 1)) {
    throw std::invalid_argument("density must lie in (0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = spec.n, d = spec.d;
  std::vector<double> dense(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (spec.density >= 1.0 || coin(rng) < spec.density) dense[i * d + j] = gauss(rng);

  auto fill = [&](std::size_t i, std::size_t j) {
    double v = 0.0;
    while (v == 0.0) v = gauss(rng);
    dense[i * d + j] = v;
  };
  std::uniform_int_distribution<std::size_t> pick_col(0, d - 1), pick_row(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < d && !any; ++j) any = dense[i * d + j] != 0.0;
    if (!any) fill(i, pick_col(rng));
  }
  for (std::size_t j = 0; j < d; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < n && !any; ++i) any = dense[i * d + j] != 0.0;
    if (!any) fill(pick_row(rng), j);
  }
  if (spec.row_normalize) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += dense[i * d + j] * dense[i * d + j];
      s = std::sqrt(s);
      for (std::size_t j = 0; j < d; ++j) dense[i * d + j] /= s;
    }
  }
  return SparseMatrix::from_dense(n, d, dense);
}

SaddleProblem make_constrained_qp(SparseMatrix a, Vector g_quad, Vector g_lin, Vector b) {
  const std::size_t n = a.rows(), d = a.cols();
  if (g_quad.size() != d || g_lin.size() != d || b.size() != n) {
    throw std::invalid_argument("constrained QP: parameter length mismatch");
  }
  std::vector<ScalarConvexFn> g, hc, hp;
  std::vector<Interval> c;
  for (std::size_t j = 0; j < d; ++j) g.push_back(ScalarConvexFn::quadratic(g_quad[j], g_lin[j]));
  for (std::size_t i = 0; i < n; ++i) {
    hp.push_back(ScalarConvexFn::point(b[i]));
    hc.push_back(conjugate(hp.back()));
    c.push_back({b[i], b[i]});
  }
  return make_problem("constrained_qp", std::move(a), SeparableFunction(std::move(g)),
                      SeparableFunction(std::move(hc)), SeparableFunction(std::move(hp)),
                      std::move(c));
}

SaddleProblem gen_constrained_qp(std::size_t n, std::size_t d, std::uint64_t seed,
                                 double density, bool row_normalize) {
  auto a = random_matrix({n, d, density, row_normalize}, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> quad(1.0, 2.0);
  std::normal_distribution<double> gauss;
  Vector aq(d), cl(d), xf(d);
  for (std::size_t j = 0; j < d; ++j) {
    aq[j] = quad(rng);
    cl[j] = gauss(rng);
    xf[j] = gauss(rng);
  }
  Vector b = matvec(a, xf);
  return make_constrained_qp(std::move(a), std::move(aq), std::move(cl), std::move(b));
}

SaddleProblem make_erm_hinge(SparseMatrix a, Vector labels, double reg) {
  const std::size_t n = a.rows(), d = a.cols();
  if (labels.size() != n) throw std::invalid_argument("hinge ERM: label length mismatch");
  if (reg < 0) throw std::invalid_argument("hinge ERM: reg must be >= 0");
  std::vector<ScalarConvexFn> hc, hp;
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 0.0) throw std::invalid_argument("hinge ERM: labels must be nonzero");
    hp.push_back(ScalarConvexFn::hinge(labels[i], w));
    hc.push_back(conjugate(hp.back()));
  }
  auto g = reg > 0 ? SeparableFunction::uniform(d, ScalarConvexFn::quadratic(reg))
                   : SeparableFunction::uniform(d, ScalarConvexFn::zero());
  return make_problem("erm_hinge", std::move(a), std::move(g), SeparableFunction(std::move(hc)),
                      SeparableFunction(std::move(hp)));
}

SaddleProblem gen_erm_hinge(std::size_t n, std::size_t d, std::uint64_t seed, double reg,
                            double density, bool row_normalize) {
  auto a = random_matrix({n, d, density, row_normalize}, seed);
  std::mt19937_64 rng(seed ^ 0x7f4a7c159e3779b9ULL);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Vector w(d);
  for (auto& v : w) v = gauss(rng);
  Vector margin = matvec(a, w);
  Vector labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = margin[i] >= 0 ? 1.0 : -1.0;
    if (coin(rng) < 0.1) labels[i] = -labels[i];
  }
  return make_erm_hinge(std::move(a), std::move(labels), reg);
}

SaddleProblem make_lasso(SparseMatrix a, Vector b, double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("lasso: lambda must be positive");
  const std::size_t n = a.rows(), d = a.cols();
  if (b.size() != n) throw std::invalid_argument("lasso: b length mismatch");
  std::vector<ScalarConvexFn> hc, hp;
  for (std::size_t i = 0; i < n; ++i) {
    hp.push_back(ScalarConvexFn::shifted_square(b[i]));
    hc.push_back(conjugate(hp.back()));
  }
  return make_problem("lasso", std::move(a),
                      SeparableFunction::uniform(d, ScalarConvexFn::abs_value(lambda)),
                      SeparableFunction(std::move(hc)), SeparableFunction(std::move(hp)));
}

SaddleProblem gen_lasso(std::size_t n, std::size_t d, std::uint64_t seed, double lambda,
                        double density, bool row_normalize) {
  auto a = random_matrix({n, d, density, row_normalize}, seed);
  std::mt19937_64 rng(seed ^ 0x2545f4914f6cdd1dULL);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Vector xt(d, 0.0);
  for (auto& v : xt)
    if (coin(rng) < 0.2) v = gauss(rng);
  Vector b = matvec(a, xt);
  for (auto& v : b) v += 0.1 * gauss(rng);
  return make_lasso(std::move(a), std::move(b), lambda);
}

SaddleProblem gen_ridge(std::size_t n, std::size_t d, std::uint64_t seed, double density,
                        double mu_g, double mu_h, bool row_normalize) {
  if (!(mu_g > 0 && mu_h > 0)) throw std::invalid_argument("ridge: moduli must be positive");
  auto a = random_matrix({n, d, density, row_normalize}, seed);
  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
  std::normal_distribution<double> gauss;
  std::vector<ScalarConvexFn> hc, hp;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = gauss(rng);
    hc.push_back(ScalarConvexFn::quadratic(mu_h, b));
    hp.push_back(conjugate(hc.back()));
  }
  return make_problem("ridge", std::move(a),
                      SeparableFunction::uniform(d, ScalarConvexFn::quadratic(mu_g)),
                      SeparableFunction(std::move(hc)), SeparableFunction(std::move(hp)));
}

SaddleProblem gen_bilinear_toy() {
  std::vector<Triplet> t{{0, 0, 1.0}};
  auto p = make_problem("bilinear_toy", SparseMatrix::build(t, 1, 1),
                        SeparableFunction::uniform(1, ScalarConvexFn::zero()),
                        SeparableFunction::uniform(1, ScalarConvexFn::zero()),
                        SeparableFunction::uniform(1, ScalarConvexFn::point(0.0)));
  p.reference = Reference{{0.0}, {0.0}, 0.0, "closed_form", 0.0};
  return p;
}

ExtValue primal_objective(const SaddleProblem& p, std::span<const double> x) {
  if (!p.h_primal) throw std::invalid_argument(p.name + ": primal objective needs h_primal");
  Vector ax = matvec(p.A, x);
  ExtValue h = p.h_primal->eval(ax), g = p.g.eval(x);
  if (h.infinite || g.infinite) return ExtValue::inf();
  return {h.value + g.value, false};
}

std::uint64_t problem_hash(const SaddleProblem& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= bytes[k];
      h *= 0x100000001b3ULL;
    }
  };
  auto mix_u64 = [&](std::uint64_t v) { mix(&v, sizeof v); };
  auto mix_f = [&](double v) { mix(&v, sizeof v); };
  mix_u64(p.n());
  mix_u64(p.d());
  for (auto v : p.A.row_ptr()) mix_u64(v);
  for (auto v : p.A.col_idx()) mix_u64(v);
  for (auto v : p.A.values()) mix_f(v);
  auto mix_fn = [&](const SeparableFunction& f) {
    for (const auto& c : f.components()) {
      mix_u64(static_cast<std::uint64_t>(c.family()));
      for (double v : {c.a(), c.b(), c.c(), c.lo(), c.hi(), c.lambda(), c.scale()}) mix_f(v);
    }
  };
  mix_fn(p.g);
  mix_fn(p.h_conj);
  return h;
}

}  // namespace purecd
