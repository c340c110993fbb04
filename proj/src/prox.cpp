#include "purecd/prox.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace purecd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void require_scale(double s) { require(s > 0 && std::isfinite(s), "scale must be positive"); }

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::Zero: return "zero";
    case Family::Quadratic: return "quadratic";
    case Family::AbsValue: return "abs";
    case Family::Interval: return "interval";
    case Family::Point: return "point";
    case Family::LinearInterval: return "linear_interval";
    case Family::ShiftedSquare: return "shifted_square";
    case Family::Hinge: return "hinge";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  for (Family f : {Family::Zero, Family::Quadratic, Family::AbsValue, Family::Interval,
                   Family::Point, Family::LinearInterval, Family::ShiftedSquare,
                   Family::Hinge}) {
    if (name == family_name(f)) return f;
  }
  throw UnsupportedFamily("unknown function family '" + name + "'");
}

ScalarConvexFn ScalarConvexFn::zero() { return {}; }

ScalarConvexFn ScalarConvexFn::quadratic(double a, double b, double scale) {
  require(a >= 0, "quadratic: a must be >= 0");
  require_scale(scale);
  ScalarConvexFn f;
  f.family_ = Family::Quadratic;
  f.a_ = a;
  f.b_ = b;
  f.scale_ = scale;
  return f;
}

ScalarConvexFn ScalarConvexFn::abs_value(double lambda, double scale) {
  require(lambda >= 0, "abs: lambda must be >= 0");
  require_scale(scale);
  ScalarConvexFn f;
  f.family_ = Family::AbsValue;
  f.lambda_ = lambda;
  f.scale_ = scale;
  return f;
}

ScalarConvexFn ScalarConvexFn::interval(double lo, double hi) {
  require(lo <= hi, "interval: empty domain (lo > hi)");
  ScalarConvexFn f;
  f.family_ = Family::Interval;
  f.lo_ = lo;
  f.hi_ = hi;
  return f;
}

ScalarConvexFn ScalarConvexFn::point(double b) {
  require(std::isfinite(b), "point: b must be finite");
  ScalarConvexFn f;
  f.family_ = Family::Point;
  f.b_ = b;
  f.lo_ = b;
  f.hi_ = b;
  return f;
}

ScalarConvexFn ScalarConvexFn::linear_interval(double c, double lo, double hi, double scale) {
  require(lo <= hi, "linear_interval: empty domain (lo > hi)");
  require_scale(scale);
  ScalarConvexFn f;
  f.family_ = Family::LinearInterval;
  f.c_ = c;
  f.lo_ = lo;
  f.hi_ = hi;
  f.scale_ = scale;
  return f;
}

ScalarConvexFn ScalarConvexFn::shifted_square(double b, double scale) {
  require_scale(scale);
  ScalarConvexFn f;
  f.family_ = Family::ShiftedSquare;
  f.b_ = b;
  f.scale_ = scale;
  return f;
}

ScalarConvexFn ScalarConvexFn::hinge(double b, double scale) {
  require_scale(scale);
  ScalarConvexFn f;
  f.family_ = Family::Hinge;
  f.b_ = b;
  f.scale_ = scale;
  return f;
}

ExtValue ScalarConvexFn::eval(double t) const {
  if (!in_domain(t)) return ExtValue::inf();
  double base = 0.0;
  switch (family_) {
    case Family::Zero:
    case Family::Interval:
    case Family::Point: return {0.0, false};
    case Family::Quadratic: base = 0.5 * a_ * t * t + b_ * t; break;
    case Family::AbsValue: base = lambda_ * std::abs(t); break;
    case Family::LinearInterval: base = c_ * t; break;
    case Family::ShiftedSquare: base = 0.5 * (t - b_) * (t - b_); break;
    case Family::Hinge: base = std::max(0.0, 1.0 - b_ * t); break;
  }
  return {scale_ * base, false};
}

double ScalarConvexFn::mu() const {
  switch (family_) {
    case Family::Quadratic: return scale_ * a_;
    case Family::ShiftedSquare: return scale_;
    default: return 0.0;
  }
}

double ScalarConvexFn::dom_lo() const {
  switch (family_) {
    case Family::Interval:
    case Family::Point:
    case Family::LinearInterval: return lo_;
    default: return -kInf;
  }
}

double ScalarConvexFn::dom_hi() const {
  switch (family_) {
    case Family::Interval:
    case Family::Point:
    case Family::LinearInterval: return hi_;
    default: return kInf;
  }
}

std::optional<double> ScalarConvexFn::lipschitz() const {
  double lo = dom_lo(), hi = dom_hi();
  if (!std::isfinite(lo) || !std::isfinite(hi)) return std::nullopt;
  return std::max(std::abs(lo), std::abs(hi));
}

std::vector<double> ScalarConvexFn::kinks() const {
  switch (family_) {
    case Family::AbsValue: return {0.0};
    case Family::Hinge:
      if (b_ != 0.0) return {1.0 / b_};
      return {};
    default: return {};
  }
}

double prox(const ScalarConvexFn& f, double tau, double v) {
  if (!(tau > 0)) throw std::invalid_argument("prox: step must be positive");
  // prox of s*f with step tau is prox of f with step s*tau.
  const double t = tau * f.scale();
  switch (f.family()) {
    case Family::Zero: return v;
    case Family::Quadratic: return (v - t * f.b()) / (1.0 + t * f.a());
    case Family::AbsValue: {
      const double thr = t * f.lambda();
      if (v > thr) return v - thr;
      if (v < -thr) return v + thr;
      return 0.0;
    }
    case Family::Interval: return std::clamp(v, f.lo(), f.hi());
    case Family::Point: return f.b();
    case Family::LinearInterval: return std::clamp(v - t * f.c(), f.lo(), f.hi());
    case Family::ShiftedSquare: return (v + t * f.b()) / (1.0 + t);
    case Family::Hinge: {
      const double b = f.b();
      if (b == 0.0) return v;
      // Active piece (b u < 1): slope -b, so the candidate moves by t*b.
      const double active = v + t * b;
      if (b * active < 1.0) return active;
      if (b * v > 1.0) return v;
      return 1.0 / b;
    }
  }
  return v;
}

ScalarConvexFn conjugate(const ScalarConvexFn& f) {
  const double s = f.scale();
  switch (f.family()) {
    case Family::Zero: return ScalarConvexFn::point(0.0);
    case Family::Quadratic: {
      const double a = s * f.a(), b = s * f.b();
      if (a == 0.0) return ScalarConvexFn::point(b);
      return ScalarConvexFn::shifted_square(b, 1.0 / a);
    }
    case Family::AbsValue: {
      const double r = s * f.lambda();
      return ScalarConvexFn::interval(-r, r);
    }
    case Family::Interval:
      if (f.lo() == -f.hi()) return ScalarConvexFn::abs_value(f.hi());
      break;
    case Family::Point: return ScalarConvexFn::quadratic(0.0, f.b());
    case Family::ShiftedSquare: return ScalarConvexFn::quadratic(1.0 / s, f.b());
    case Family::Hinge: {
      const double b = f.b();
      if (b == 0.0) break;
      if (b > 0) return ScalarConvexFn::linear_interval(1.0 / b, -s * b, 0.0);
      return ScalarConvexFn::linear_interval(1.0 / b, 0.0, -s * b);
    }
    case Family::LinearInterval: {
      // c t on an interval with one endpoint at 0 is a hinge conjugate.
      const double c = s * f.c();
      const bool left = f.hi() == 0.0 && f.lo() < 0.0 && c > 0.0;
      const bool right = f.lo() == 0.0 && f.hi() > 0.0 && c < 0.0;
      if ((left || right) && std::isfinite(f.lo()) && std::isfinite(f.hi())) {
        return ScalarConvexFn::hinge(1.0 / c, (f.hi() - f.lo()) * std::abs(c));
      }
      break;
    }
  }
  throw UnsupportedFamily(std::string("conjugate of '") + family_name(f.family()) +
                          "' with these parameters is not in the catalog");
}

ConjugatePair conjugate_pair(const ScalarConvexFn& primal) {
  return {primal, conjugate(primal)};
}

double restricted_conjugate(const ScalarConvexFn& f, double s, double lo, double hi) {
  const double L = std::max(lo, f.dom_lo());
  const double U = std::min(hi, f.dom_hi());
  if (!(L <= U)) throw std::invalid_argument("restricted_conjugate: box misses the domain");
  if (!std::isfinite(L) || !std::isfinite(U)) {
    throw std::invalid_argument("restricted_conjugate: box must be bounded");
  }
  auto phi = [&](double t) { return s * t - f.eval(t).value; };
  std::vector<double> cand{L, U};
  for (double k : f.kinks()) cand.push_back(std::clamp(k, L, U));
  const double sc = f.scale();
  switch (f.family()) {
    case Family::Quadratic:
      if (f.a() > 0) cand.push_back(std::clamp((s - sc * f.b()) / (sc * f.a()), L, U));
      break;
    case Family::ShiftedSquare: cand.push_back(std::clamp(f.b() + s / sc, L, U)); break;
    default: break;
  }
  double best = -kInf;
  for (double t : cand) best = std::max(best, phi(t));
  return best;
}

double maximize_concave_1d(const std::function<double(double)>& phi, double lo, double hi,
                           double tol, int max_iter) {
  double a = lo, b = hi;
  for (int it = 0; it < max_iter && b - a > tol; ++it) {
    const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (phi(m1) < phi(m2)) a = m1;
    else b = m2;
  }
  return std::max({phi(lo), phi(hi), phi(0.5 * (a + b))});
}

SeparableFunction::SeparableFunction(std::vector<ScalarConvexFn> components)
    : comps_(std::move(components)) {
  mu_ = comps_.empty() ? 0.0 : kInf;
  for (const auto& c : comps_) mu_ = std::min(mu_, c.mu());
}

SeparableFunction SeparableFunction::uniform(std::size_t m, const ScalarConvexFn& f) {
  return SeparableFunction(std::vector<ScalarConvexFn>(m, f));
}

ExtValue SeparableFunction::eval(std::span<const double> x) const {
  if (x.size() != comps_.size()) throw std::invalid_argument("eval: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    ExtValue e = comps_[j].eval(x[j]);
    if (e.infinite) return ExtValue::inf();
    s += e.value;
  }
  return {s, false};
}

Vector SeparableFunction::prox_diag(std::span<const double> taus,
                                    std::span<const double> v) const {
  if (taus.size() != comps_.size() || v.size() != comps_.size()) {
    throw std::invalid_argument("prox_diag: length mismatch");
  }
  Vector out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = prox(comps_[j], taus[j], v[j]);
  return out;
}

Vector SeparableFunction::prox_scalar(double tau, std::span<const double> v) const {
  if (v.size() != comps_.size()) throw std::invalid_argument("prox_scalar: length mismatch");
  Vector out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = prox(comps_[j], tau, v[j]);
  return out;
}

void SeparableFunction::prox_subset(std::span<const double> taus, std::span<const double> v,
                                    std::span<const std::size_t> subset,
                                    std::span<double> out) const {
  for (std::size_t j : subset) out[j] = prox(comps_[j], taus[j], v[j]);
}

std::optional<double> SeparableFunction::lipschitz() const {
  double s = 0.0;
  for (const auto& c : comps_) {
    auto l = c.lipschitz();
    if (!l) return std::nullopt;
    s += *l * *l;
  }
  return std::sqrt(s);
}

}  // namespace purecd
