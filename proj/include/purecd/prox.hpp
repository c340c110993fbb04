#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace purecd {

using Vector = std::vector<double>;

class UnsupportedFamily : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Value of an extended-real function. When infinite is set, value is
/// meaningless and callers must not do arithmetic with it.
struct ExtValue {
  double value = 0.0;
  bool infinite = false;

  static ExtValue inf() { return {0.0, true}; }
};

enum class Family {
  Zero,            // 0
  Quadratic,       // a/2 t^2 + b t
  AbsValue,        // lambda |t|
  Interval,        // indicator of [lo, hi]
  Point,           // indicator of {b}
  LinearInterval,  // c t + indicator of [lo, hi]
  ShiftedSquare,   // 1/2 (t - b)^2
  Hinge,           // max(0, 1 - b t)
};

const char* family_name(Family f);
Family family_from_name(const std::string& name);

/// One scalar closed convex function from a small catalog, times a positive
/// scale. Every family has a closed-form prox.
class ScalarConvexFn {
 public:
  static ScalarConvexFn zero();
  static ScalarConvexFn quadratic(double a, double b = 0.0, double scale = 1.0);
  static ScalarConvexFn abs_value(double lambda, double scale = 1.0);
  static ScalarConvexFn interval(double lo, double hi);
  static ScalarConvexFn point(double b);
  static ScalarConvexFn linear_interval(double c, double lo, double hi, double scale = 1.0);
  static ScalarConvexFn shifted_square(double b, double scale = 1.0);
  static ScalarConvexFn hinge(double b, double scale = 1.0);

  Family family() const { return family_; }
  double scale() const { return scale_; }
  // Raw parameters; which ones are meaningful depends on the family.
  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double lambda() const { return lambda_; }

  ExtValue eval(double t) const;
  /// Strong-convexity modulus.
  double mu() const;
  /// Closed domain [dom_lo, dom_hi] (possibly infinite ends).
  double dom_lo() const;
  double dom_hi() const;
  bool in_domain(double t) const { return t >= dom_lo() && t <= dom_hi(); }
  /// sup |t| over the domain when bounded. Read as the Lipschitz constant of
  /// the primal function when this object is a conjugate.
  std::optional<double> lipschitz() const;

  /// Points where the function is not differentiable inside its domain.
  std::vector<double> kinks() const;

  bool operator==(const ScalarConvexFn&) const = default;

 private:
  Family family_ = Family::Zero;
  double a_ = 0, b_ = 0, c_ = 0, lambda_ = 0;
  double lo_ = -std::numeric_limits<double>::infinity();
  double hi_ = std::numeric_limits<double>::infinity();
  double scale_ = 1.0;
};

/// argmin_u f(u) + (u - v)^2 / (2 tau).
double prox(const ScalarConvexFn& f, double tau, double v);

/// Fenchel conjugate, when it lies in the catalog. Throws UnsupportedFamily
/// otherwise (e.g. asymmetric intervals, whose support function is not a
/// catalog member).
ScalarConvexFn conjugate(const ScalarConvexFn& f);

struct ConjugatePair {
  ScalarConvexFn primal;
  ScalarConvexFn conj;
};
ConjugatePair conjugate_pair(const ScalarConvexFn& primal);

/// max over t in [lo, hi] ∩ dom f of  s t - f(t). Closed form by evaluating
/// the finitely many candidate maximizers (endpoints, kinks, stationary
/// points). Throws if the intersection is empty.
double restricted_conjugate(const ScalarConvexFn& f, double s, double lo, double hi);

/// Ternary search for a concave function on [lo, hi], for callers outside the
/// catalog. Stops at width tol or after max_iter rounds.
double maximize_concave_1d(const std::function<double(double)>& phi, double lo, double hi,
                           double tol = 1e-10, int max_iter = 200);

/// Sum of scalar functions, one per coordinate.
class SeparableFunction {
 public:
  SeparableFunction() = default;
  explicit SeparableFunction(std::vector<ScalarConvexFn> components);
  static SeparableFunction uniform(std::size_t m, const ScalarConvexFn& f);

  std::size_t size() const { return comps_.size(); }
  const ScalarConvexFn& operator[](std::size_t j) const { return comps_[j]; }
  const std::vector<ScalarConvexFn>& components() const { return comps_; }
  double mu() const { return mu_; }

  ExtValue eval(std::span<const double> x) const;

  /// Coordinatewise prox with per-coordinate steps.
  Vector prox_diag(std::span<const double> taus, std::span<const double> v) const;
  /// Same, with one scalar step.
  Vector prox_scalar(double tau, std::span<const double> v) const;
  /// Compute out[j] = prox_{taus[j], f_j}(v[j]) only for j in subset; the
  /// rest of out is untouched.
  void prox_subset(std::span<const double> taus, std::span<const double> v,
                   std::span<const std::size_t> subset, std::span<double> out) const;

  /// Euclidean norm of the per-component lipschitz() values, if all exist.
  /// For a conjugate h*, this bounds the Lipschitz constant of h.
  std::optional<double> lipschitz() const;

 private:
  std::vector<ScalarConvexFn> comps_;
  double mu_ = 0.0;
};

}  // namespace purecd
