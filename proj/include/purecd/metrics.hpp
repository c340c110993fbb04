#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "purecd/problems.hpp"
#include "purecd/schedules.hpp"

namespace purecd {

/// Extended value with a sign for the infinite case: +1 is +inf, -1 is -inf.
struct SignedValue {
  double value = 0.0;
  int infinite = 0;
};

SignedValue lagrangian(const SaddleProblem& p, std::span<const double> x,
                       std::span<const double> y);

/// G(x', y', x, y) = L(x', y) - L(x, y').
SignedValue g_value(const SaddleProblem& p, std::span<const double> xp,
                    std::span<const double> yp, std::span<const double> x,
                    std::span<const double> y);

/// max over (x, y) in Z of G(x', y', x, y). Separates into d + n scalar
/// maximizations, each in closed form. +inf if x' or y' is outside the domains.
double gap_restricted(const SaddleProblem& p, const CompactSet& z, std::span<const double> xp,
                      std::span<const double> yp);

/// max over Z of the seed-average of G(x'_s, y'_s, x, y). G is affine in the
/// candidate-dependent terms, so this is exact for the catalog families.
double gap_of_mean(const SaddleProblem& p, const CompactSet& z,
                   const std::vector<Vector>& xs, const std::vector<Vector>& ys);

/// F(x) - F*; requires h_primal and reference->F_star.
double case1_suboptimality(const SaddleProblem& p, std::span<const double> x);

struct Case2Measures {
  double g_gap_abs = 0.0;
  double feas_dist = 0.0;
};
/// |g(x) - g(x*)| and ||Ax - P_C(Ax)||; requires constraint_set and reference.
Case2Measures case2_measures(const SaddleProblem& p, std::span<const double> x);

double dist_sq(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

struct MetricsRecord {
  std::size_t k = 0;
  std::uint64_t cost = 0;
  std::optional<double> gap_restricted;
  std::optional<double> F_subopt;
  std::optional<double> g_gap_abs;
  std::optional<double> feas_dist;
  std::optional<double> dist_x_sq;
  std::optional<double> dist_y_sq;
};

/// Metric names in CSV column order.
const std::vector<std::string>& metric_names();
std::optional<double> metric_by_name(const MetricsRecord& r, const std::string& name);

/// Fill every metric the problem supports; gap only when z is given.
MetricsRecord evaluate_metrics(const SaddleProblem& p, const CompactSet* z,
                               std::span<const double> x, std::span<const double> y,
                               std::size_t k, std::uint64_t cost);

enum class FitMode { LogLog, Linear };

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least squares of log(value) against log(k) (LogLog) or against k (Linear)
/// for k in [k_lo, k_hi]. Needs >= 5 points, all values > 0.
RateFit fit_rate(std::span<const double> ks, std::span<const double> values, FitMode mode,
                 double k_lo, double k_hi);

// ---- rate bounds ---------------------------------------------------------

/// Dense importance sampling, ERM case: 2 sum||A_i|| / (K g (1-g)) (4 L_h^2 + ||x*-x0||^2).
double bound_case1(double sum_row_norms, double K, double gamma, double lipschitz_h,
                   double dist_x0_sq);

struct Case2Constants {
  double dx = 0.0;        // ||x* - x0||
  double dy = 0.0;        // ||y* - y0||
  double y0_norm = 0.0;   // ||y0||
  double ys_norm = 0.0;   // ||y*||
  double d_star = 0.0;    // ||x* - x0||^2 + ||y* - y0||^2
};
Case2Constants case2_constants(const SaddleProblem& p, std::span<const double> x0,
                               std::span<const double> y0);
/// Bound on E|g(x^K) - g(x*)|.
double bound_case2_objective(double sum_row_norms, double K, double gamma,
                             const Case2Constants& c);
/// Bound on E dist(Ax^K, C).
double bound_case2_feasibility(double sum_row_norms, double K, double gamma,
                               const Case2Constants& c);

/// 6 n max||A_i|| D_Z / (Lambda_K g (1-g)).
double bound_lambda_restart(std::size_t n, double max_row_norm, double d_z, double Lambda_K,
                            double gamma);
/// n max||A_i|| D_Z / K for the random output iterate.
double bound_sparse_convex(std::size_t n, double max_row_norm, double d_z, double K);
/// 9 n^2 / K^2 max(1, max||A_i||^2 / mu_g^2) D*.
double bound_scc(std::size_t n, double max_row_norm, double mu_g, double d_star, double K);
/// 36 n^2 / K^2 max(max||A_i||^2 / mu_h^2, 1) D*.
double bound_csc(std::size_t n, double max_row_norm, double mu_h, double d_star, double K);
/// ERM form sqrt(n) L_f max||a_i|| D_x / K.
double bound_erm_lipschitz(std::size_t n, double lipschitz_f, double max_row_norm, double d_x,
                           double K);

/// Weighted distance the linear-rate analysis contracts:
///   sum_j ((1/tau_j + mu_g)/pi_j - mu_g)(x_j - x*_j)^2
/// + sum_i ((1/sigma_i + mu_h) n - mu_h)(y_i - y*_i)^2.
struct ScscEnergy {
  double value = 0.0;
  double min_weight = 0.0;  // so that ||.||^2 <= value / min_weight
};
ScscEnergy scsc_energy(const SaddleProblem& p, const StepSchedule& s, std::span<const double> x,
                       std::span<const double> y);

}  // namespace purecd
