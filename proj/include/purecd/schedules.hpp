#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "purecd/sparse_matrix.hpp"

namespace purecd {

enum class Regime {
  DenseImportance,  // dense PURE-CD, p_i proportional to ||A_i||
  LambdaRestart,    // dense PURE-CD, uniform p, lambda_k-scaled steps, deterministic first step
  SparseConvex,     // sparse PURE-CD, convex-concave
  SCSC,             // sparse PURE-CD, both sides strongly convex
  SCC,              // sparse PURE-CD, g strongly convex (evolving steps)
  CSC,              // sparse PURE-CD, h* strongly convex (evolving steps)
  PDHGBaseline,     // scalar steps for PDHG / GDA
};

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

/// dense PURE-CD or 2 steps, or scalar full-vector steps.
bool is_dense_regime(Regime r);
bool is_sparse_regime(Regime r);

class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Outcome of re-checking a regime's step-size inequality.
struct StepCheck {
  bool ok = true;
  double worst_margin = 0.0;  // >= 0 when satisfied (up to tolerance)
  std::string detail;
};

/// Per-iteration step parameters for one run. Constant regimes precompute
/// their vectors. Evolving regimes (SCC, CSC) keep only the scalar
/// recursions and compute per-coordinate values on demand, so an iteration
/// touching |J(i)| coordinates costs O(|J(i)|).
///
/// Two extrapolation conventions are in use. dense PURE-CD multiplies
/// A_i^T (y_{k+1} - y_k) by tau_k theta / p_i; sparse PURE-CD multiplies entry j
/// by tau_k^(j) theta_k^(j). extrapolation(j, i) returns the right factor for
/// the regime.
class StepSchedule {
 public:
  static StepSchedule dense_importance(const SparseMatrix& a, double gamma = 0.99);
  static StepSchedule lambda_restart(const SparseMatrix& a, double gamma = 0.99);
  static StepSchedule sparse_convex(const SparseMatrix& a);
  static StepSchedule scsc(const SparseMatrix& a, double mu_g, double mu_h);
  static StepSchedule scc(const SparseMatrix& a, double mu_g);
  static StepSchedule csc(const SparseMatrix& a, double mu_h);
  static StepSchedule pdhg_baseline(const SparseMatrix& a, double gamma = 0.99);

  /// sparse PURE-CD schedule reproducing a uniform-p dense PURE-CD schedule on a
  /// dense matrix: tau^(j) = tau, theta^(j) = theta / p.
  static StepSchedule lift_to_sparse(const StepSchedule& dense);

  Regime regime() const { return regime_; }
  double gamma() const { return gamma_; }
  std::size_t k() const { return k_; }
  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }

  double primal_step(std::size_t j) const;
  double dual_step(std::size_t i) const;
  double theta(std::size_t j) const;
  double extrapolation(std::size_t j, std::size_t i) const;

  const Vector& probabilities() const { return p_; }
  bool uniform_sampling() const { return uniform_; }

  /// Move to the next iteration's parameters.
  void advance();

  // LambdaRestart bookkeeping.
  double lambda() const { return lambda_cur_; }
  static double lambda_sequence(std::size_t n, std::size_t k);
  double lambda_at(std::size_t k) const { return lambda_sequence(n_, k); }
  /// Lambda_K = sum_{k<K} lambda_k.
  double Lambda(std::size_t K) const;
  double init_primal_step() const { return tau_scalar_; }
  double init_dual_step() const { return init_sigma_; }

  // Evolving-regime scalars (tilde tau, sigma_k or tilde sigma).
  double tilde_tau() const { return ttau_; }
  double tilde_sigma() const { return tsig_; }
  double sigma_scalar() const { return sig_; }

  /// SCSC contraction constant c = 1 + 1/(n - 1 + n max kappa).
  double predicted_contraction() const { return contraction_; }

  /// Re-check the regime's inequality at the current k.
  StepCheck validate(const SparseMatrix& a, double tol = 1e-9) const;

  /// Scalar steps for PDHG/GDA.
  double pdhg_tau() const { return tau_scalar_; }
  double pdhg_sigma() const { return init_sigma_; }

  /// Test hook: scale theta^(j) by (1 + eps) for one coordinate.
  void perturb_theta(std::size_t j, double eps);

 private:
  Regime regime_ = Regime::PDHGBaseline;
  double gamma_ = 0.99;
  std::size_t n_ = 0, d_ = 0, k_ = 0;
  Vector tau_, sigma_, theta_, p_, pi_;
  bool uniform_ = true;
  double tau_scalar_ = 0.0, init_sigma_ = 0.0;
  double theta_scalar_ = 1.0;
  double mu_g_ = 0.0, mu_h_ = 0.0;
  double ttau_ = 0.0, tsig_ = 0.0, sig_ = 0.0;
  double ttau0_sig0_ = 0.0;
  double contraction_ = 0.0;
  double lambda_cur_ = 1.0;
  Vector theta_perturb_;  // multiplicative, empty unless perturbed
};

/// First k with lambda_k = 1.
std::size_t lambda_ramp_length(std::size_t n);

/// Bounds (n-1) log(n-1) <= K_0 <= 1 + n log(n-1).
struct K0Bounds {
  double lower;
  double upper;
};
K0Bounds k0_bounds(std::size_t n);

/// alpha_{k+1} = alpha_k / sqrt(1 + alpha_k).
inline double acc_rate_next(double alpha) { return alpha / std::sqrt(1.0 + alpha); }

}  // namespace purecd
