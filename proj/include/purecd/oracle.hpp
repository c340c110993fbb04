#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purecd/problems.hpp"
#include "purecd/schedules.hpp"
#include "purecd/solvers.hpp"

namespace purecd {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// True when every g_j is quadratic or zero and every h_i* is quadratic, so
/// the saddle point solves a linear system.
bool kkt_applicable(const SaddleProblem& p);

/// Solve [diag(a_g) A^T; A -diag(a_h)] [x; y] = [-c_g; b_h] by Gaussian
/// elimination with partial pivoting. Throws on a singular system or a
/// residual above 1e-10.
Reference solve_kkt(const SaddleProblem& p);

struct PdhgReferenceOptions {
  double target_gap = 1e-9;
  std::size_t max_iterations = 10'000'000;
  std::size_t check_every = 500;
};

/// Restarted PDHG. At each check the last iterate and the running average
/// are scored by the restricted gap over a unit box around each; the
/// average restarts from the better one once that score halves. Throws
/// OracleError when the budget runs out above target_gap.
Reference solve_reference_pdhg(const SaddleProblem& p, const PdhgReferenceOptions& opt = {});

/// KKT when applicable, else PDHG. Sets p.reference.
void attach_reference(SaddleProblem& p, const PdhgReferenceOptions& opt = {});

void write_reference_json(const SaddleProblem& p, const Reference& r, const std::string& path);
/// Throws OracleError when the stored hash does not match p.
Reference read_reference_json(const SaddleProblem& p, const std::string& path);

// ---- exact conditional expectations --------------------------------------

struct IdentityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

/// Enumerate every row choice for one step from `state` and compare the
/// conditional expectations with their closed forms:
///   dual:   E||y_{k+1} - y||^2_Phi = ||ybar - y||^2_{Phi P} + ||y_k - y||^2_{Phi (I - P)}
///   hconj:  E h*(y_{k+1}) = sum_i p_i h_i*(ybar_i) + (1 - p_i) h_i*(y_k,i)
///   primal: (sparse PURE-CD only) the B-weighted one-step expansion.
/// Agreement is relative: |lhs - rhs| <= tol max(1, |lhs|, |rhs|).
std::vector<IdentityCheck> enumerate_expectations(const SaddleProblem& p,
                                                  const StepSchedule& s,
                                                  const IterateState& state, Method method,
                                                  std::span<const double> x_ref,
                                                  std::span<const double> y_ref,
                                                  std::span<const double> primal_weights,
                                                  std::span<const double> dual_weights,
                                                  double tol = 1e-12);

/// Largest |Lambda_K - (n lambda_{K-1} + sum_{k=1}^{K-2} (n lambda_k - (n-1) lambda_{k+1}))|
/// over 2 <= K <= K_max, relative to Lambda_K; negative if some weight is negative.
double check_lambda_weights(std::size_t n, std::size_t K_max);

/// Largest K alpha_K over 1 <= K <= K_max for alpha_{k+1} = alpha_k / sqrt(1 + alpha_k).
double acc_rate_max_ratio(double alpha0, std::size_t K_max);

struct ProxSuiteResult {
  std::size_t samples = 0;
  std::size_t failures = 0;
  double worst_nonexpansive = 0.0;  // max of |prox u - prox v| - |u - v|
  double worst_inequality = 0.0;    // max violation of the prox inequality
  double worst_moreau = 0.0;        // max |v - prox_f(v) - tau prox_{f*/tau}(v / tau)|
  std::vector<std::string> failed;
};

/// One function per family with conjugates in the catalog.
std::vector<ScalarConvexFn> prox_catalog();

/// Nonexpansiveness, the prox inequality with modulus mu, and the Moreau
/// identity on `samples` random draws per catalog function.
ProxSuiteResult prox_property_suite(std::size_t samples, std::uint64_t seed, double tol = 1e-10);

}  // namespace purecd
