#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "purecd/metrics.hpp"
#include "purecd/problems.hpp"
#include "purecd/schedules.hpp"

namespace purecd {

enum class Method { PureCDDense, PureCDSparse, PDHG, GDA };
enum class OutputRule { Ergodic, LambdaWeighted, RandomIterate, LastIterate };

const char* method_name(Method m);
Method method_from_name(const std::string& name);
const char* output_rule_name(OutputRule r);
OutputRule output_rule_from_name(const std::string& name);

/// The method a schedule is meant for, and its usual output rule.
Method default_method(Regime r);
OutputRule default_output_rule(Regime r);

class SolverError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterate turns non-finite.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::size_t k, const std::string& what);
  std::size_t iteration() const { return k_; }

 private:
  std::size_t k_;
};

/// Counter-based uniform draw in [0, 1): the value depends only on
/// (seed, stream, counter), so draws are reproducible and independent of
/// evaluation order. Stream 0 picks rows; stream 1 picks output indices.
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Row sampler for a fixed law p. Uniform laws use floor(u n) so every
/// caller with the same u draws the same row.
class RowSampler {
 public:
  explicit RowSampler(const Vector& p, bool uniform);
  std::size_t operator()(double u) const;

 private:
  std::size_t n_;
  bool uniform_;
  Vector cdf_;
};

/// Solver state. For PURE-CD, x and y are x_k and y_k and xbar holds the
/// last x_bar_{k+1} (all coordinates for dense PURE-CD, only J(i_k) for
/// sparse PURE-CD). For PDHG, x is x_hat_k, y is y_bar_k and xbar is x_bar_k.
struct IterateState {
  Vector x;
  Vector y;
  Vector xbar;
  DualCache cache;  // A^T y
  std::size_t k = 0;
  std::uint64_t cost = 0;

  static IterateState start(const SaddleProblem& p, const Vector& x0, const Vector& y0);
};

// One iteration each; every step advances both state.k and the schedule.
// Costs: dense PURE-CD adds d + |J(i)|, sparse PURE-CD adds |J(i)|, full-vector
// steps add 2 nnz(A) + d + n.

/// dense PURE-CD with row i.
void purecd_dense_step(const SaddleProblem& p, StepSchedule& s, IterateState& st, std::size_t i);
/// sparse PURE-CD with row i; touches only the coordinates in J(i).
void purecd_sparse_step(const SaddleProblem& p, StepSchedule& s, IterateState& st,
                        std::size_t i);
/// Deterministic first step of the lambda-restart regime (k = 0 -> 1).
void lambda_init_step(const SaddleProblem& p, StepSchedule& s, IterateState& st);
void pdhg_step(const SaddleProblem& p, StepSchedule& s, IterateState& st);
void gda_step(const SaddleProblem& p, StepSchedule& s, IterateState& st);

/// Full x_bar_{k+1} and y_bar_{k+1} from the current state without changing it.
void full_bar_iterates(const SaddleProblem& p, const StepSchedule& s, const IterateState& st,
                       Vector& xbar, Vector& ybar);

/// Running sum of sum_t w_t v^(t) for a vector that changes a few
/// coordinates at a time: O(1) per weight, O(1) per coordinate change.
class LazyWeightedSum {
 public:
  LazyWeightedSum() = default;
  explicit LazyWeightedSum(std::span<const double> v0);
  void set(std::size_t i, double value);
  void accumulate(double w) { weight_ += w; }
  double total_weight() const { return weight_; }
  Vector sum() const;

 private:
  Vector v_, s_, mark_;
  double weight_ = 0.0;
};

struct OutputPair {
  std::size_t k = 0;
  Vector x;
  Vector y;
};

/// Checkpoints 0, 1, 2, 4, ... (ratio r) plus K.
std::vector<std::size_t> geometric_checkpoints(std::size_t K, double ratio = 2.0);
/// Checkpoints 0, step, 2 step, ... plus K.
std::vector<std::size_t> linear_checkpoints(std::size_t K, std::size_t step);

struct RunConfig {
  std::optional<Method> method;  // default from the schedule's regime
  std::optional<OutputRule> output;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> checkpoints;  // empty: geometric
  std::optional<CompactSet> z;           // enables the restricted gap
  Vector x0, y0;                         // empty: zeros
  bool keep_outputs = false;
  bool check_locality = false;  // sparse PURE-CD: count writes outside J(i)
  // Ergodic dual output from the full y_bar_k instead of y_k. Costs an extra
  // O(nnz) per iteration that the cost counter does not see.
  bool ergodic_dual_bar = false;
};

struct Trace {
  std::uint64_t seed = 0;
  Method method = Method::PureCDDense;
  OutputRule output = OutputRule::LastIterate;
  Regime regime = Regime::PDHGBaseline;
  std::size_t iterations = 0;
  std::uint64_t total_cost = 0;
  std::uint64_t locality_violations = 0;
  std::vector<MetricsRecord> records;
  std::vector<OutputPair> outputs;  // when keep_outputs
};

/// Run K iterations, evaluating the output rule at the checkpoints.
Trace run(const SaddleProblem& p, StepSchedule schedule, const RunConfig& cfg);

}  // namespace purecd
