#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "purecd/problems.hpp"
#include "purecd/schedules.hpp"
#include "purecd/solvers.hpp"

namespace purecd {

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Either a generator or a matrix file with explicit g / h* components.
/// A single component entry is broadcast to every coordinate.
struct ProblemSpec {
  std::string generator = "constrained_qp";  // constrained_qp | erm_hinge | lasso | ridge | bilinear_toy | file
  std::size_t n = 20;
  std::size_t d = 40;
  std::uint64_t seed = 1;
  double density = 1.0;
  bool row_normalize = false;
  double reg = 0.1;     // erm_hinge
  double lambda = 0.1;  // lasso
  double mu_g = 1.0;    // ridge
  double mu_h = 1.0;    // ridge
  std::string matrix_file;
  nlohmann::json g = nlohmann::json::array();
  nlohmann::json h_conj = nlohmann::json::array();
  std::string reference_file;  // load instead of computing
  bool compute_reference = true;
};

struct CheckpointPlan {
  std::string plan = "geometric";  // geometric | linear
  double ratio = 2.0;
  std::size_t step = 1000;
};

/// Optional rate check on one metric's seed mean.
struct AcceptanceSpec {
  std::string metric;
  std::optional<double> expected_slope;           // log-log
  std::optional<double> expected_linear_factor;  // per-iteration, upper bound
  double tolerance = 0.3;
  double k_lo = 0.0;
  double k_hi = 0.0;  // 0: K
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::string regime = "dense_importance";
  double gamma = 0.99;
  std::string method = "auto";
  std::string output = "auto";
  std::size_t iterations = 10000;
  std::vector<std::uint64_t> seeds;  // default 0..19
  CheckpointPlan checkpoints;
  std::optional<double> compact_radius;  // gap box radius around (x0, y0) without a reference
  bool ergodic_dual_bar = false;
  std::optional<AcceptanceSpec> acceptance;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);
ProblemSpec problem_from_json(const nlohmann::json& j, const std::string& where = "problem");
nlohmann::json problem_to_json(const ProblemSpec& p);

/// Problem with a reference attached when the oracle can provide one.
SaddleProblem build_problem(const ProblemSpec& spec);
/// Schedule for the config's regime; checks regime/problem compatibility.
StepSchedule build_schedule(const ExperimentConfig& c, const SaddleProblem& p);
RunConfig build_run_config(const ExperimentConfig& c, const SaddleProblem& p);

/// Worker count from PURECD_WORKERS, else the hardware concurrency.
std::size_t worker_count();

/// One trace per seed, in seed order; seeds run on a thread pool.
std::vector<Trace> run_seeds(const SaddleProblem& p, const StepSchedule& s, const RunConfig& base,
                             const std::vector<std::uint64_t>& seeds, std::size_t workers);

/// Per-checkpoint mean and sample standard deviation of one metric.
struct Aggregate {
  std::vector<double> mean;
  std::vector<double> stddev;
};
std::optional<Aggregate> aggregate_metric(const std::vector<Trace>& traces,
                                          const std::string& metric);

/// One CSV per trace: k, cost_nnz and every metric present, 17 significant digits.
std::string trace_csv(const Trace& t);

nlohmann::json summarize(const ExperimentConfig& c, const SaddleProblem& p, const StepSchedule& s,
                         const RunConfig& rc, const std::vector<Trace>& traces);

// ---- commands ---------------------------------------------------------------
// Each returns the process exit code: 0 ok, 1 check failure, 2 config error.

struct CommandOptions {
  std::string out_dir = "out";
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> checkpoints;  // geometric | linear
  bool perturb_theta = false;              // validate: negative control
};

int cmd_solve(const std::string& config_path, const CommandOptions& opt, std::ostream& out,
              std::ostream& err);
int cmd_print_config(const std::string& config_path, std::ostream& out, std::ostream& err);
int cmd_bench(const std::string& suite_path, const CommandOptions& opt, std::ostream& out,
              std::ostream& err);
int cmd_validate(const CommandOptions& opt, std::ostream& out);
int cmd_oracle(const std::string& problem_path, const CommandOptions& opt, std::ostream& out,
               std::ostream& err);

/// "A..B" (inclusive) or a single seed.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

}  // namespace purecd
