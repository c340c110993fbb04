#include "purecd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "purecd/metrics.hpp"
#include "purecd/oracle.hpp"

namespace purecd {

using nlohmann::json;

namespace {

const std::vector<std::string> kGenerators = {"constrained_qp", "erm_hinge", "lasso",
                                              "ridge",          "bilinear_toy", "file"};

std::vector<std::uint64_t> default_seeds() {
  std::vector<std::uint64_t> s(20);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
  return s;
}

// Reads fields of one JSON object, rejecting unknown keys and wrong types.
class FieldReader {
 public:
  FieldReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_.empty() ? "config" : where_, "expected an object");
  }

  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void number(const std::string& key, double& dst) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    dst = v.get<double>();
  }
  void optional_number(const std::string& key, std::optional<double>& dst) {
    if (!has(key)) return;
    double v = 0.0;
    number(key, v);
    dst = v;
  }
  template <class T>
  void count(const std::string& key, T& dst) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(path(key), "expected a nonnegative integer");
    }
    dst = static_cast<T>(v.get<unsigned long long>());
  }
  void text(const std::string& key, std::string& dst) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    dst = v.get<std::string>();
  }
  void flag(const std::string& key, bool& dst) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    dst = v.get<bool>();
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

double param_value(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  throw ConfigError(where, "expected a number, \"inf\" or \"-inf\"");
}

ScalarConvexFn component_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where, "expected a component object");
  std::map<std::string, double> v = {{"a", 1.0},   {"b", 0.0},        {"c", 0.0},
                                     {"lo", 0.0},  {"hi", 0.0},       {"lambda", 1.0},
                                     {"scale", 1.0}};
  std::string family;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "family") {
      if (!it->is_string()) throw ConfigError(where + ".family", "expected a string");
      family = it->get<std::string>();
    } else if (v.count(it.key())) {
      v[it.key()] = param_value(*it, where + "." + it.key());
    } else {
      throw ConfigError(where + "." + it.key(), "unknown field");
    }
  }
  try {
    switch (family_from_name(family)) {
      case Family::Zero: return ScalarConvexFn::zero();
      case Family::Quadratic: return ScalarConvexFn::quadratic(v["a"], v["b"], v["scale"]);
      case Family::AbsValue: return ScalarConvexFn::abs_value(v["lambda"], v["scale"]);
      case Family::Interval: return ScalarConvexFn::interval(v["lo"], v["hi"]);
      case Family::Point: return ScalarConvexFn::point(v["b"]);
      case Family::LinearInterval:
        return ScalarConvexFn::linear_interval(v["c"], v["lo"], v["hi"], v["scale"]);
      case Family::ShiftedSquare: return ScalarConvexFn::shifted_square(v["b"], v["scale"]);
      case Family::Hinge: return ScalarConvexFn::hinge(v["b"], v["scale"]);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where, e.what());
  }
  throw ConfigError(where + ".family", "unknown family");
}

SeparableFunction components_from_json(const json& j, std::size_t m, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where, "expected a nonempty array");
  if (j.size() != 1 && j.size() != m) {
    throw ConfigError(where, "expected 1 or " + std::to_string(m) + " components, got " +
                                 std::to_string(j.size()));
  }
  std::vector<ScalarConvexFn> c;
  for (std::size_t k = 0; k < j.size(); ++k) {
    c.push_back(component_from_json(j[k], where + "[" + std::to_string(k) + "]"));
  }
  if (c.size() == 1) return SeparableFunction::uniform(m, c.front());
  return SeparableFunction(std::move(c));
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("--out-dir", "cannot write " + path.string());
  f << body;
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path, "cannot open file");
  try {
    return json::parse(f, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

json vec_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

Regime regime_of(const ExperimentConfig& c) {
  try {
    return regime_from_name(c.regime);
  } catch (const ScheduleError& e) {
    throw ConfigError("regime", e.what());
  }
}

std::vector<double> checkpoint_ks(const std::vector<Trace>& traces) {
  std::vector<double> ks;
  for (const MetricsRecord& r : traces.front().records) ks.push_back(static_cast<double>(r.k));
  return ks;
}

// Fit over [lo, hi] on the usable (positive, finite) points; null when too few.
json fit_json(const std::vector<double>& ks, const std::vector<double>& vals, FitMode mode,
              double lo, double hi) {
  std::vector<double> fk, fv;
  for (std::size_t r = 0; r < ks.size(); ++r) {
    if (ks[r] < lo || ks[r] > hi) continue;
    if (!std::isfinite(vals[r]) || vals[r] <= 0.0) continue;
    // Linear fits stop at the rounding floor.
    if (mode == FitMode::Linear && vals[r] <= 1e-24) break;
    fk.push_back(ks[r]);
    fv.push_back(vals[r]);
  }
  if (fk.size() < 5) return nullptr;
  const RateFit f = fit_rate(fk, fv, mode, lo, hi);
  json j = {{"mode", mode == FitMode::LogLog ? "loglog" : "linear"},
            {"slope", f.slope},
            {"intercept", f.intercept},
            {"r2", f.r2},
            {"points", f.points},
            {"k_range", {lo, hi}}};
  if (mode == FitMode::Linear) j["factor"] = std::exp(f.slope);
  return j;
}

std::string metric_for_acceptance_error(const std::string& m) {
  const auto& names = metric_names();
  return std::find(names.begin(), names.end(), m) == names.end() ? "unknown metric '" + m + "'"
                                                                  : std::string();
}

bool is_config_exception(const std::exception& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SolverError*>(&e) ||
         dynamic_cast<const ScheduleError*>(&e) || dynamic_cast<const UnsupportedFamily*>(&e) ||
         dynamic_cast<const json::exception*>(&e);
}

// Maps exceptions to exit codes with a message on err.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    if (is_config_exception(e)) {
      err << "config error: " << e.what() << "\n";
      return 2;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

void apply_overrides(ExperimentConfig& c, const CommandOptions& opt) {
  if (opt.seeds) c.seeds = *opt.seeds;
  if (opt.checkpoints) {
    if (*opt.checkpoints != "geometric" && *opt.checkpoints != "linear") {
      throw ConfigError("--checkpoints", "expected geometric or linear");
    }
    c.checkpoints.plan = *opt.checkpoints;
    // Linear default spacing: about 100 checkpoints.
    if (c.checkpoints.plan == "linear" && !c.acceptance) {
      c.checkpoints.step = std::max<std::size_t>(1, c.iterations / 100);
    }
  }
}

}  // namespace

// ---- config -------------------------------------------------------------------

ProblemSpec problem_from_json(const json& j, const std::string& where) {
  ProblemSpec p;
  FieldReader r(j, where);
  r.text("generator", p.generator);
  r.count("n", p.n);
  r.count("d", p.d);
  r.count("seed", p.seed);
  r.number("density", p.density);
  r.flag("row_normalize", p.row_normalize);
  r.number("reg", p.reg);
  r.number("lambda", p.lambda);
  r.number("mu_g", p.mu_g);
  r.number("mu_h", p.mu_h);
  r.text("matrix_file", p.matrix_file);
  if (r.has("g")) p.g = r.at("g");
  if (r.has("h_conj")) p.h_conj = r.at("h_conj");
  r.text("reference_file", p.reference_file);
  r.flag("compute_reference", p.compute_reference);
  r.finish();

  if (std::find(kGenerators.begin(), kGenerators.end(), p.generator) == kGenerators.end()) {
    throw ConfigError(where + ".generator", "unknown generator '" + p.generator + "'");
  }
  if (p.generator == "file") {
    if (p.matrix_file.empty()) throw ConfigError(where + ".matrix_file", "required for file");
    if (p.g.empty()) throw ConfigError(where + ".g", "required for file");
    if (p.h_conj.empty()) throw ConfigError(where + ".h_conj", "required for file");
  } else if (p.generator != "bilinear_toy") {
    if (p.n == 0) throw ConfigError(where + ".n", "must be >= 1");
    if (p.d == 0) throw ConfigError(where + ".d", "must be >= 1");
    if (!(p.density > 0.0 && p.density <= 1.0)) {
      throw ConfigError(where + ".density", "must lie in (0, 1]");
    }
  }
  if (p.reg < 0.0) throw ConfigError(where + ".reg", "must be >= 0");
  if (p.lambda <= 0.0) throw ConfigError(where + ".lambda", "must be > 0");
  if (p.mu_g <= 0.0) throw ConfigError(where + ".mu_g", "must be > 0");
  if (p.mu_h <= 0.0) throw ConfigError(where + ".mu_h", "must be > 0");
  return p;
}

json problem_to_json(const ProblemSpec& p) {
  return {{"generator", p.generator},
          {"n", p.n},
          {"d", p.d},
          {"seed", p.seed},
          {"density", p.density},
          {"row_normalize", p.row_normalize},
          {"reg", p.reg},
          {"lambda", p.lambda},
          {"mu_g", p.mu_g},
          {"mu_h", p.mu_h},
          {"matrix_file", p.matrix_file},
          {"g", p.g},
          {"h_conj", p.h_conj},
          {"reference_file", p.reference_file},
          {"compute_reference", p.compute_reference}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  FieldReader r(j, "");
  if (r.has("problem")) c.problem = problem_from_json(r.at("problem"), "problem");
  r.text("regime", c.regime);
  r.number("gamma", c.gamma);
  r.text("method", c.method);
  r.text("output", c.output);
  r.count("iterations", c.iterations);
  if (r.has("seeds")) {
    const json& s = r.at("seeds");
    if (s.is_string()) {
      try {
        c.seeds = parse_seed_range(s.get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError("seeds", e.what());
      }
    } else if (s.is_array()) {
      for (const json& v : s) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          throw ConfigError("seeds", "expected nonnegative integers");
        }
        c.seeds.push_back(v.get<std::uint64_t>());
      }
    } else {
      throw ConfigError("seeds", "expected an array or \"A..B\"");
    }
  }
  if (r.has("checkpoints")) {
    FieldReader cr(r.at("checkpoints"), "checkpoints");
    cr.text("plan", c.checkpoints.plan);
    cr.number("ratio", c.checkpoints.ratio);
    cr.count("step", c.checkpoints.step);
    cr.finish();
  }
  r.optional_number("compact_radius", c.compact_radius);
  r.flag("ergodic_dual_bar", c.ergodic_dual_bar);
  if (r.has("acceptance")) {
    AcceptanceSpec a;
    FieldReader ar(r.at("acceptance"), "acceptance");
    ar.text("metric", a.metric);
    ar.optional_number("expected_slope", a.expected_slope);
    ar.optional_number("expected_linear_factor", a.expected_linear_factor);
    ar.number("tolerance", a.tolerance);
    if (ar.has("k_range")) {
      const json& kr = ar.at("k_range");
      if (!kr.is_array() || kr.size() != 2 || !kr[0].is_number() || !kr[1].is_number()) {
        throw ConfigError("acceptance.k_range", "expected [k_lo, k_hi]");
      }
      a.k_lo = kr[0].get<double>();
      a.k_hi = kr[1].get<double>();
    }
    ar.finish();
    c.acceptance = a;
  }
  r.finish();

  if (c.seeds.empty()) {
    if (j.contains("seeds")) throw ConfigError("seeds", "must not be empty");
    c.seeds = default_seeds();
  }
  regime_of(c);
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw ConfigError("gamma", "must lie in (0, 1)");
  if (c.method != "auto") {
    try {
      method_from_name(c.method);
    } catch (const std::exception& e) {
      throw ConfigError("method", e.what());
    }
  }
  if (c.output != "auto") {
    try {
      output_rule_from_name(c.output);
    } catch (const std::exception& e) {
      throw ConfigError("output", e.what());
    }
  }
  if (c.checkpoints.plan != "geometric" && c.checkpoints.plan != "linear") {
    throw ConfigError("checkpoints.plan", "expected geometric or linear");
  }
  if (c.checkpoints.ratio <= 1.0) throw ConfigError("checkpoints.ratio", "must be > 1");
  if (c.checkpoints.step == 0) throw ConfigError("checkpoints.step", "must be >= 1");
  if (c.compact_radius && *c.compact_radius <= 0.0) {
    throw ConfigError("compact_radius", "must be > 0");
  }
  if (c.acceptance) {
    const AcceptanceSpec& a = *c.acceptance;
    if (const std::string e = metric_for_acceptance_error(a.metric); !e.empty()) {
      throw ConfigError("acceptance.metric", e);
    }
    if (a.expected_slope.has_value() == a.expected_linear_factor.has_value()) {
      throw ConfigError("acceptance",
                        "give exactly one of expected_slope and expected_linear_factor");
    }
    if (a.tolerance < 0.0) throw ConfigError("acceptance.tolerance", "must be >= 0");
    if (a.k_hi != 0.0 && a.k_hi < a.k_lo) throw ConfigError("acceptance.k_range", "k_hi < k_lo");
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j = {{"problem", problem_to_json(c.problem)},
            {"regime", c.regime},
            {"gamma", c.gamma},
            {"method", c.method},
            {"output", c.output},
            {"iterations", c.iterations},
            {"seeds", c.seeds.empty() ? default_seeds() : c.seeds},
            {"checkpoints",
             {{"plan", c.checkpoints.plan},
              {"ratio", c.checkpoints.ratio},
              {"step", c.checkpoints.step}}},
            {"compact_radius", c.compact_radius ? json(*c.compact_radius) : json(nullptr)},
            {"ergodic_dual_bar", c.ergodic_dual_bar}};
  if (c.acceptance) {
    const AcceptanceSpec& a = *c.acceptance;
    j["acceptance"] = {
        {"metric", a.metric},
        {"expected_slope", a.expected_slope ? json(*a.expected_slope) : json(nullptr)},
        {"expected_linear_factor",
         a.expected_linear_factor ? json(*a.expected_linear_factor) : json(nullptr)},
        {"tolerance", a.tolerance},
        {"k_range", {a.k_lo, a.k_hi}}};
  } else {
    j["acceptance"] = nullptr;
  }
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(read_json_file(path));
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto parse_u = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("bad seed range '" + text + "' (expected A..B or N)");
    }
    return std::stoull(s);
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) return {parse_u(text)};
  const std::uint64_t a = parse_u(text.substr(0, dots)), b = parse_u(text.substr(dots + 2));
  if (b < a) throw std::invalid_argument("bad seed range '" + text + "' (B < A)");
  if (b - a >= 1'000'000) throw std::invalid_argument("seed range too long");
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
  return out;
}

// ---- building ---------------------------------------------------------------

SaddleProblem build_problem(const ProblemSpec& s) {
  SaddleProblem p;
  try {
    if (s.generator == "constrained_qp") {
      p = gen_constrained_qp(s.n, s.d, s.seed, s.density, s.row_normalize);
    } else if (s.generator == "erm_hinge") {
      p = gen_erm_hinge(s.n, s.d, s.seed, s.reg, s.density, s.row_normalize);
    } else if (s.generator == "lasso") {
      p = gen_lasso(s.n, s.d, s.seed, s.lambda, s.density, s.row_normalize);
    } else if (s.generator == "ridge") {
      p = gen_ridge(s.n, s.d, s.seed, s.density, s.mu_g, s.mu_h, s.row_normalize);
    } else if (s.generator == "bilinear_toy") {
      p = gen_bilinear_toy();
    } else {
      SparseMatrix a = read_matrix_file(s.matrix_file);
      SeparableFunction g = components_from_json(s.g, a.cols(), "problem.g");
      SeparableFunction h = components_from_json(s.h_conj, a.rows(), "problem.h_conj");
      p = make_problem("file", std::move(a), std::move(g), std::move(h));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("problem", e.what());
  }
  if (!s.reference_file.empty()) {
    p.reference = read_reference_json(p, s.reference_file);
  } else if (s.compute_reference && !p.reference) {
    try {
      attach_reference(p);
    } catch (const OracleError&) {
      // No reference: reference-based metrics are simply absent.
    }
  }
  return p;
}

StepSchedule build_schedule(const ExperimentConfig& c, const SaddleProblem& p) {
  const Regime r = regime_of(c);
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("regime", std::string(regime_name(r)) + " requires " + what);
  };
  try {
    switch (r) {
      case Regime::DenseImportance: return StepSchedule::dense_importance(p.A, c.gamma);
      case Regime::LambdaRestart: return StepSchedule::lambda_restart(p.A, c.gamma);
      case Regime::SparseConvex: return StepSchedule::sparse_convex(p.A);
      case Regime::SCSC:
        need(p.mu_g > 0.0 && p.mu_h > 0.0, "mu_g > 0 and mu_h > 0");
        return StepSchedule::scsc(p.A, p.mu_g, p.mu_h);
      case Regime::SCC:
        need(p.mu_g > 0.0, "mu_g > 0");
        return StepSchedule::scc(p.A, p.mu_g);
      case Regime::CSC:
        need(p.mu_h > 0.0, "mu_h > 0");
        return StepSchedule::csc(p.A, p.mu_h);
      case Regime::PDHGBaseline: return StepSchedule::pdhg_baseline(p.A, c.gamma);
    }
  } catch (const ScheduleError& e) {
    throw ConfigError("regime", e.what());
  }
  throw ConfigError("regime", "unsupported");
}

RunConfig build_run_config(const ExperimentConfig& c, const SaddleProblem& p) {
  RunConfig rc;
  if (c.method != "auto") rc.method = method_from_name(c.method);
  if (c.output != "auto") rc.output = output_rule_from_name(c.output);
  rc.iterations = c.iterations;
  rc.checkpoints = c.checkpoints.plan == "linear"
                       ? linear_checkpoints(c.iterations, c.checkpoints.step)
                       : geometric_checkpoints(c.iterations, c.checkpoints.ratio);
  const Vector x0(p.d(), 0.0), y0(p.n(), 0.0);
  if (p.reference) {
    rc.z = default_compact_set(p, x0, y0);
  } else if (c.compact_radius) {
    rc.z = CompactSet::centered(x0, y0, *c.compact_radius).clipped_to(p);
  }
  rc.ergodic_dual_bar = c.ergodic_dual_bar;
  rc.keep_outputs = rc.z && regime_of(c) == Regime::SparseConvex;
  return rc;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("PURECD_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError("PURECD_WORKERS", "expected a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Trace> run_seeds(const SaddleProblem& p, const StepSchedule& s, const RunConfig& base,
                             const std::vector<std::uint64_t>& seeds, std::size_t workers) {
  std::vector<Trace> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < seeds.size();) {
      try {
        RunConfig rc = base;
        rc.seed = seeds[t];
        out[t] = run(p, s, rc);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::min(std::max<std::size_t>(1, workers), seeds.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < nthreads; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::optional<Aggregate> aggregate_metric(const std::vector<Trace>& traces,
                                          const std::string& metric) {
  if (traces.empty() || traces.front().records.empty()) return std::nullopt;
  if (!metric_by_name(traces.front().records.front(), metric)) return std::nullopt;
  const std::size_t m = traces.front().records.size();
  const double cnt = static_cast<double>(traces.size());
  Aggregate a{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (const Trace& t : traces) s += *metric_by_name(t.records[r], metric);
    a.mean[r] = s / cnt;
    if (traces.size() > 1) {
      double v = 0.0;
      for (const Trace& t : traces) v += std::pow(*metric_by_name(t.records[r], metric) - a.mean[r], 2);
      a.stddev[r] = std::sqrt(v / (cnt - 1.0));
    }
  }
  return a;
}

std::string trace_csv(const Trace& t) {
  std::vector<std::string> cols;
  if (!t.records.empty()) {
    for (const std::string& m : metric_names()) {
      if (metric_by_name(t.records.front(), m)) cols.push_back(m);
    }
  }
  std::ostringstream s;
  s << "k,cost_nnz";
  for (const auto& c : cols) s << "," << c;
  s << "\n";
  for (const MetricsRecord& r : t.records) {
    s << r.k << "," << r.cost;
    for (const auto& c : cols) s << "," << fmt17(*metric_by_name(r, c));
    s << "\n";
  }
  return s.str();
}

// ---- summary ------------------------------------------------------------------

json summarize(const ExperimentConfig& c, const SaddleProblem& p, const StepSchedule& s,
               const RunConfig& rc, const std::vector<Trace>& traces) {
  const Regime reg = s.regime();
  const std::vector<double> ks = checkpoint_ks(traces);
  const double K = static_cast<double>(c.iterations);
  const Vector x0(p.d(), 0.0), y0(p.n(), 0.0);
  json j;
  j["config"] = config_to_json(c);
  j["problem"] = {{"name", p.name},
                  {"n", p.n()},
                  {"d", p.d()},
                  {"nnz", p.A.nnz()},
                  {"hash", [&] {
                     char buf[20];
                     std::snprintf(buf, sizeof buf, "%016llx",
                                   static_cast<unsigned long long>(problem_hash(p)));
                     return std::string(buf);
                   }()},
                  {"mu_g", p.mu_g},
                  {"mu_h", p.mu_h},
                  {"max_row_norm", p.A.max_row_norm()},
                  {"sum_row_norms", p.A.sum_row_norms()}};
  if (p.reference) {
    j["problem"]["reference"] = {
        {"method", p.reference->method},
        {"achieved_gap", p.reference->achieved_gap},
        {"F_star", p.reference->F_star ? json(*p.reference->F_star) : json(nullptr)}};
  } else {
    j["problem"]["reference"] = nullptr;
  }
  j["regime"] = regime_name(reg);
  j["method"] = method_name(traces.front().method);
  j["output"] = output_rule_name(traces.front().output);
  j["seeds"] = c.seeds;
  j["k"] = ks;

  std::vector<double> cost(ks.size(), 0.0);
  std::uint64_t violations = 0;
  for (const Trace& t : traces) {
    for (std::size_t r = 0; r < ks.size(); ++r) {
      cost[r] += static_cast<double>(t.records[r].cost) / static_cast<double>(traces.size());
    }
    violations += t.locality_violations;
  }
  j["cost_nnz_mean"] = cost;
  j["locality_violations"] = violations;

  // Means, deviations and fits.
  const bool linear_regime = reg == Regime::SCSC;
  const double fit_lo = linear_regime ? 0.0 : std::max(1.0, K / 100.0);
  j["metrics"] = json::object();
  j["fits"] = json::object();
  std::map<std::string, Aggregate> aggs;
  for (const std::string& m : metric_names()) {
    auto a = aggregate_metric(traces, m);
    if (!a) continue;
    j["metrics"][m] = {{"mean", vec_json(a->mean)}, {"std", vec_json(a->stddev)}};
    j["fits"][m] = fit_json(ks, a->mean, linear_regime ? FitMode::Linear : FitMode::LogLog,
                            fit_lo, K);
    aggs.emplace(m, std::move(*a));
  }
  // SCSC contracts the sum of both distances.
  if (linear_regime && aggs.count("dist_x_sq") && aggs.count("dist_y_sq")) {
    std::vector<double> sum(ks.size());
    for (std::size_t r = 0; r < ks.size(); ++r) {
      sum[r] = aggs["dist_x_sq"].mean[r] + aggs["dist_y_sq"].mean[r];
    }
    j["fits"]["dist_sq"] = fit_json(ks, sum, FitMode::Linear, 0.0, K);
  }

  // Rate bound curves at each checkpoint (null at k = 0).
  json bounds = json::object();
  auto curve = [&](const std::string& name, const std::string& metric, auto&& f) {
    json v = json::array();
    for (double k : ks) v.push_back(k < 1.0 ? json(nullptr) : json(f(k)));
    bounds[name] = {{"metric", metric}, {"values", v}};
  };
  const double maxrow = p.A.max_row_norm(), sumrow = p.A.sum_row_norms();
  const std::size_t n = p.n();
  double d_z = 0.0;
  if (rc.z) {
    d_z = rc.z->diameter_sq(x0, y0);
    j["D_Z"] = d_z;
  }
  switch (reg) {
    case Regime::DenseImportance:
      if (p.reference && p.constraint_set) {
        const Case2Constants cc = case2_constants(p, x0, y0);
        curve("case2_feasibility", "feas_dist",
              [&](double k) { return bound_case2_feasibility(sumrow, k, s.gamma(), cc); });
        curve("case2_objective", "g_gap_abs",
              [&](double k) { return bound_case2_objective(sumrow, k, s.gamma(), cc); });
      }
      if (p.reference && p.reference->F_star && p.h_primal) {
        if (const auto lh = p.h_conj.lipschitz()) {
          const double dx = dist_sq(p.reference->x_star, x0);
          curve("case1_objective", "F_subopt",
                [&](double k) { return bound_case1(sumrow, k, s.gamma(), *lh, dx); });
        }
      }
      break;
    case Regime::LambdaRestart:
      if (rc.z) {
        curve("lambda_restart_gap", "gap_restricted", [&](double k) {
          return bound_lambda_restart(n, maxrow, d_z, s.Lambda(static_cast<std::size_t>(k)),
                                      s.gamma());
        });
      }
      break;
    case Regime::SparseConvex:
      if (rc.z) {
        curve("sparse_convex_gap", "gap_restricted",
              [&](double k) { return bound_sparse_convex(n, maxrow, d_z, k); });
      }
      if (p.reference && p.name == "erm_hinge") {
        // Loss Lipschitz constant: h_i = f_i / n, so L_f = n sup|dom h_i*|.
        double lf = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          lf = std::max(lf, p.h_conj[i].lipschitz().value_or(0.0) * static_cast<double>(n));
        }
        const double dx = std::sqrt(dist_sq(p.reference->x_star, x0));
        curve("erm_lipschitz_form", "F_subopt",
              [&](double k) { return bound_erm_lipschitz(n, lf, maxrow, dx, k); });
      }
      break;
    case Regime::SCSC:
      if (p.reference) {
        const ScscEnergy e0 = scsc_energy(p, s, x0, y0);
        const double cst = s.predicted_contraction();
        j["scsc_contraction"] = cst;
        j["scsc_predicted_factor"] = 1.0 / cst;
        curve("scsc_dist_sq", "dist_x_sq+dist_y_sq",
              [&](double k) { return std::pow(cst, -k) * e0.value / e0.min_weight; });
      }
      break;
    case Regime::SCC:
      if (p.reference) {
        const double ds = dist_to_reference_sq(p, x0, y0);
        curve("scc_dist_x_sq", "dist_x_sq",
              [&](double k) { return bound_scc(n, maxrow, p.mu_g, ds, k); });
      }
      break;
    case Regime::CSC:
      if (p.reference) {
        const double ds = dist_to_reference_sq(p, x0, y0);
        curve("csc_dist_y_sq", "dist_y_sq",
              [&](double k) { return bound_csc(n, maxrow, p.mu_h, ds, k); });
      }
      break;
    case Regime::PDHGBaseline: break;
  }
  j["bounds"] = bounds;

  // Both aggregation orders for the random output iterate.
  if (reg == Regime::SparseConvex && rc.z && rc.keep_outputs) {
    json eom = json::array(), moe = json::array();
    for (std::size_t r = 0; r < ks.size(); ++r) {
      std::vector<Vector> xs, ys;
      double mean_gap = 0.0;
      for (const Trace& t : traces) {
        xs.push_back(t.outputs[r].x);
        ys.push_back(t.outputs[r].y);
        mean_gap += *t.records[r].gap_restricted / static_cast<double>(traces.size());
      }
      eom.push_back(mean_gap);
      moe.push_back(gap_of_mean(p, *rc.z, xs, ys));
    }
    j["aggregation"] = {
        {"expectation_of_max", eom},
        {"max_of_expectation", moe},
        {"max_of_expectation_exact", true},
        {"note",
         "expectation_of_max: mean over seeds of each seed's restricted gap; "
         "max_of_expectation: restricted gap of the seed-averaged (x, y), maximized in closed "
         "form per coordinate (exact for every catalog family)"}};
  }

  // Optional configured rate check.
  if (c.acceptance) {
    const AcceptanceSpec& a = *c.acceptance;
    json res = {{"metric", a.metric}, {"tolerance", a.tolerance}};
    const double hi = a.k_hi > 0.0 ? a.k_hi : K;
    bool pass = false;
    auto it = aggs.find(a.metric);
    if (it == aggs.end()) {
      res["error"] = "metric not available for this problem";
    } else if (a.expected_slope) {
      const json f = fit_json(ks, it->second.mean, FitMode::LogLog, a.k_lo, hi);
      res["expected_slope"] = *a.expected_slope;
      res["fit"] = f;
      if (!f.is_null()) {
        pass = std::abs(f["slope"].get<double>() - *a.expected_slope) <= a.tolerance;
      }
    } else {
      const json f = fit_json(ks, it->second.mean, FitMode::Linear, a.k_lo, hi);
      res["expected_linear_factor"] = *a.expected_linear_factor;
      res["fit"] = f;
      if (!f.is_null()) pass = f["factor"].get<double>() <= *a.expected_linear_factor + a.tolerance;
    }
    res["pass"] = pass;
    j["acceptance"] = res;
  }
  return j;
}

// ---- commands -----------------------------------------------------------------

int cmd_print_config(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig c = config_path.empty() ? config_from_json(json::object())
                                                   : load_config(config_path);
    out << config_to_json(c).dump(2) << "\n";
    return 0;
  });
}

int cmd_solve(const std::string& config_path, const CommandOptions& opt, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig c = load_config(config_path);
    apply_overrides(c, opt);
    const SaddleProblem p = build_problem(c.problem);
    const StepSchedule s = build_schedule(c, p);
    const RunConfig rc = build_run_config(c, p);
    const auto traces = run_seeds(p, s, rc, c.seeds, worker_count());
    const json summary = summarize(c, p, s, rc, traces);

    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    for (const Trace& t : traces) {
      write_text(dir / ("seed_" + std::to_string(t.seed) + ".csv"), trace_csv(t));
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");

    out << "problem " << p.name << " n=" << p.n() << " d=" << p.d() << " nnz=" << p.A.nnz()
        << " regime=" << summary["regime"].get<std::string>()
        << " method=" << summary["method"].get<std::string>()
        << " output=" << summary["output"].get<std::string>() << " K=" << c.iterations
        << " seeds=" << c.seeds.size() << "\n";
    for (auto it = summary["metrics"].begin(); it != summary["metrics"].end(); ++it) {
      const json& last = it.value()["mean"].back();
      out << "  " << std::left << std::setw(16) << it.key()
          << " final_mean=" << (last.is_null() ? std::string("inf") : fmt_short(last.get<double>()));
      const json& f = summary["fits"][it.key()];
      if (!f.is_null()) out << " slope=" << fmt_short(f["slope"].get<double>());
      out << "\n";
    }
    out << "wrote " << traces.size() << " trace(s) and summary.json to " << dir.string() << "\n";
    if (summary.contains("acceptance")) {
      const bool pass = summary["acceptance"]["pass"].get<bool>();
      out << "acceptance " << (pass ? "PASS" : "FAIL") << "\n";
      if (!pass) return 1;
    }
    return 0;
  });
}

int cmd_bench(const std::string& suite_path, const CommandOptions& opt, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const json suite = read_json_file(suite_path);
    if (!suite.is_object()) throw ConfigError("suite", "expected an object");
    for (auto it = suite.begin(); it != suite.end(); ++it) {
      static const std::set<std::string> known = {"problems", "members", "epsilon", "seeds"};
      if (!known.count(it.key())) throw ConfigError("suite." + it.key(), "unknown field");
    }
    if (!suite.contains("problems") || !suite["problems"].is_array() || suite["problems"].empty()) {
      throw ConfigError("suite.problems", "expected a nonempty array");
    }
    if (!suite.contains("members") || !suite["members"].is_array() || suite["members"].size() < 2) {
      throw ConfigError("suite.members", "expected at least 2 method configs");
    }
    if (!suite.contains("epsilon") || !suite["epsilon"].is_object() || suite["epsilon"].empty()) {
      throw ConfigError("suite.epsilon", "expected {metric: epsilon, ...}");
    }
    std::vector<std::pair<std::string, double>> targets;
    for (auto it = suite["epsilon"].begin(); it != suite["epsilon"].end(); ++it) {
      if (const std::string e = metric_for_acceptance_error(it.key()); !e.empty()) {
        throw ConfigError("suite.epsilon." + it.key(), e);
      }
      if (!it->is_number() || it->get<double>() <= 0.0) {
        throw ConfigError("suite.epsilon." + it.key(), "expected a positive number");
      }
      targets.emplace_back(it.key(), it->get<double>());
    }
    std::vector<std::string> labels;
    std::vector<ExperimentConfig> members;
    for (std::size_t m = 0; m < suite["members"].size(); ++m) {
      json mj = suite["members"][m];
      const std::string where = "suite.members[" + std::to_string(m) + "]";
      if (!mj.is_object()) throw ConfigError(where, "expected an object");
      std::string label = "member" + std::to_string(m);
      if (mj.contains("label")) {
        if (!mj["label"].is_string()) throw ConfigError(where + ".label", "expected a string");
        label = mj["label"].get<std::string>();
        mj.erase("label");
      }
      if (mj.contains("problem")) throw ConfigError(where + ".problem", "set problems at suite level");
      if (suite.contains("seeds") && !mj.contains("seeds")) mj["seeds"] = suite["seeds"];
      try {
        members.push_back(config_from_json(mj));
      } catch (const ConfigError& e) {
        throw ConfigError(where + "." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
      }
      apply_overrides(members.back(), opt);
      labels.push_back(label);
    }

    // cost-to-epsilon[problem][target][member]; negative = not reached, NaN = n/a.
    struct Row {
      std::string problem, metric;
      double eps;
      std::vector<double> cost;
    };
    std::vector<Row> rows;
    const std::size_t workers = worker_count();
    for (std::size_t q = 0; q < suite["problems"].size(); ++q) {
      const ProblemSpec spec =
          problem_from_json(suite["problems"][q], "suite.problems[" + std::to_string(q) + "]");
      const SaddleProblem p = build_problem(spec);
      const std::string pname = p.name + "#" + std::to_string(q);
      std::vector<Row> prow;
      for (const auto& [metric, eps] : targets) prow.push_back({pname, metric, eps, {}});
      for (std::size_t m = 0; m < members.size(); ++m) {
        const StepSchedule s = build_schedule(members[m], p);
        RunConfig rc = build_run_config(members[m], p);
        rc.keep_outputs = false;
        std::vector<Trace> traces;
        try {
          traces = run_seeds(p, s, rc, members[m].seeds, workers);
        } catch (const std::exception& e) {
          throw std::runtime_error("member '" + labels[m] + "' on " + pname + " failed: " + e.what());
        }
        for (Row& r : prow) {
          const auto a = aggregate_metric(traces, r.metric);
          double c = NAN;
          if (a) {
            c = -1.0;
            for (std::size_t k = 0; k < a->mean.size(); ++k) {
              if (a->mean[k] <= r.eps) {
                c = 0.0;
                for (const Trace& t : traces) c += static_cast<double>(t.records[k].cost);
                c /= static_cast<double>(traces.size());
                break;
              }
            }
          }
          r.cost.push_back(c);
        }
      }
      rows.insert(rows.end(), prow.begin(), prow.end());
    }

    auto cell = [](double c) {
      if (std::isnan(c)) return std::string("n/a");
      if (c < 0.0) return std::string("not reached");
      return fmt17(c);
    };
    std::ostringstream csv, txt;
    csv << "problem,metric,epsilon";
    for (const auto& l : labels) csv << "," << l;
    csv << "\n";
    for (const Row& r : rows) {
      csv << r.problem << "," << r.metric << "," << fmt17(r.eps);
      for (double c : r.cost) csv << "," << cell(c);
      csv << "\n";
    }
    // Aligned rendering.
    std::vector<std::vector<std::string>> table;
    table.push_back({"problem", "metric", "epsilon"});
    for (const auto& l : labels) table.back().push_back(l);
    for (const Row& r : rows) {
      table.push_back({r.problem, r.metric, fmt_short(r.eps)});
      for (double c : r.cost) {
        table.back().push_back(std::isnan(c) || c < 0.0 ? cell(c) : fmt_short(c));
      }
    }
    std::vector<std::size_t> width(table.front().size(), 0);
    for (const auto& row : table) {
      for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    for (const auto& row : table) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        txt << (i ? "  " : "") << (i < 3 ? std::left : std::right) << std::setw(int(width[i]))
            << row[i];
      }
      txt << "\n";
    }
    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    write_text(dir / "bench.csv", csv.str());
    write_text(dir / "bench.txt", txt.str());
    out << "cost to epsilon (mean touched nnz at the first checkpoint reaching epsilon)\n"
        << txt.str();
    return 0;
  });
}

// ---- validate -------------------------------------------------------------------

namespace {

struct CheckLine {
  std::string name;
  bool ok;
  std::string detail;
};

void identity_checks(std::vector<CheckLine>& lines) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> pos(0.1, 2.0), unit(0.0, 1.0);
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // name -> (count, failures)
  std::map<std::string, double> worst;
  for (std::size_t n : {2u, 3u, 5u, 8u}) {
    for (int rep = 0; rep < 25; ++rep) {
      const SaddleProblem p = rep % 2 == 0 ? gen_lasso(n, 6, rng(), 0.1, 0.5)
                                           : gen_erm_hinge(n, 4, rng(), 0.5, 0.7, false);
      for (Method m : {Method::PureCDDense, Method::PureCDSparse}) {
        StepSchedule s = m == Method::PureCDDense ? StepSchedule::dense_importance(p.A)
                                                  : StepSchedule::sparse_convex(p.A);
        Vector x0(p.d()), y0(p.n());
        for (auto& v : x0) v = gauss(rng);
        for (std::size_t i = 0; i < p.n(); ++i) {
          y0[i] = std::clamp(gauss(rng), p.h_conj[i].dom_lo(), p.h_conj[i].dom_hi());
        }
        IterateState st = IterateState::start(p, x0, y0);
        const RowSampler sampler(s.probabilities(), s.uniform_sampling());
        for (int t = static_cast<int>(rng() % 4); t > 0; --t) {
          if (m == Method::PureCDDense) {
            purecd_dense_step(p, s, st, sampler(unit(rng)));
          } else {
            purecd_sparse_step(p, s, st, sampler(unit(rng)));
          }
        }
        Vector xr(p.d()), yr(p.n()), b(p.d()), phi(p.n());
        for (auto& v : xr) v = gauss(rng);
        for (auto& v : yr) v = gauss(rng);
        for (auto& v : b) v = pos(rng);
        for (auto& v : phi) v = pos(rng);
        for (const auto& c : enumerate_expectations(p, s, st, m, xr, yr, b, phi)) {
          const std::string name = std::string("one_step_expectation.") + c.name +
                                   (m == Method::PureCDDense ? ".dense" : ".sparse");
          auto& t = tally[name];
          ++t.first;
          if (!c.ok) ++t.second;
          worst[name] = std::max(worst[name], std::abs(c.lhs - c.rhs) /
                                                  std::max({1.0, std::abs(c.lhs), std::abs(c.rhs)}));
        }
      }
    }
  }
  for (const auto& [name, t] : tally) {
    lines.push_back({name, t.second == 0,
                     std::to_string(t.first) + " tuples, worst relative error " +
                         fmt_short(worst[name])});
  }
}

void weight_checks(std::vector<CheckLine>& lines) {
  double w = 0.0;
  bool ok = true;
  for (std::size_t n : {2u, 3u, 10u, 100u}) {
    const double e = check_lambda_weights(n, 1000);
    ok = ok && e >= 0.0 && e <= 1e-12;
    w = std::max(w, e);
  }
  lines.push_back({"output_weights.lambda_identity", ok,
                   "n in {2,3,10,100}, K <= 1000, worst " + fmt_short(w)});
  double a = 0.0;
  for (double a0 : {1.0, 0.5, 0.125}) a = std::max(a, acc_rate_max_ratio(a0, 1'000'000));
  lines.push_back({"step_sequence.alpha_le_3_over_K", a <= 3.0, "max K alpha_K " + fmt_short(a)});
}

void schedule_checks(std::vector<CheckLine>& lines) {
  const SaddleProblem r = gen_ridge(15, 25, 3, 0.3, 1.0, 1.0);
  const std::vector<std::pair<std::string, StepSchedule>> fixed = {
      {"dense_importance", StepSchedule::dense_importance(r.A)},
      {"lambda_restart", StepSchedule::lambda_restart(r.A)},
      {"sparse_convex", StepSchedule::sparse_convex(r.A)},
      {"scsc", StepSchedule::scsc(r.A, 1.0, 1.0)},
      {"pdhg", StepSchedule::pdhg_baseline(r.A)}};
  for (const auto& [name, s] : fixed) {
    const StepCheck c = s.validate(r.A);
    lines.push_back({"schedule." + name + ".step_condition", c.ok,
                     "worst margin " + fmt_short(c.worst_margin) + (c.ok ? "" : " " + c.detail)});
  }
  for (const std::string name : {"scc", "csc"}) {
    StepSchedule s = name == "scc" ? StepSchedule::scc(r.A, 1.0) : StepSchedule::csc(r.A, 1.0);
    const double prod0 = s.tilde_tau() * s.sigma_scalar();
    bool ok = true;
    double drift = 0.0;
    for (int k = 0; k < 2000; ++k) {
      if (k % 100 == 0 && !s.validate(r.A).ok) ok = false;
      const double prod = s.tilde_tau() * s.sigma_scalar();
      if (name == "scc") {
        drift = std::max(drift, std::abs(prod - prod0) / prod0);
      } else {
        drift = std::max(drift, (prod - prod0) / prod0);
      }
      s.advance();
    }
    const bool prod_ok = drift <= 1e-12;
    lines.push_back({"schedule." + name + ".step_condition", ok, "checked every 100 steps to 2000"});
    lines.push_back({"schedule." + name + (name == "scc" ? ".tau_sigma_constant" : ".tau_sigma_nonincreasing"),
                     prod_ok, "relative drift " + fmt_short(drift)});
  }
}

void equivalence_check(std::vector<CheckLine>& lines, bool perturb) {
  const SaddleProblem p = gen_erm_hinge(20, 20, 7, 0.0, 1.0, true);
  const StepSchedule dense = StepSchedule::dense_importance(p.A, 0.99);
  StepSchedule sparse = StepSchedule::lift_to_sparse(dense);
  if (perturb) sparse.perturb_theta(3, 1e-3);
  RunConfig cfg;
  cfg.iterations = 1000;
  cfg.seed = 3;
  cfg.output = OutputRule::LastIterate;
  cfg.keep_outputs = true;
  cfg.checkpoints = linear_checkpoints(1000, 1);
  const Trace a = run(p, dense, cfg);
  const Trace b = run(p, sparse, cfg);
  double worst = 0.0;
  for (std::size_t c = 0; c < a.outputs.size(); ++c) {
    for (std::size_t j = 0; j < p.d(); ++j) {
      worst = std::max(worst, std::abs(a.outputs[c].x[j] - b.outputs[c].x[j]));
    }
    for (std::size_t i = 0; i < p.n(); ++i) {
      worst = std::max(worst, std::abs(a.outputs[c].y[i] - b.outputs[c].y[i]));
    }
  }
  lines.push_back({"algorithms.dense_sparse_equivalence", worst <= 1e-10,
                   "20x20 dense, 1000 iterations, max divergence " + fmt_short(worst) +
                       (perturb ? " (theta perturbed)" : "")});
}

void locality_check(std::vector<CheckLine>& lines) {
  const SaddleProblem p = gen_lasso(30, 60, 8, 0.1, 0.1);
  RunConfig cfg;
  cfg.iterations = 20000;
  cfg.seed = 1;
  cfg.check_locality = true;
  cfg.checkpoints = {cfg.iterations};
  const Trace t = run(p, StepSchedule::sparse_convex(p.A), cfg);
  const double per = static_cast<double>(t.total_cost) / static_cast<double>(t.iterations);
  const double expect = static_cast<double>(p.A.nnz()) / static_cast<double>(p.n());
  lines.push_back({"algorithms.sparse_locality", t.locality_violations == 0,
                   std::to_string(t.locality_violations) + " writes outside J(i)"});
  lines.push_back({"algorithms.sparse_cost_model", std::abs(per - expect) <= 0.05 * expect,
                   "cost/iteration " + fmt_short(per) + " vs nnz/n " + fmt_short(expect)});
}

void oracle_checks(std::vector<CheckLine>& lines) {
  const ProxSuiteResult r = prox_property_suite(200, 5);
  lines.push_back({"prox.properties", r.failures == 0,
                   std::to_string(r.samples) + " samples" +
                       (r.failed.empty() ? std::string() : ", first failure: " + r.failed.front())});
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SaddleProblem q = gen_constrained_qp(6, 12, seed, 0.5);
    const Reference k = solve_kkt(q), d = solve_reference_pdhg(q);
    for (std::size_t j = 0; j < q.d(); ++j) {
      worst = std::max(worst, std::abs(k.x_star[j] - d.x_star[j]) / std::max(1.0, std::abs(k.x_star[j])));
    }
    for (std::size_t i = 0; i < q.n(); ++i) {
      worst = std::max(worst, std::abs(k.y_star[i] - d.y_star[i]) / std::max(1.0, std::abs(k.y_star[i])));
    }
  }
  lines.push_back({"oracle.kkt_vs_pdhg", worst <= 1e-6,
                   "5 constrained QPs, worst difference " + fmt_short(worst)});
}

}  // namespace

int cmd_validate(const CommandOptions& opt, std::ostream& out) {
  std::vector<CheckLine> lines;
  auto guard = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      lines.push_back({name, false, std::string("exception: ") + e.what()});
    }
  };
  guard("one_step_expectation", [&] { identity_checks(lines); });
  guard("weights", [&] { weight_checks(lines); });
  guard("schedule", [&] { schedule_checks(lines); });
  guard("algorithms.dense_sparse_equivalence", [&] { equivalence_check(lines, opt.perturb_theta); });
  guard("algorithms.sparse_locality", [&] { locality_check(lines); });
  guard("oracle", [&] { oracle_checks(lines); });
  std::size_t failed = 0;
  std::size_t width = 0;
  for (const auto& l : lines) width = std::max(width, l.name.size());
  for (const auto& l : lines) {
    out << (l.ok ? "PASS " : "FAIL ") << std::left << std::setw(int(width)) << l.name << "  "
        << l.detail << "\n";
    if (!l.ok) ++failed;
  }
  out << (failed == 0 ? "all " + std::to_string(lines.size()) + " checks passed"
                      : std::to_string(failed) + " of " + std::to_string(lines.size()) +
                            " checks failed")
      << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_oracle(const std::string& problem_path, const CommandOptions& opt, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    json j = read_json_file(problem_path);
    if (j.is_object() && j.contains("problem")) j = j["problem"];
    ProblemSpec spec = problem_from_json(j, "problem");
    spec.compute_reference = false;
    spec.reference_file.clear();
    SaddleProblem p = build_problem(spec);
    if (!p.reference) attach_reference(p);
    const Reference& r = *p.reference;
    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    const std::filesystem::path path = dir / "reference.json";
    write_reference_json(p, r, path.string());
    out << "problem " << p.name << " n=" << p.n() << " d=" << p.d() << "\n"
        << "method " << r.method << "\n"
        << "achieved_gap " << fmt17(r.achieved_gap) << "\n"
        << "F_star " << (r.F_star ? fmt17(*r.F_star) : std::string("n/a")) << "\n"
        << "wrote " << path.string() << "\n";
    return 0;
  });
}

}  // namespace purecd
