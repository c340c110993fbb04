#include "purecd/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace purecd {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void require_finite(std::size_t k, double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(k, std::string("non-finite ") + what);
}

// Add A^T (ynew - y) to the cache and move y to ynew.
void apply_full_dual_change(const SparseMatrix& a, IterateState& st, const Vector& ynew) {
  for (std::size_t i = 0; i < ynew.size(); ++i) {
    const double delta = ynew[i] - st.y[i];
    if (delta != 0.0) st.cache.apply_dual_delta(a, i, delta);
    st.y[i] = ynew[i];
  }
}

std::uint64_t full_step_cost(const SaddleProblem& p) {
  return 2 * static_cast<std::uint64_t>(p.A.nnz()) + p.d() + p.n();
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::PureCDDense: return "purecd_dense";
    case Method::PureCDSparse: return "purecd_sparse";
    case Method::PDHG: return "pdhg";
    case Method::GDA: return "gda";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::PureCDDense, Method::PureCDSparse, Method::PDHG, Method::GDA}) {
    if (name == method_name(m)) return m;
  }
  throw SolverError("unknown method '" + name + "'");
}

const char* output_rule_name(OutputRule r) {
  switch (r) {
    case OutputRule::Ergodic: return "ergodic";
    case OutputRule::LambdaWeighted: return "lambda_weighted";
    case OutputRule::RandomIterate: return "random_iterate";
    case OutputRule::LastIterate: return "last_iterate";
  }
  return "?";
}

OutputRule output_rule_from_name(const std::string& name) {
  for (OutputRule r : {OutputRule::Ergodic, OutputRule::LambdaWeighted,
                       OutputRule::RandomIterate, OutputRule::LastIterate}) {
    if (name == output_rule_name(r)) return r;
  }
  throw SolverError("unknown output rule '" + name + "'");
}

Method default_method(Regime r) {
  if (is_dense_regime(r)) return Method::PureCDDense;
  if (is_sparse_regime(r)) return Method::PureCDSparse;
  return Method::PDHG;
}

OutputRule default_output_rule(Regime r) {
  switch (r) {
    case Regime::DenseImportance: return OutputRule::Ergodic;
    case Regime::LambdaRestart: return OutputRule::LambdaWeighted;
    case Regime::SparseConvex: return OutputRule::RandomIterate;
    case Regime::PDHGBaseline: return OutputRule::Ergodic;
    default: return OutputRule::LastIterate;
  }
}

NumericalError::NumericalError(std::size_t k, const std::string& what)
    : std::runtime_error(what + " at iteration " + std::to_string(k)), k_(k) {}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t z = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

RowSampler::RowSampler(const Vector& p, bool uniform) : n_(p.size()), uniform_(uniform) {
  if (n_ == 0) throw SolverError("empty sampling law");
  if (!uniform_) {
    cdf_.resize(n_);
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      s += p[i];
      cdf_[i] = s;
    }
    for (double& c : cdf_) c /= s;
  }
}

std::size_t RowSampler::operator()(double u) const {
  if (uniform_) {
    return std::min(n_ - 1, static_cast<std::size_t>(u * static_cast<double>(n_)));
  }
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min(n_ - 1, static_cast<std::size_t>(it - cdf_.begin()));
}

IterateState IterateState::start(const SaddleProblem& p, const Vector& x0, const Vector& y0) {
  IterateState st;
  st.x = x0.empty() ? Vector(p.d(), 0.0) : x0;
  st.y = y0.empty() ? Vector(p.n(), 0.0) : y0;
  if (st.x.size() != p.d() || st.y.size() != p.n()) {
    throw SolverError("starting point has the wrong dimension");
  }
  for (double v : st.x)
    if (!std::isfinite(v)) throw SolverError("starting point is not finite");
  for (double v : st.y)
    if (!std::isfinite(v)) throw SolverError("starting point is not finite");
  st.xbar = st.x;
  st.cache = DualCache(p.A, st.y);
  return st;
}

void purecd_dense_step(const SaddleProblem& p, StepSchedule& s, IterateState& st,
                       std::size_t i) {
  const std::size_t d = p.d();
  for (std::size_t j = 0; j < d; ++j) {
    const double t = s.primal_step(j);
    st.xbar[j] = prox(p.g[j], t, st.x[j] - t * st.cache[j]);
  }
  const double sig = s.dual_step(i);
  const double yi = prox(p.h_conj[i], sig, st.y[i] + sig * st.cache.row_dot(p.A, i, st.xbar));
  const double delta = yi - st.y[i];
  st.x = st.xbar;
  auto cols = p.A.row_cols(i);
  auto vals = p.A.row_vals(i);
  for (std::size_t t = 0; t < cols.size(); ++t) {
    st.x[cols[t]] -= s.extrapolation(cols[t], i) * vals[t] * delta;
  }
  st.y[i] = yi;
  if (delta != 0.0) st.cache.apply_dual_delta(p.A, i, delta);
  st.cost += d + cols.size();
  ++st.k;
  s.advance();
}

void purecd_sparse_step(const SaddleProblem& p, StepSchedule& s, IterateState& st,
                        std::size_t i) {
  auto cols = p.A.row_cols(i);
  auto vals = p.A.row_vals(i);
  double dot = 0.0;
  for (std::size_t t = 0; t < cols.size(); ++t) {
    const std::size_t j = cols[t];
    const double tj = s.primal_step(j);
    st.xbar[j] = prox(p.g[j], tj, st.x[j] - tj * st.cache[j]);
    dot += vals[t] * st.xbar[j];
  }
  const double sig = s.dual_step(i);
  const double yi = prox(p.h_conj[i], sig, st.y[i] + sig * dot);
  const double delta = yi - st.y[i];
  for (std::size_t t = 0; t < cols.size(); ++t) {
    const std::size_t j = cols[t];
    st.x[j] = st.xbar[j] - s.extrapolation(j, i) * vals[t] * delta;
  }
  st.y[i] = yi;
  if (delta != 0.0) st.cache.apply_dual_delta(p.A, i, delta);
  st.cost += cols.size();
  ++st.k;
  s.advance();
}

void lambda_init_step(const SaddleProblem& p, StepSchedule& s, IterateState& st) {
  if (s.regime() != Regime::LambdaRestart || st.k != 0 || s.k() != 0) {
    throw SolverError("lambda_init_step runs once, at k = 0, for the lambda_restart regime");
  }
  const double tau = s.init_primal_step();
  const double sig = s.init_dual_step();
  for (std::size_t j = 0; j < p.d(); ++j) {
    st.x[j] = prox(p.g[j], tau, st.x[j] - tau * st.cache[j]);
  }
  st.xbar = st.x;
  const Vector ax = matvec(p.A, st.x);
  Vector ynew(p.n());
  for (std::size_t i = 0; i < p.n(); ++i) ynew[i] = prox(p.h_conj[i], sig, st.y[i] + sig * ax[i]);
  apply_full_dual_change(p.A, st, ynew);
  st.cost += full_step_cost(p);
  ++st.k;
  s.advance();
}

void pdhg_step(const SaddleProblem& p, StepSchedule& s, IterateState& st) {
  const double tau = s.pdhg_tau();
  const double sig = s.pdhg_sigma();
  for (std::size_t j = 0; j < p.d(); ++j) {
    st.xbar[j] = prox(p.g[j], tau, st.x[j] - tau * st.cache[j]);
  }
  const Vector ax = matvec(p.A, st.xbar);
  Vector ynew(p.n());
  Vector delta(p.n());
  for (std::size_t i = 0; i < p.n(); ++i) {
    ynew[i] = prox(p.h_conj[i], sig, st.y[i] + sig * ax[i]);
    delta[i] = ynew[i] - st.y[i];
  }
  const Vector atd = matvec_t(p.A, delta);
  for (std::size_t j = 0; j < p.d(); ++j) st.x[j] = st.xbar[j] - tau * atd[j];
  apply_full_dual_change(p.A, st, ynew);
  st.cost += full_step_cost(p);
  ++st.k;
  s.advance();
}

void gda_step(const SaddleProblem& p, StepSchedule& s, IterateState& st) {
  const double tau = s.pdhg_tau();
  const double sig = s.pdhg_sigma();
  for (std::size_t j = 0; j < p.d(); ++j) {
    st.x[j] = prox(p.g[j], tau, st.x[j] - tau * st.cache[j]);
  }
  st.xbar = st.x;
  const Vector ax = matvec(p.A, st.x);
  Vector ynew(p.n());
  for (std::size_t i = 0; i < p.n(); ++i) ynew[i] = prox(p.h_conj[i], sig, st.y[i] + sig * ax[i]);
  apply_full_dual_change(p.A, st, ynew);
  st.cost += full_step_cost(p);
  ++st.k;
  s.advance();
}

void full_bar_iterates(const SaddleProblem& p, const StepSchedule& s, const IterateState& st,
                       Vector& xbar, Vector& ybar) {
  xbar.resize(p.d());
  for (std::size_t j = 0; j < p.d(); ++j) {
    const double t = s.primal_step(j);
    xbar[j] = prox(p.g[j], t, st.x[j] - t * st.cache[j]);
  }
  const Vector ax = matvec(p.A, xbar);
  ybar.resize(p.n());
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double sig = s.dual_step(i);
    ybar[i] = prox(p.h_conj[i], sig, st.y[i] + sig * ax[i]);
  }
}

LazyWeightedSum::LazyWeightedSum(std::span<const double> v0)
    : v_(v0.begin(), v0.end()), s_(v0.size(), 0.0), mark_(v0.size(), 0.0) {}

void LazyWeightedSum::set(std::size_t i, double value) {
  s_[i] += v_[i] * (weight_ - mark_[i]);
  mark_[i] = weight_;
  v_[i] = value;
}

Vector LazyWeightedSum::sum() const {
  Vector out(v_.size());
  for (std::size_t i = 0; i < v_.size(); ++i) out[i] = s_[i] + v_[i] * (weight_ - mark_[i]);
  return out;
}

std::vector<std::size_t> geometric_checkpoints(std::size_t K, double ratio) {
  if (!(ratio > 1.0)) throw SolverError("checkpoint ratio must exceed 1");
  std::vector<std::size_t> out{0};
  double k = 1.0;
  while (k <= static_cast<double>(K)) {
    const auto kk = static_cast<std::size_t>(std::llround(k));
    if (kk > out.back()) out.push_back(kk);
    k *= ratio;
  }
  if (out.back() != K) out.push_back(K);
  return out;
}

std::vector<std::size_t> linear_checkpoints(std::size_t K, std::size_t step) {
  if (step == 0) throw SolverError("checkpoint step must be positive");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k <= K; k += step) out.push_back(k);
  if (out.back() != K) out.push_back(K);
  return out;
}

namespace {

void check_compatible(Method m, OutputRule r, Regime reg) {
  const bool ok_method = (m == Method::PureCDDense && is_dense_regime(reg)) ||
                         (m == Method::PureCDSparse && is_sparse_regime(reg)) ||
                         ((m == Method::PDHG || m == Method::GDA) && reg == Regime::PDHGBaseline);
  if (!ok_method) {
    throw SolverError(std::string("method ") + method_name(m) + " cannot use the " +
                      regime_name(reg) + " schedule");
  }
  if (r == OutputRule::LambdaWeighted && reg != Regime::LambdaRestart) {
    throw SolverError("lambda_weighted output needs the lambda_restart schedule");
  }
  if (r == OutputRule::RandomIterate && reg == Regime::LambdaRestart) {
    throw SolverError("random_iterate output is not defined for lambda_restart");
  }
}

// Maintains whatever the output rule needs, one step at a time.
class OutputTracker {
 public:
  OutputTracker(const SaddleProblem& p, Method m, OutputRule r, const IterateState& st,
                const std::vector<std::size_t>& checkpoints, std::uint64_t seed,
                bool dual_bar)
      : p_(p), method_(m), rule_(r), x0_(st.x), y0_(st.y), ysum_(st.y),
        dual_bar_(dual_bar && r == OutputRule::Ergodic) {
    if (dual_bar_) ybar_sum_.assign(p.n(), 0.0);
    if (rule_ == OutputRule::Ergodic && method_ == Method::PureCDSparse) xlazy_ = LazyWeightedSum(st.x);
    if (rule_ == OutputRule::Ergodic || rule_ == OutputRule::LambdaWeighted) {
      xsum_.assign(p.d(), 0.0);
    }
    if (rule_ == OutputRule::RandomIterate) {
      for (std::size_t c : checkpoints) {
        if (c == 0) continue;
        const double u = counter_uniform(seed, 1, c);
        const std::size_t khat =
            1 + std::min(c - 1, static_cast<std::size_t>(u * static_cast<double>(c)));
        capture_at_[khat - 1].push_back(c);
      }
    }
  }

  void before_step(const StepSchedule& s, const IterateState& st) {
    if (dual_bar_) {
      Vector xb, yb;
      full_bar_iterates(p_, s, st, xb, yb);
      for (std::size_t i = 0; i < p_.n(); ++i) ybar_sum_[i] += yb[i];
    }
    auto it = capture_at_.find(st.k);
    if (it == capture_at_.end()) return;
    OutputPair pr;
    full_bar_iterates(p_, s, st, pr.x, pr.y);
    for (std::size_t c : it->second) {
      pr.k = c;
      captured_[c] = pr;
    }
  }

  // After the lambda-restart first step: weight lambda_0 = 1 on x_bar_1.
  void after_init(const IterateState& st) {
    if (rule_ == OutputRule::LambdaWeighted || rule_ == OutputRule::Ergodic) {
      for (std::size_t j = 0; j < p_.d(); ++j) xsum_[j] += st.xbar[j];
      xweight_ += 1.0;
      for (std::size_t i = 0; i < p_.n(); ++i) ysum_.set(i, st.y[i]);
      if (rule_ == OutputRule::Ergodic) ysum_.accumulate(1.0);
    }
  }

  // lam_k, lam_next: lambda_k used by the step and lambda_{k+1}.
  void after_step(const IterateState& st, std::size_t row, double lam_k, double lam_next) {
    if (rule_ != OutputRule::Ergodic && rule_ != OutputRule::LambdaWeighted) return;
    const bool coordinate = method_ == Method::PureCDDense || method_ == Method::PureCDSparse;
    if (coordinate) {
      ysum_.set(row, st.y[row]);
    } else {
      for (std::size_t i = 0; i < p_.n(); ++i) ysum_.set(i, st.y[i]);
    }
    if (rule_ == OutputRule::LambdaWeighted) {
      const double nd = static_cast<double>(p_.n());
      for (std::size_t j = 0; j < p_.d(); ++j) xsum_[j] += lam_k * st.xbar[j];
      xweight_ += lam_k;
      ysum_.accumulate(nd * lam_k - (nd - 1.0) * lam_next);
      return;
    }
    if (method_ == Method::PureCDSparse) {
      for (std::size_t j : p_.A.row_cols(row)) xlazy_.set(j, st.x[j]);
      xlazy_.accumulate(1.0);
    } else {
      for (std::size_t j = 0; j < p_.d(); ++j) xsum_[j] += st.xbar[j];
    }
    xweight_ += 1.0;
    ysum_.accumulate(1.0);
  }

  OutputPair output(const StepSchedule& s, const IterateState& st) {
    OutputPair out;
    out.k = st.k;
    if (st.k == 0) {
      out.x = x0_;
      out.y = y0_;
      return out;
    }
    switch (rule_) {
      case OutputRule::LastIterate:
        out.x = method_ == Method::PDHG ? st.xbar : st.x;
        out.y = st.y;
        break;
      case OutputRule::RandomIterate: {
        auto it = captured_.find(st.k);
        if (it == captured_.end()) throw SolverError("random iterate was not captured");
        out = it->second;
        break;
      }
      case OutputRule::Ergodic: {
        out.x = method_ == Method::PureCDSparse ? xlazy_.sum() : xsum_;
        for (double& v : out.x) v /= xweight_;
        if (dual_bar_) {
          out.y = ybar_sum_;
          for (double& v : out.y) v /= xweight_;
        } else {
          out.y = ysum_.sum();
          for (double& v : out.y) v /= ysum_.total_weight();
        }
        break;
      }
      case OutputRule::LambdaWeighted: {
        // sum_{t=1}^{K-1} w_t y_{t+1} holds one term too many (t = K - 1);
        // swapping it for n lambda_{K-1} y_K leaves (n - 1) lambda_K y_K.
        const double nd = static_cast<double>(p_.n());
        out.x = xsum_;
        for (double& v : out.x) v /= xweight_;
        out.y = ysum_.sum();
        const double tail = (nd - 1.0) * s.lambda();
        for (std::size_t i = 0; i < out.y.size(); ++i) {
          out.y[i] = (out.y[i] + tail * st.y[i]) / xweight_;
        }
        break;
      }
    }
    if (rule_ == OutputRule::Ergodic || rule_ == OutputRule::LambdaWeighted) {
      // Averages are convex combinations of feasible points; undo rounding
      // that lands just outside a domain boundary.
      for (std::size_t j = 0; j < out.x.size(); ++j) {
        out.x[j] = std::clamp(out.x[j], p_.g[j].dom_lo(), p_.g[j].dom_hi());
      }
      for (std::size_t i = 0; i < out.y.size(); ++i) {
        out.y[i] = std::clamp(out.y[i], p_.h_conj[i].dom_lo(), p_.h_conj[i].dom_hi());
      }
    }
    return out;
  }

 private:
  const SaddleProblem& p_;
  Method method_;
  OutputRule rule_;
  Vector x0_, y0_;
  Vector xsum_;
  double xweight_ = 0.0;
  LazyWeightedSum xlazy_;
  LazyWeightedSum ysum_;
  bool dual_bar_;
  Vector ybar_sum_;
  std::map<std::size_t, std::vector<std::size_t>> capture_at_;
  std::map<std::size_t, OutputPair> captured_;
};

}  // namespace

Trace run(const SaddleProblem& p, StepSchedule schedule, const RunConfig& cfg) {
  if (schedule.n() != p.n() || schedule.d() != p.d()) {
    throw SolverError("schedule dimensions do not match the problem");
  }
  if (schedule.k() != 0) throw SolverError("schedule must start at k = 0");
  const Method method = cfg.method.value_or(default_method(schedule.regime()));
  const OutputRule rule = cfg.output.value_or(default_output_rule(schedule.regime()));
  check_compatible(method, rule, schedule.regime());
  if (method == Method::PureCDSparse) {
    if (!schedule.uniform_sampling()) throw SolverError("sparse PURE-CD needs uniform sampling");
    if (p.A.has_empty_column()) throw SolverError("sparse PURE-CD needs every column nonempty");
  }

  const std::size_t K = cfg.iterations;
  std::vector<std::size_t> cps =
      cfg.checkpoints.empty() ? geometric_checkpoints(K) : cfg.checkpoints;
  cps.push_back(0);
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  while (!cps.empty() && cps.back() > K) cps.pop_back();

  Trace tr;
  tr.seed = cfg.seed;
  tr.method = method;
  tr.output = rule;
  tr.regime = schedule.regime();

  IterateState st = IterateState::start(p, cfg.x0, cfg.y0);
  OutputTracker out(p, method, rule, st, cps, cfg.seed, cfg.ergodic_dual_bar);
  const bool coordinate = method == Method::PureCDDense || method == Method::PureCDSparse;
  const RowSampler sampler = coordinate
                                 ? RowSampler(schedule.probabilities(), schedule.uniform_sampling())
                                 : RowSampler(Vector{1.0}, true);
  const CompactSet* z = cfg.z ? &*cfg.z : nullptr;
  std::size_t next_cp = 0;

  auto record = [&] {
    const OutputPair pr = out.output(schedule, st);
    tr.records.push_back(evaluate_metrics(p, z, pr.x, pr.y, st.k, st.cost));
    if (cfg.keep_outputs) tr.outputs.push_back(pr);
  };
  auto at_checkpoint = [&] {
    while (next_cp < cps.size() && cps[next_cp] == st.k) {
      record();
      ++next_cp;
    }
  };

  at_checkpoint();
  Vector x_before, y_before;
  while (st.k < K) {
    if (method == Method::PureCDDense && schedule.regime() == Regime::LambdaRestart &&
        st.k == 0) {
      lambda_init_step(p, schedule, st);
      for (double v : st.x) require_finite(st.k, v, "primal iterate");
      for (double v : st.y) require_finite(st.k, v, "dual iterate");
      out.after_init(st);
      at_checkpoint();
      continue;
    }
    out.before_step(schedule, st);
    const double lam_k = schedule.lambda();
    std::size_t row = 0;
    switch (method) {
      case Method::PureCDDense:
        row = sampler(counter_uniform(cfg.seed, 0, st.k));
        purecd_dense_step(p, schedule, st, row);
        require_finite(st.k, st.y[row], "dual iterate");
        for (double v : st.x) require_finite(st.k, v, "primal iterate");
        break;
      case Method::PureCDSparse: {
        row = sampler(counter_uniform(cfg.seed, 0, st.k));
        if (cfg.check_locality) {
          x_before = st.x;
          y_before = st.y;
        }
        purecd_sparse_step(p, schedule, st, row);
        require_finite(st.k, st.y[row], "dual iterate");
        for (std::size_t j : p.A.row_cols(row)) require_finite(st.k, st.x[j], "primal iterate");
        if (cfg.check_locality) {
          auto cols = p.A.row_cols(row);
          for (std::size_t j = 0; j < p.d(); ++j) {
            if (st.x[j] != x_before[j] && !std::binary_search(cols.begin(), cols.end(), j)) {
              ++tr.locality_violations;
            }
          }
          for (std::size_t i = 0; i < p.n(); ++i) {
            if (i != row && st.y[i] != y_before[i]) ++tr.locality_violations;
          }
        }
        break;
      }
      case Method::PDHG:
      case Method::GDA:
        if (method == Method::PDHG) {
          pdhg_step(p, schedule, st);
        } else {
          gda_step(p, schedule, st);
        }
        for (double v : st.x) require_finite(st.k, v, "primal iterate");
        for (double v : st.y) require_finite(st.k, v, "dual iterate");
        break;
    }
    out.after_step(st, row, lam_k, schedule.lambda());
    at_checkpoint();
  }
  tr.iterations = st.k;
  tr.total_cost = st.cost;
  return tr;
}

}  // namespace purecd
