#include "purecd/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace purecd {

namespace {

void require_positive_rows(const SparseMatrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (!(a.row_norm(i) > 0)) {
      throw ScheduleError("row " + std::to_string(i) + " is zero; sampling is undefined");
    }
  }
}

void require_nonempty_columns(const SparseMatrix& a) {
  for (std::size_t j = 0; j < a.cols(); ++j) {
    if (a.col_counts()[j] == 0) {
      throw ScheduleError("column " + std::to_string(j) +
                          " is empty; sparse PURE-CD would never update it");
    }
  }
}

void require_gamma(double gamma) {
  if (!(gamma > 0 && gamma < 1)) throw ScheduleError("gamma must lie in (0, 1)");
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::DenseImportance: return "dense_importance";
    case Regime::LambdaRestart: return "lambda_restart";
    case Regime::SparseConvex: return "sparse_convex";
    case Regime::SCSC: return "scsc";
    case Regime::SCC: return "scc";
    case Regime::CSC: return "csc";
    case Regime::PDHGBaseline: return "pdhg";
  }
  return "?";
}

Regime regime_from_name(const std::string& name) {
  for (Regime r : {Regime::DenseImportance, Regime::LambdaRestart, Regime::SparseConvex,
                   Regime::SCSC, Regime::SCC, Regime::CSC, Regime::PDHGBaseline}) {
    if (name == regime_name(r)) return r;
  }
  throw ScheduleError("unknown regime '" + name + "'");
}

bool is_dense_regime(Regime r) {
  return r == Regime::DenseImportance || r == Regime::LambdaRestart;
}

bool is_sparse_regime(Regime r) {
  return r == Regime::SparseConvex || r == Regime::SCSC || r == Regime::SCC ||
         r == Regime::CSC;
}

StepSchedule StepSchedule::dense_importance(const SparseMatrix& a, double gamma) {
  require_gamma(gamma);
  require_positive_rows(a);
  StepSchedule s;
  s.regime_ = Regime::DenseImportance;
  s.gamma_ = gamma;
  s.n_ = a.rows();
  s.d_ = a.cols();
  const double total = a.sum_row_norms();
  s.tau_scalar_ = 1.0 / total;
  s.tau_.assign(s.d_, s.tau_scalar_);
  s.p_.resize(s.n_);
  s.sigma_.resize(s.n_);
  const double unif = 1.0 / static_cast<double>(s.n_);
  bool uniform = true;
  for (std::size_t i = 0; i < s.n_; ++i) {
    s.p_[i] = a.row_norm(i) / total;
    s.sigma_[i] = gamma / a.row_norm(i);
    uniform = uniform && std::abs(s.p_[i] - unif) <= 1e-12 * unif;
  }
  // Equal row norms up to rounding: use the exact uniform law so the
  // sampler takes the same path as sparse PURE-CD.
  if (uniform) s.p_.assign(s.n_, unif);
  s.uniform_ = uniform;
  s.theta_scalar_ = 1.0;
  return s;
}

StepSchedule StepSchedule::lambda_restart(const SparseMatrix& a, double gamma) {
  require_gamma(gamma);
  require_positive_rows(a);
  if (a.rows() < 2) throw ScheduleError("lambda_restart needs n >= 2");
  StepSchedule s;
  s.regime_ = Regime::LambdaRestart;
  s.gamma_ = gamma;
  s.n_ = a.rows();
  s.d_ = a.cols();
  const double nd = static_cast<double>(s.n_);
  s.tau_scalar_ = 1.0 / (nd * a.max_row_norm());
  s.init_sigma_ = gamma / (nd * a.max_row_norm());
  s.tau_.assign(s.d_, s.tau_scalar_);
  s.sigma_.resize(s.n_);
  for (std::size_t i = 0; i < s.n_; ++i) s.sigma_[i] = gamma / a.row_norm(i);
  s.p_.assign(s.n_, 1.0 / nd);
  s.uniform_ = true;
  s.theta_scalar_ = 1.0;
  s.lambda_cur_ = 1.0;
  return s;
}

StepSchedule StepSchedule::sparse_convex(const SparseMatrix& a) {
  require_positive_rows(a);
  require_nonempty_columns(a);
  StepSchedule s;
  s.regime_ = Regime::SparseConvex;
  s.n_ = a.rows();
  s.d_ = a.cols();
  const double nd = static_cast<double>(s.n_);
  s.pi_ = a.pi();
  s.tau_.resize(s.d_);
  s.theta_.resize(s.d_);
  for (std::size_t j = 0; j < s.d_; ++j) {
    s.tau_[j] = 1.0 / (s.pi_[j] * nd * a.max_row_norm());
    s.theta_[j] = nd * s.pi_[j];
  }
  s.sigma_.resize(s.n_);
  for (std::size_t i = 0; i < s.n_; ++i) s.sigma_[i] = 1.0 / a.row_norm(i);
  s.p_.assign(s.n_, 1.0 / nd);
  return s;
}

StepSchedule StepSchedule::scsc(const SparseMatrix& a, double mu_g, double mu_h) {
  if (!(mu_g > 0 && mu_h > 0)) throw ScheduleError("scsc needs mu_g > 0 and mu_h > 0");
  require_positive_rows(a);
  require_nonempty_columns(a);
  StepSchedule s;
  s.regime_ = Regime::SCSC;
  s.n_ = a.rows();
  s.d_ = a.cols();
  s.mu_g_ = mu_g;
  s.mu_h_ = mu_h;
  const double nd = static_cast<double>(s.n_);
  const double r = std::sqrt(mu_h) / std::sqrt(mu_g);
  s.pi_ = a.pi();
  s.tau_.resize(s.d_);
  s.theta_.resize(s.d_);
  for (std::size_t j = 0; j < s.d_; ++j) {
    s.tau_[j] = r / (a.max_row_norm() * s.pi_[j] * nd);
    s.theta_[j] = s.pi_[j] * nd / (1.0 + mu_g * s.tau_[j]);
  }
  s.sigma_.resize(s.n_);
  for (std::size_t i = 0; i < s.n_; ++i) s.sigma_[i] = 1.0 / (r * a.row_norm(i));
  s.p_.assign(s.n_, 1.0 / nd);
  const double kappa = a.max_row_norm() / std::sqrt(mu_g * mu_h);
  s.contraction_ = 1.0 + 1.0 / (nd - 1.0 + nd * kappa);
  return s;
}

StepSchedule StepSchedule::scc(const SparseMatrix& a, double mu_g) {
  if (!(mu_g > 0)) throw ScheduleError("scc needs mu_g > 0");
  require_positive_rows(a);
  require_nonempty_columns(a);
  StepSchedule s;
  s.regime_ = Regime::SCC;
  s.n_ = a.rows();
  s.d_ = a.cols();
  s.mu_g_ = mu_g;
  const double nd = static_cast<double>(s.n_);
  s.pi_ = a.pi();
  s.ttau_ = std::min(1.0 / nd, mu_g / (nd * a.max_row_norm()));
  s.sig_ = 1.0 / a.max_row_norm();
  s.ttau0_sig0_ = s.ttau_ * s.sig_;
  s.p_.assign(s.n_, 1.0 / nd);
  return s;
}

StepSchedule StepSchedule::csc(const SparseMatrix& a, double mu_h) {
  if (!(mu_h > 0)) throw ScheduleError("csc needs mu_h > 0");
  require_positive_rows(a);
  require_nonempty_columns(a);
  StepSchedule s;
  s.regime_ = Regime::CSC;
  s.n_ = a.rows();
  s.d_ = a.cols();
  s.mu_h_ = mu_h;
  const double nd = static_cast<double>(s.n_);
  s.pi_ = a.pi();
  const double m = a.max_row_norm();
  s.ttau_ = mu_h / (nd * m * m);
  s.tsig_ = 1.0 / (2.0 * nd - 1.0);
  s.ttau0_sig0_ = s.ttau_ * s.dual_step(0);
  s.p_.assign(s.n_, 1.0 / nd);
  return s;
}

StepSchedule StepSchedule::pdhg_baseline(const SparseMatrix& a, double gamma) {
  require_gamma(gamma);
  StepSchedule s;
  s.regime_ = Regime::PDHGBaseline;
  s.gamma_ = gamma;
  s.n_ = a.rows();
  s.d_ = a.cols();
  const double norm = spectral_norm(a);
  if (!(norm > 0)) throw ScheduleError("pdhg needs a nonzero matrix");
  s.tau_scalar_ = std::sqrt(gamma) / norm;
  s.init_sigma_ = s.tau_scalar_;
  return s;
}

StepSchedule StepSchedule::lift_to_sparse(const StepSchedule& dense) {
  if (dense.regime_ != Regime::DenseImportance) {
    throw ScheduleError("lift_to_sparse expects a constant dense PURE-CD schedule");
  }
  if (!dense.uniform_) throw ScheduleError("lift_to_sparse needs uniform sampling");
  StepSchedule s;
  s.regime_ = Regime::SparseConvex;
  s.gamma_ = dense.gamma_;
  s.n_ = dense.n_;
  s.d_ = dense.d_;
  s.tau_ = dense.tau_;
  s.sigma_ = dense.sigma_;
  s.p_ = dense.p_;
  s.pi_.assign(s.d_, 1.0);
  s.theta_.assign(s.d_, dense.theta_scalar_ / dense.p_[0]);
  return s;
}

double StepSchedule::primal_step(std::size_t j) const {
  switch (regime_) {
    case Regime::LambdaRestart: return tau_scalar_ * lambda_cur_;
    case Regime::SCC: return ttau_ / (mu_g_ * pi_[j] - mu_g_ * (1.0 - pi_[j]) * ttau_);
    case Regime::CSC: return ttau_ / pi_[j];
    case Regime::PDHGBaseline: return tau_scalar_;
    default: return tau_[j];
  }
}

double StepSchedule::dual_step(std::size_t i) const {
  switch (regime_) {
    case Regime::LambdaRestart: return sigma_[i] * lambda_cur_;
    case Regime::SCC: return sig_;
    case Regime::CSC: {
      const double nd = static_cast<double>(n_);
      return nd * tsig_ / (mu_h_ - (nd - 1.0) * mu_h_ * tsig_);
    }
    case Regime::PDHGBaseline: return init_sigma_;
    default: return sigma_[i];
  }
}

double StepSchedule::theta(std::size_t j) const {
  double t = 0.0;
  switch (regime_) {
    case Regime::DenseImportance:
    case Regime::LambdaRestart:
    case Regime::PDHGBaseline: t = theta_scalar_; break;
    case Regime::SCC: t = pi_[j] * static_cast<double>(n_) / (1.0 + mu_g_ * primal_step(j)); break;
    case Regime::CSC: t = pi_[j] * static_cast<double>(n_); break;
    default: t = theta_[j]; break;
  }
  if (!theta_perturb_.empty()) t *= theta_perturb_[j];
  return t;
}

double StepSchedule::extrapolation(std::size_t j, std::size_t i) const {
  if (is_dense_regime(regime_)) return primal_step(j) * theta(j) / p_[i];
  return primal_step(j) * theta(j);
}

void StepSchedule::advance() {
  ++k_;
  switch (regime_) {
    case Regime::LambdaRestart: {
      const double nd = static_cast<double>(n_);
      lambda_cur_ = k_ == 1 ? 1.0 / (nd - 1.0) : std::min(1.0, nd / (nd - 1.0) * lambda_cur_);
      break;
    }
    case Regime::SCC:
      sig_ *= std::sqrt(1.0 + ttau_);
      ttau_ = acc_rate_next(ttau_);
      break;
    case Regime::CSC:
      ttau_ *= std::sqrt(1.0 + tsig_);
      tsig_ = acc_rate_next(tsig_);
      break;
    default: break;
  }
}

double StepSchedule::lambda_sequence(std::size_t n, std::size_t k) {
  if (k == 0) return 1.0;
  const double nd = static_cast<double>(n);
  double lam = 1.0 / (nd - 1.0);
  for (std::size_t t = 1; t < k && lam < 1.0; ++t) lam = std::min(1.0, nd / (nd - 1.0) * lam);
  return lam;
}

double StepSchedule::Lambda(std::size_t K) const {
  double s = 0.0;
  const double nd = static_cast<double>(n_);
  double lam = 1.0;
  for (std::size_t k = 0; k < K; ++k) {
    s += lam;
    lam = k == 0 ? 1.0 / (nd - 1.0) : std::min(1.0, nd / (nd - 1.0) * lam);
  }
  return s;
}

StepCheck StepSchedule::validate(const SparseMatrix& a, double tol) const {
  StepCheck out;
  out.worst_margin = INFINITY;
  auto note = [&](double margin, double scale, const std::string& what) {
    const double rel = margin / std::max(1.0, std::abs(scale));
    if (rel < out.worst_margin) out.worst_margin = rel;
    if (rel < -tol) {
      out.ok = false;
      if (out.detail.empty()) out.detail = what;
    }
  };
  const double nd = static_cast<double>(n_);
  switch (regime_) {
    case Regime::DenseImportance:
    case Regime::LambdaRestart:
      for (std::size_t i = 0; i < n_; ++i) {
        const double v = dual_step(i) * primal_step(0) / p_[i] * a.row_norm(i) * a.row_norm(i);
        note(gamma_ - v, gamma_, "sigma_i tau / p_i ||A_i||^2 <= gamma fails at row " +
                                      std::to_string(i));
      }
      break;
    case Regime::SparseConvex:
    case Regime::SCSC:
      for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        auto cols = a.row_cols(i);
        auto vals = a.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
          const std::size_t j = cols[k];
          s += nd * pi_[j] * primal_step(j) * vals[k] * vals[k];
        }
        const double inv = 1.0 / dual_step(i);
        note(inv - s, inv, "1/sigma_i >= sum_j n pi_j tau_j A_ij^2 fails at row " +
                               std::to_string(i));
      }
      break;
    case Regime::SCC: {
      for (std::size_t j = 0; j < d_; ++j) {
        const double den = mu_g_ * pi_[j] - mu_g_ * (1.0 - pi_[j]) * ttau_;
        note(den, mu_g_, "primal step denominator nonpositive at column " + std::to_string(j));
      }
      for (std::size_t i = 0; i < n_; ++i) {
        const double v = sig_ * ttau_ * nd * a.row_norm(i) * a.row_norm(i) / mu_g_;
        note(1.0 - v, 1.0, "sigma_k ttau_k n ||A_i||^2 / mu_g <= 1 fails at row " +
                               std::to_string(i));
      }
      const double prod = ttau_ * sig_;
      note(-std::abs(prod - ttau0_sig0_) / ttau0_sig0_, 1.0, "ttau_k sigma_k drifted");
      break;
    }
    case Regime::CSC: {
      const double sk = dual_step(0);
      note(sk, 1.0, "sigma_k nonpositive");
      for (std::size_t i = 0; i < n_; ++i) {
        const double v = sk * ttau_ * nd * a.row_norm(i) * a.row_norm(i);
        note(1.0 - v, 1.0, "sigma_k ttau_k n ||A_i||^2 <= 1 fails at row " + std::to_string(i));
      }
      note((ttau0_sig0_ - ttau_ * sk) / ttau0_sig0_, 1.0, "ttau_k sigma_k grew");
      break;
    }
    case Regime::PDHGBaseline: {
      const double norm = spectral_norm(a);
      note(gamma_ - tau_scalar_ * init_sigma_ * norm * norm, gamma_, "tau sigma ||A||^2 <= gamma fails");
      break;
    }
  }
  if (out.worst_margin == INFINITY) out.worst_margin = 0.0;
  return out;
}

void StepSchedule::perturb_theta(std::size_t j, double eps) {
  if (theta_perturb_.empty()) theta_perturb_.assign(d_, 1.0);
  theta_perturb_.at(j) *= 1.0 + eps;
}

std::size_t lambda_ramp_length(std::size_t n) {
  std::size_t k = 1;
  while (StepSchedule::lambda_sequence(n, k) < 1.0) ++k;
  return k;
}

K0Bounds k0_bounds(std::size_t n) {
  const double nd = static_cast<double>(n);
  const double l = std::log(nd - 1.0);
  return {(nd - 1.0) * l, 1.0 + nd * l};
}

}  // namespace purecd
