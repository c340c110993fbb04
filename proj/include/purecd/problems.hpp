#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "purecd/prox.hpp"
#include "purecd/sparse_matrix.hpp"

namespace purecd {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// A known saddle point and, when the primal objective is available, its value.
struct Reference {
  Vector x_star;
  Vector y_star;
  std::optional<double> F_star;
  std::string method;
  double achieved_gap = 0.0;
};

/// min_x max_y  g(x) + <Ax, y> - h*(y)  with separable g and h*.
struct SaddleProblem {
  std::string name;
  SparseMatrix A;
  SeparableFunction g;       // length d
  SeparableFunction h_conj;  // length n
  std::optional<SeparableFunction> h_primal;
  // Per-row set C_i when h is the indicator of C = C_1 x ... x C_n.
  std::optional<std::vector<Interval>> constraint_set;
  double mu_g = 0.0;
  double mu_h = 0.0;
  std::optional<Reference> reference;

  std::size_t n() const { return A.rows(); }
  std::size_t d() const { return A.cols(); }

  /// Checks dimensions and that the moduli agree with the functions.
  void validate() const;
};

/// Assemble a problem and fill in the moduli from the functions.
SaddleProblem make_problem(std::string name, SparseMatrix a, SeparableFunction g,
                           SeparableFunction h_conj,
                           std::optional<SeparableFunction> h_primal = std::nullopt,
                           std::optional<std::vector<Interval>> constraint_set = std::nullopt);

/// Coordinate box for the restricted gap.
struct CompactSet {
  std::vector<Interval> x;
  std::vector<Interval> y;

  static CompactSet centered(std::span<const double> xc, std::span<const double> yc,
                             double radius);
  bool contains(std::span<const double> xv, std::span<const double> yv) const;
  /// Intersect with dom g x dom h*. The gap never picks points outside the
  /// domains, so this changes no gap value and only tightens D_Z.
  CompactSet clipped_to(const SaddleProblem& p) const;
  /// D_Z = max over the box of ||x - x0||^2 + ||y - y0||^2.
  double diameter_sq(std::span<const double> x0, std::span<const double> y0) const;
};

/// Default radius 2 (1 + ||x0 - x*||_inf + ||y0 - y*||_inf) around the
/// reference, clipped to the function domains. Requires a reference.
CompactSet default_compact_set(const SaddleProblem& p, std::span<const double> x0,
                               std::span<const double> y0);

/// Sum of squares ||x* - x0||^2 + ||y* - y0||^2; requires a reference.
double dist_to_reference_sq(const SaddleProblem& p, std::span<const double> x0,
                            std::span<const double> y0);

// ---- generators -----------------------------------------------------------

struct MatrixSpec {
  std::size_t n = 0;
  std::size_t d = 0;
  double density = 1.0;
  bool row_normalize = false;
};

/// Standard-normal entries with the given density. Every row and column gets
/// at least one entry, so pi^(j) >= 1/n holds for all j.
SparseMatrix random_matrix(const MatrixSpec& spec, std::uint64_t seed);

/// Linearly constrained QP: g_j(t) = a_j/2 t^2 + c_j t with a_j in [1, 2],
/// h = indicator of {b}, b = A x_feas. No reference attached (see oracle).
SaddleProblem make_constrained_qp(SparseMatrix a, Vector g_quad, Vector g_lin, Vector b);
SaddleProblem gen_constrained_qp(std::size_t n, std::size_t d, std::uint64_t seed,
                                 double density = 1.0, bool row_normalize = false);

/// Hinge-loss ERM: h_i(z) = (1/n) max(0, 1 - b_i z), g = reg/2 ||x||^2 (or 0).
/// Labels come from a planted separator with a few flipped signs.
SaddleProblem make_erm_hinge(SparseMatrix a, Vector labels, double reg);
SaddleProblem gen_erm_hinge(std::size_t n, std::size_t d, std::uint64_t seed, double reg,
                            double density = 1.0, bool row_normalize = true);

/// Lasso: h_i(z) = 1/2 (z - b_i)^2, so h_i*(v) = 1/2 v^2 + b_i v; g = lambda |.|.
SaddleProblem make_lasso(SparseMatrix a, Vector b, double lambda);
SaddleProblem gen_lasso(std::size_t n, std::size_t d, std::uint64_t seed, double lambda,
                        double density = 1.0, bool row_normalize = false);

/// Ridge regression in saddle form: g = mu_g/2 ||x||^2, h_i* = mu_h/2 v^2 + b_i v.
/// Both sides strongly convex.
SaddleProblem gen_ridge(std::size_t n, std::size_t d, std::uint64_t seed, double density,
                        double mu_g = 1.0, double mu_h = 1.0, bool row_normalize = false);

/// L(x, y) = x y on R x R with the saddle (0, 0) attached.
SaddleProblem gen_bilinear_toy();

/// F(x) = h(Ax) + g(x); requires h_primal.
ExtValue primal_objective(const SaddleProblem& p, std::span<const double> x);

/// FNV-1a over the matrix and function parameters.
std::uint64_t problem_hash(const SaddleProblem& p);

}  // namespace purecd
