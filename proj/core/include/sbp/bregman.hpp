#pragma once

#include "sbp/linalg.hpp"

namespace sbp {

enum class GeneratingKind { SquaredNorm, ElasticNet };

/// Absolute-plus-relative tolerance pair used by the primal/dual checks.
struct Tolerance {
  double abs = 1e-12;
  double rel = 1e-10;

  bool close(double a, double b) const;
};

/// The strongly convex function f that fixes the Bregman geometry:
///
///   SquaredNorm:  f(x) = 1/2 |x|^2
///   ElasticNet:   f(x) = 1/2 |x|^2 + lambda |x|_1
///
/// Both are 1-strongly convex. An ElasticNet with lambda == 0 is treated as
/// SquaredNorm by every operation (`is_smooth()` is true), so the two
/// produce bitwise-identical results.
class GeneratingFunction {
 public:
  static GeneratingFunction squared_norm() { return GeneratingFunction(GeneratingKind::SquaredNorm, 0.0); }
  static GeneratingFunction elastic_net(double lambda);

  GeneratingKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  double mu() const noexcept { return 1.0; }
  bool is_smooth() const noexcept { return kind_ == GeneratingKind::SquaredNorm || lambda_ == 0.0; }

  double value(VectorRef x) const;
  /// f*(z) = 1/2 |S_lambda(z)|^2
  double conjugate(VectorRef z) const;
  /// grad f*(z): identity, or soft thresholding at lambda.
  Vector conjugate_gradient(VectorRef z) const;

 private:
  GeneratingFunction(GeneratingKind kind, double lambda) : kind_(kind), lambda_(lambda) {}

  GeneratingKind kind_;
  double lambda_;
};

/// Primal iterate together with a subgradient x_star in the subdifferential of f at x.
struct PrimalDualPair {
  Vector x;
  Vector x_star;

  /// Builds the consistent pair x = grad f*(x_star).
  static PrimalDualPair from_dual(const GeneratingFunction& f, Vector x_star);
  /// True when x == grad f*(x_star) within `tol`.
  bool consistent(const GeneratingFunction& f, const Tolerance& tol = {}) const;
};

/// Componentwise max(|z| - lambda, 0) * sign(z).
Vector soft_threshold(VectorRef z, double lambda);
double soft_threshold(double z, double lambda);

Vector conjugate_gradient_map(const GeneratingFunction& f, VectorRef z);

/// D_f^{x*}(x, y) = f(y) - f(x) - <x*, y - x>.
double bregman_distance(const GeneratingFunction& f, const PrimalDualPair& from, VectorRef to);

/// phi(t) = f*(x_star - t a) + t beta, the one-dimensional dual objective of
/// a single-row Bregman projection onto {x : <a, x> = beta}.
double dual_objective(const GeneratingFunction& f, VectorRef x_star, VectorRef a, double beta, double t);
/// phi'(t) = -<a, grad f*(x_star - t a)> + beta.
double dual_derivative(const GeneratingFunction& f, VectorRef x_star, VectorRef a, double beta, double t);

/// Global minimiser of phi. Closed form for smooth f; otherwise the breakpoint
/// scan below. If `flops` is non-null the arithmetic performed is added to it.
/// Throws Errc::invalid_argument when a == 0.
double exact_dual_linesearch(const GeneratingFunction& f, VectorRef x_star, VectorRef a, double beta,
                             double* flops = nullptr);

/// Minimiser of 1/2 |S_lambda(x_star - t a)|^2 + t beta by sorting the (at
/// most 2n) kinks where a component of x_star - t a crosses +-lambda and
/// scanning for the sign change of the piecewise-linear derivative. Valid for
/// any lambda >= 0; used directly by exact_dual_linesearch when lambda > 0.
double breakpoint_linesearch(VectorRef x_star, VectorRef a, double beta, double lambda,
                             double* flops = nullptr);

/// t = <a, x> - beta (primal residual step; meaningful for unit-norm a).
double inexact_dual_step(VectorRef x, VectorRef a, double beta);

}  // namespace sbp
