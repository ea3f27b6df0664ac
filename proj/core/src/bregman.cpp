#include "sbp/bregman.hpp"

#include "sbp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace sbp {

bool Tolerance::close(double a, double b) const {
  return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

GeneratingFunction GeneratingFunction::elastic_net(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(Errc::invalid_argument, "elastic net weight must be finite and >= 0, got " +
                                            std::to_string(lambda));
  }
  return GeneratingFunction(GeneratingKind::ElasticNet, lambda);
}

double GeneratingFunction::value(VectorRef x) const {
  double v = 0.5 * x.squaredNorm();
  if (!is_smooth()) v += lambda_ * x.lpNorm<1>();
  return v;
}

double GeneratingFunction::conjugate(VectorRef z) const {
  if (is_smooth()) return 0.5 * z.squaredNorm();
  double v = 0.0;
  for (Index j = 0; j < z.size(); ++j) {
    const double s = soft_threshold(z[j], lambda_);
    v += s * s;
  }
  return 0.5 * v;
}

Vector GeneratingFunction::conjugate_gradient(VectorRef z) const {
  if (is_smooth()) return z;
  return soft_threshold(z, lambda_);
}

PrimalDualPair PrimalDualPair::from_dual(const GeneratingFunction& f, Vector x_star) {
  PrimalDualPair p;
  p.x = f.conjugate_gradient(x_star);
  p.x_star = std::move(x_star);
  return p;
}

bool PrimalDualPair::consistent(const GeneratingFunction& f, const Tolerance& tol) const {
  if (x.size() != x_star.size()) return false;
  const Vector expect = f.conjugate_gradient(x_star);
  for (Index j = 0; j < x.size(); ++j) {
    if (!tol.close(x[j], expect[j])) return false;
  }
  return true;
}

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

Vector soft_threshold(VectorRef z, double lambda) {
  Vector out(z.size());
  for (Index j = 0; j < z.size(); ++j) out[j] = soft_threshold(z[j], lambda);
  return out;
}

Vector conjugate_gradient_map(const GeneratingFunction& f, VectorRef z) {
  return f.conjugate_gradient(z);
}

double bregman_distance(const GeneratingFunction& f, const PrimalDualPair& from, VectorRef to) {
  if (from.x.size() != to.size() || from.x_star.size() != to.size()) {
    throw Error(Errc::dimension_mismatch, "bregman_distance: vector lengths differ");
  }
  // For a consistent pair, f(y) - f(x) - <x*, y - x> equals
  //   1/2 |y - x|^2 + sum_j (lambda |y_j| - (x*_j - x_j) y_j),
  // a sum of nonnegative terms, which avoids cancellation near the solution.
  const double quad = 0.5 * (to - from.x).squaredNorm();
  if (f.is_smooth()) return quad;
  const double lambda = f.lambda();
  double lin = 0.0;
  for (Index j = 0; j < to.size(); ++j) {
    lin += lambda * std::abs(to[j]) - (from.x_star[j] - from.x[j]) * to[j];
  }
  return quad + std::max(lin, 0.0);
}

double dual_objective(const GeneratingFunction& f, VectorRef x_star, VectorRef a, double beta, double t) {
  return f.conjugate(x_star - t * a) + t * beta;
}

double dual_derivative(const GeneratingFunction& f, VectorRef x_star, VectorRef a, double beta, double t) {
  return -a.dot(f.conjugate_gradient(x_star - t * a)) + beta;
}

namespace {

struct Kink {
  double t;
  Index j;
  bool enters;  // false: component leaves the active set; true: it re-enters with flipped sign
};

}  // namespace

double breakpoint_linesearch(VectorRef x_star, VectorRef a, double beta, double lambda, double* flops) {
  if (x_star.size() != a.size()) {
    throw Error(Errc::dimension_mismatch, "linesearch: x_star and a differ in length");
  }
  const Index n = a.size();

  // phi'(t) = beta - C + t D on every interval between kinks, where the sums
  // run over the active components (|x*_j - t a_j| > lambda) with sign s_j:
  //   C = sum a_j (x*_j - lambda s_j),  D = sum a_j^2.
  // For t -> -inf every component with a_j != 0 is active with s_j = sign(a_j).
  std::vector<Kink> kinks;
  kinks.reserve(static_cast<std::size_t>(2 * n));
  double C = 0.0;
  double D = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double aj = a[j];
    if (aj == 0.0) continue;
    const double s = aj > 0.0 ? 1.0 : -1.0;
    C += aj * (x_star[j] - lambda * s);
    D += aj * aj;
    kinks.push_back({(x_star[j] - lambda * s) / aj, j, false});
    kinks.push_back({(x_star[j] + lambda * s) / aj, j, true});
  }
  if (D == 0.0) {
    throw Error(Errc::invalid_argument, "linesearch: direction a is zero");
  }
  std::sort(kinks.begin(), kinks.end(), [](const Kink& l, const Kink& r) { return l.t < r.t; });

  const auto nk = static_cast<double>(kinks.size());
  if (flops) *flops += 8.0 * nk + nk * std::log2(std::max(nk, 2.0));

  // Locate the interval (lo, hi] on which phi' changes sign.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  while (k < kinks.size()) {
    const double te = kinks[k].t;
    if (beta - C + te * D >= 0.0) {
      hi = te;
      break;
    }
    for (; k < kinks.size() && kinks[k].t == te; ++k) {
      const Index j = kinks[k].j;
      const double aj = a[j];
      const double s = aj > 0.0 ? 1.0 : -1.0;
      if (kinks[k].enters) {
        C += aj * (x_star[j] + lambda * s);
        D += aj * aj;
      } else {
        C -= aj * (x_star[j] - lambda * s);
        D -= aj * aj;
      }
    }
    lo = te;
  }
  if (flops) *flops += 4.0 * static_cast<double>(k);

  // Recompute the sums from scratch on the bracketing interval so that the
  // running updates above do not leak rounding error into the result.
  double probe;
  if (std::isinf(lo) && std::isinf(hi)) {
    probe = 0.0;
  } else if (std::isinf(lo)) {
    probe = hi - 1.0 - std::abs(hi);
  } else if (std::isinf(hi)) {
    probe = lo + 1.0 + std::abs(lo);
  } else {
    probe = 0.5 * (lo + hi);
  }
  C = 0.0;
  D = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double aj = a[j];
    if (aj == 0.0) continue;
    const double u = x_star[j] - probe * aj;
    if (u > lambda) {
      C += aj * (x_star[j] - lambda);
      D += aj * aj;
    } else if (u < -lambda) {
      C += aj * (x_star[j] + lambda);
      D += aj * aj;
    }
  }
  if (flops) *flops += 6.0 * static_cast<double>(n) + 2.0;

  if (D == 0.0) {
    // phi' is constant (= beta) on this interval and nonnegative at hi, so
    // the left end is a minimiser (a kink, since lo > -inf here).
    if (std::isinf(lo)) throw Error(Errc::unbounded_below, "linesearch: dual objective unbounded below");
    return lo;
  }
  const double t = (C - beta) / D;
  return std::clamp(t, lo, hi);
}

double exact_dual_linesearch(const GeneratingFunction& f, VectorRef x_star, VectorRef a, double beta,
                             double* flops) {
  if (x_star.size() != a.size()) {
    throw Error(Errc::dimension_mismatch, "linesearch: x_star and a differ in length");
  }
  if (f.is_smooth()) {
    const double nrm2 = a.squaredNorm();
    if (nrm2 == 0.0) throw Error(Errc::invalid_argument, "linesearch: direction a is zero");
    if (flops) *flops += 4.0 * static_cast<double>(a.size()) + 2.0;
    return (a.dot(x_star) - beta) / nrm2;
  }
  return breakpoint_linesearch(x_star, a, beta, f.lambda(), flops);
}

double inexact_dual_step(VectorRef x, VectorRef a, double beta) {
  if (x.size() != a.size()) {
    throw Error(Errc::dimension_mismatch, "inexact step: x and a differ in length");
  }
  return a.dot(x) - beta;
}

}  // namespace sbp
