#include "sbp/spectral.hpp"

#include "sbp/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace sbp {

namespace {

// The sketch family expressed in an orthonormal basis Q of range(A^T):
// |Q u|_{Z_i}^2 = |B_i u|^2, with the B_i stacked row-wise.
struct Reduced {
  Matrix Q;
  Matrix B;
  std::vector<Index> offset;

  Index rank() const { return Q.cols(); }
  Index q() const { return static_cast<Index>(offset.size()) - 1; }

  Vector losses(const Vector& u) const {
    const Vector y = B * u;
    Vector g(q());
    for (Index i = 0; i < q(); ++i) {
      g[i] = y.segment(offset[static_cast<std::size_t>(i)],
                       offset[static_cast<std::size_t>(i) + 1] - offset[static_cast<std::size_t>(i)])
                 .squaredNorm();
    }
    return g;
  }

  // 2 sum_i c_i B_i^T B_i u
  Vector weighted_gradient(const Vector& u, const Vector& c) const {
    Vector y = B * u;
    for (Index i = 0; i < q(); ++i) {
      const auto lo = offset[static_cast<std::size_t>(i)];
      const auto hi = offset[static_cast<std::size_t>(i) + 1];
      y.segment(lo, hi - lo) *= 2.0 * c[i];
    }
    return B.transpose() * y;
  }

  Matrix expected(const Vector& p) const {
    Vector rw(B.rows());
    for (Index i = 0; i < q(); ++i) {
      const auto lo = offset[static_cast<std::size_t>(i)];
      const auto hi = offset[static_cast<std::size_t>(i) + 1];
      rw.segment(lo, hi - lo).setConstant(p[i]);
    }
    return B.transpose() * rw.asDiagonal() * B;
  }
};

Reduced reduce(const SketchSet& sketch, const Matrix& A) {
  sketch.check_compatible(A);
  Reduced r;
  r.Q = row_space_basis(A);
  if (r.Q.cols() == 0) throw Error(Errc::invalid_argument, "spectral constants need a nonzero matrix");
  const Index q = sketch.size();
  r.offset.resize(static_cast<std::size_t>(q) + 1);
  if (sketch.kind() == SketchKind::Row) {
    r.B = normalize_rows(A) * r.Q;
    std::iota(r.offset.begin(), r.offset.end(), Index{0});
    return r;
  }
  std::vector<Matrix> parts;
  Index total = 0;
  for (Index i = 0; i < q; ++i) {
    parts.push_back(sketch.range_basis(i, A).transpose() * r.Q);
    r.offset[static_cast<std::size_t>(i)] = total;
    total += parts.back().rows();
  }
  r.offset[static_cast<std::size_t>(q)] = total;
  r.B.resize(total, r.Q.cols());
  for (Index i = 0; i < q; ++i) {
    r.B.middleRows(r.offset[static_cast<std::size_t>(i)], parts[static_cast<std::size_t>(i)].rows()) =
        parts[static_cast<std::size_t>(i)];
  }
  return r;
}

struct EigMin {
  double value;
  Vector vector;
  double cutoff;
};

EigMin smallest_eig(const Matrix& E) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(E);
  const Vector& ev = es.eigenvalues();
  const double cutoff = std::max(std::abs(ev[ev.size() - 1]), 1.0) * static_cast<double>(E.rows()) *
                        std::numeric_limits<double>::epsilon();
  return {ev[0], es.eigenvectors().col(0), cutoff};
}

double sigma_from_reduced(const Reduced& r, const Vector& p, bool* ambiguous) {
  const EigMin e = smallest_eig(r.expected(p));
  if (e.value <= e.cutoff) {
    throw Error(Errc::exactness_violated, "expected projector is singular on range(A^T)");
  }
  if (ambiguous) *ambiguous = e.value < 1e-10;
  return e.value;
}

double log_choose(double a, double b) {
  if (b < 0.0 || b > a) return -std::numeric_limits<double>::infinity();
  return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}

// C(a, b) by the multiplicative formula; exact while the result fits in 53 bits.
double choose(Index a, Index b) {
  if (b < 0 || b > a) return 0.0;
  b = std::min(b, a - b);
  double c = 1.0;
  for (Index k = 1; k <= b; ++k) c = c * static_cast<double>(a - b + k) / static_cast<double>(k);
  return c;
}

// Probability that the element at each index is the block maximum.
Vector block_max_masses(const Vector& values, const Vector& weights, Index beta, BlockDistribution p1) {
  const Index q = values.size();
  if (beta < 1 || beta > q) throw Error(Errc::invalid_argument, "block size must lie in [1, q]");
  std::vector<Index> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index l, Index r) { return values[l] > values[r]; });
  Vector mass = Vector::Zero(q);
  const auto qd = static_cast<double>(q);
  const auto bd = static_cast<double>(beta);
  if (p1 == BlockDistribution::Uniform) {
    const double den = log_choose(qd, bd);
    for (Index j = 0; j < q; ++j) {
      const auto L = static_cast<double>(q - 1 - j);
      mass[order[static_cast<std::size_t>(j)]] = std::exp(log_choose(L, bd - 1.0) - den);
    }
    return mass;
  }
  const double W = weights.sum();
  if (!(W > 0.0)) throw Error(Errc::invalid_probability, "block weights sum to zero");
  const double den = log_choose(qd - 1.0, bd - 1.0);
  double suffix = 0.0;  // weight of the elements after position j
  for (Index j = q - 1; j >= 0; --j) {
    const Index idx = order[static_cast<std::size_t>(j)];
    const auto L = static_cast<double>(q - 1 - j);
    double term = std::exp(log_choose(L, bd - 1.0) - den) * weights[idx];
    if (beta >= 2) term += std::exp(log_choose(L - 1.0, bd - 2.0) - den) * suffix;
    mass[idx] = term / W;
    suffix += weights[idx];
  }
  return mass;
}

Vector sketch_weights(const SketchSet& sketch) {
  Vector w(sketch.size());
  for (Index i = 0; i < sketch.size(); ++i) w[i] = sketch.frobenius_sq(i);
  return w;
}

// Projected subgradient descent on the unit sphere; returns the best value
// seen and writes the point attaining it.
template <typename Eval>
double sphere_descent(Eval&& eval, Vector u, Index iters, Vector& best_u) {
  u.normalize();
  Vector grad(u.size());
  double best = eval(u, grad);
  best_u = u;
  for (Index t = 0; t < iters; ++t) {
    Vector g = grad - grad.dot(u) * u;
    const double gn = g.norm();
    if (gn <= 1e-15) break;
    u -= (0.3 / std::sqrt(static_cast<double>(t) + 1.0) / gn) * g;
    u.normalize();
    const double v = eval(u, grad);
    if (v < best) {
      best = v;
      best_u = u;
    }
  }
  return best;
}

template <typename Eval>
double multi_start_descent(Eval&& eval, const Vector& first, const std::optional<Vector>& extra, Index restarts,
                           Index iters, std::uint64_t seed, Vector& best_u) {
  Vector cand;
  double best = sphere_descent(eval, first, iters, best_u);
  if (extra && extra->norm() > 0.0) {
    const double v = sphere_descent(eval, *extra, iters, cand);
    if (v < best) {
      best = v;
      best_u = cand;
    }
  }
  Rng rng(seed);
  std::normal_distribution<double> normal;
  for (Index s = 0; s < restarts; ++s) {
    Vector u0(first.size());
    for (Index j = 0; j < u0.size(); ++j) u0[j] = normal(rng);
    if (u0.norm() == 0.0) continue;
    const double v = sphere_descent(eval, u0, iters, cand);
    if (v < best) {
      best = v;
      best_u = cand;
    }
  }
  return best;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double sigma_p_squared(const SketchSet& sketch, const Matrix& A, const Vector& p, bool* rank_ambiguous) {
  if (!check_exactness(sketch, A, p)) {
    throw Error(Errc::exactness_violated, "exactness fails: Null(E[Z]) is larger than Null(A)");
  }
  const Reduced r = reduce(sketch, A);
  return sigma_from_reduced(r, p, rank_ambiguous);
}

SigmaBracket sigma_inf_squared_bracket(const SketchSet& sketch, const Matrix& A, Index restarts, Index iters,
                                       std::uint64_t seed) {
  const Reduced r = reduce(sketch, A);
  const Index q = sketch.size();
  SigmaBracket out;
  out.lower = 0.0;
  const Vector uniform = uniform_probability(q);
  for (const Vector& p : {uniform, frobenius_probability(sketch)}) {
    if (p.minCoeff() <= 0.0) continue;
    out.lower = std::max(out.lower, smallest_eig(r.expected(p)).value);
  }
  auto eval = [&](const Vector& u, Vector& grad) {
    const Vector g = r.losses(u);
    Index best = 0;
    for (Index i = 1; i < q; ++i) {
      if (g[i] > g[best]) best = i;
    }
    Vector c = Vector::Zero(q);
    c[best] = 1.0;
    grad = r.weighted_gradient(u, c);
    return g[best];
  };
  const Vector start = smallest_eig(r.expected(uniform)).vector;
  Vector best_u;
  out.upper = multi_start_descent(eval, start, std::nullopt, restarts, iters, seed, best_u);
  out.argmin = r.Q * best_u;
  return out;
}

double sigma_inf_squared_grid(const SketchSet& sketch, const Matrix& A, Index points) {
  const Reduced r = reduce(sketch, A);
  const Index rank = r.rank();
  if (rank > 3) throw Error(Errc::invalid_argument, "grid evaluation needs rank(A) <= 3");
  if (points < 2) throw Error(Errc::invalid_argument, "grid needs at least 2 points per angle");
  const Index q = r.q();
  const Index rows = r.B.rows();
  if (rank == 1) {
    double best = 0.0;
    for (Index i = 0; i < q; ++i) best = std::max(best, r.losses(Vector::Ones(1))[i]);
    return best;
  }
  const double pi = std::numbers::pi;
  std::vector<double> c(static_cast<std::size_t>(points)), s(static_cast<std::size_t>(points));
  // The objective is even in u, so half the circle suffices for rank 2.
  const double span = rank == 2 ? pi : 2.0 * pi;
  for (Index k = 0; k < points; ++k) {
    const double th = span * static_cast<double>(k) / static_cast<double>(points);
    c[static_cast<std::size_t>(k)] = std::cos(th);
    s[static_cast<std::size_t>(k)] = std::sin(th);
  }
  std::vector<double> al(static_cast<std::size_t>(rows)), be(static_cast<std::size_t>(rows)),
      ga(static_cast<std::size_t>(rows));
  double best = std::numeric_limits<double>::infinity();
  auto sweep = [&] {
    for (Index k = 0; k < points; ++k) {
      const double ck = c[static_cast<std::size_t>(k)];
      const double sk = s[static_cast<std::size_t>(k)];
      double cur = 0.0;
      for (Index i = 0; i < q && cur < best; ++i) {
        double v = 0.0;
        for (Index row = r.offset[static_cast<std::size_t>(i)]; row < r.offset[static_cast<std::size_t>(i) + 1];
             ++row) {
          const auto ri = static_cast<std::size_t>(row);
          const double d = al[ri] * ck + be[ri] * sk + ga[ri];
          v += d * d;
        }
        cur = std::max(cur, v);
      }
      best = std::min(best, cur);
    }
  };
  if (rank == 2) {
    for (Index row = 0; row < rows; ++row) {
      al[static_cast<std::size_t>(row)] = r.B(row, 0);
      be[static_cast<std::size_t>(row)] = r.B(row, 1);
      ga[static_cast<std::size_t>(row)] = 0.0;
    }
    sweep();
    return best;
  }
  // Upper hemisphere: polar angle in [0, pi/2], azimuth in [0, 2 pi).
  for (Index a = 0; a < points; ++a) {
    const double phi = 0.5 * pi * static_cast<double>(a) / static_cast<double>(points - 1);
    const double sp = std::sin(phi);
    const double cp = std::cos(phi);
    for (Index row = 0; row < rows; ++row) {
      al[static_cast<std::size_t>(row)] = sp * r.B(row, 0);
      be[static_cast<std::size_t>(row)] = sp * r.B(row, 1);
      ga[static_cast<std::size_t>(row)] = cp * r.B(row, 2);
    }
    sweep();
  }
  return best;
}

double expected_block_max(const Vector& values, const Vector& weights, Index beta, BlockDistribution p1) {
  return block_max_masses(values, weights, beta, p1).dot(values);
}

Vector joint_probability(const Vector& weights, Index beta, BlockDistribution p1) {
  const Index q = weights.size();
  if (beta < 1 || beta > q) throw Error(Errc::invalid_argument, "block size must lie in [1, q]");
  if (p1 == BlockDistribution::Uniform) return uniform_probability(q);
  const double W = weights.sum();
  if (!(W > 0.0)) throw Error(Errc::invalid_probability, "block weights sum to zero");
  const double share = beta == 1 ? 0.0 : static_cast<double>(beta - 1) / static_cast<double>(q - 1);
  Vector p3(q);
  for (Index i = 0; i < q; ++i) {
    p3[i] = (weights[i] + share * (W - weights[i])) / (static_cast<double>(beta) * W);
  }
  return p3;
}

SkmConstants skm_constants(const SketchSet& sketch, const Matrix& A, Index beta, BlockDistribution p1,
                           const SkmOptions& options) {
  const Reduced r = reduce(sketch, A);
  const Index q = sketch.size();
  if (beta < 1 || beta > q) throw Error(Errc::invalid_argument, "block size must lie in [1, q]");
  const Vector w = sketch_weights(sketch);
  if (p1 == BlockDistribution::Weighted && !(w.sum() > 0.0)) {
    throw Error(Errc::invalid_probability, "every sketch has zero norm");
  }
  SkmConstants out;
  out.subsets = choose(q, beta);
  out.enumerated = out.subsets <= options.enumeration_cap;

  auto blk_pp_of = [&](const Vector& p3) {
    const EigMin e = smallest_eig(r.expected(p3));
    return e.value;
  };

  if (out.enumerated) {
    // p3[i] = sum over subsets containing i of p1(tau) / beta.
    Vector p3 = Vector::Zero(q);
    const double W = w.sum();
    const double log_uniform = log_choose(static_cast<double>(q), static_cast<double>(beta));
    const double log_weighted = log_choose(static_cast<double>(q - 1), static_cast<double>(beta - 1));
    std::vector<Index> tau(static_cast<std::size_t>(beta));
    std::iota(tau.begin(), tau.end(), Index{0});
    while (true) {
      double prob;
      if (p1 == BlockDistribution::Uniform) {
        prob = std::exp(-log_uniform);
      } else {
        double s = 0.0;
        for (Index i : tau) s += w[i];
        prob = s / W * std::exp(-log_weighted);
      }
      for (Index i : tau) p3[i] += prob / static_cast<double>(beta);
      // Next combination in lexicographic order.
      Index k = beta - 1;
      while (k >= 0 && tau[static_cast<std::size_t>(k)] == q - beta + k) --k;
      if (k < 0) break;
      ++tau[static_cast<std::size_t>(k)];
      for (Index j = k + 1; j < beta; ++j) tau[static_cast<std::size_t>(j)] = tau[static_cast<std::size_t>(j) - 1] + 1;
    }
    out.blk_pp = blk_pp_of(p3);
  } else {
    constexpr Index kBatches = 10;
    const Index per_batch = std::max<Index>(1, options.monte_carlo_blocks / kBatches);
    Rng rng(options.seed ^ 0x5bd1e995ULL);
    detail::BlockDrawer drawer(q);
    std::vector<double> cumulative;
    if (p1 == BlockDistribution::Weighted) {
      cumulative.resize(static_cast<std::size_t>(q));
      std::partial_sum(w.begin(), w.end(), cumulative.begin());
    }
    Vector total = Vector::Zero(q);
    std::vector<double> batch_values;
    for (Index b = 0; b < kBatches; ++b) {
      Vector counts = Vector::Zero(q);
      for (Index s = 0; s < per_batch; ++s) {
        for (Index i : drawer.draw(rng, beta, cumulative.empty() ? nullptr : &cumulative)) counts[i] += 1.0;
      }
      total += counts;
      batch_values.push_back(blk_pp_of(counts / (static_cast<double>(per_batch) * static_cast<double>(beta))));
    }
    out.blk_pp = blk_pp_of(total / (static_cast<double>(per_batch * kBatches) * static_cast<double>(beta)));
    const double mean = std::accumulate(batch_values.begin(), batch_values.end(), 0.0) / kBatches;
    double var = 0.0;
    for (double v : batch_values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(kBatches - 1);
    out.blk_pp_stderr = std::sqrt(var / static_cast<double>(kBatches));
  }
  if (out.enumerated && out.blk_pp <= smallest_eig(r.expected(uniform_probability(q))).cutoff) {
    throw Error(Errc::exactness_violated, "joint block probability violates exactness");
  }

  auto eval = [&](const Vector& u, Vector& grad) {
    const Vector g = r.losses(u);
    const Vector mass = block_max_masses(g, w, beta, p1);
    grad = r.weighted_gradient(u, mass);
    return mass.dot(g);
  };
  std::optional<Vector> warm;
  if (options.warm_start) {
    if (options.warm_start->size() != A.cols()) {
      throw Error(Errc::dimension_mismatch, "warm start must have length n");
    }
    warm = r.Q.transpose() * *options.warm_start;
  }
  const Vector start = smallest_eig(r.expected(uniform_probability(q))).vector;
  Vector best_u;
  out.blk_inf_upper = multi_start_descent(eval, start, warm, options.restarts, options.iters, options.seed, best_u);
  out.blk_inf_lower = std::min(out.blk_pp, out.blk_inf_upper);
  return out;
}

double eta(const Vector& p) {
  validate_probability(p, p.size());
  const double worst = 1.0 - p.minCoeff();
  if (worst <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / worst;
}

double smallest_nonzero_eig_gram(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector& sv = svd.singularValues();
  const double cut = rank_tolerance(sv, A.rows(), A.cols());
  double smallest = 0.0;
  for (Index k = 0; k < sv.size(); ++k) {
    if (sv[k] > cut) smallest = sv[k];
  }
  return smallest * smallest;
}

double rate_bound(Method method, RuleKind rule, const Matrix& A, const RateParams& params) {
  const Index m = A.rows();
  if (m < 1 || A.cols() < 1) throw Error(Errc::invalid_argument, "rate_bound: empty matrix");
  double kappa = 1.0;
  if (method == Method::SparseKaczmarz) {
    if (!params.truth) throw Error(Errc::configuration, "sparse rate bounds need the true solution");
    double xmin = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < params.truth->size(); ++j) {
      const double v = std::abs((*params.truth)[j]);
      if (v > 0.0) xmin = std::min(xmin, v);
    }
    if (!std::isfinite(xmin)) throw Error(Errc::zero_truth, "sparse rate bounds need a nonzero truth");
    if (params.lambda < 0.0) throw Error(Errc::invalid_argument, "lambda must be >= 0");
    kappa = xmin / (xmin + 2.0 * params.lambda);
  }
  const double half = method == Method::SparseKaczmarz ? 0.5 : 1.0;
  const auto md = static_cast<double>(m);
  const Matrix Abar = normalize_rows(A);
  double dec = 0.0;
  switch (rule) {
    case RuleKind::Uniform: dec = smallest_nonzero_eig_gram(Abar) / md; break;
    case RuleKind::RowNormWeighted: dec = smallest_nonzero_eig_gram(A) / A.squaredNorm(); break;
    case RuleKind::MaxDistance: dec = smallest_nonzero_eig_gram(Abar) / md; break;  // gamma = beta = m
    case RuleKind::ProportionalToLoss: dec = 2.0 * smallest_nonzero_eig_gram(Abar) / md; break;
    case RuleKind::Capped: {
      const Vector p = params.p.size() == m ? params.p : uniform_probability(m);
      validate_probability(p, m);
      const Matrix PA = p.cwiseSqrt().asDiagonal() * Abar;
      const double boost = params.theta == 0.0 ? 1.0 : params.theta * eta(p) + 1.0;
      dec = boost * smallest_nonzero_eig_gram(PA);
      break;
    }
    case RuleKind::SketchMotzkin: {
      if (params.beta < 1 || params.beta > m) throw Error(Errc::invalid_argument, "beta must lie in [1, m]");
      const auto bd = static_cast<double>(params.beta);
      dec = bd * smallest_nonzero_eig_gram(Abar) / (bd * md);  // gamma = beta
      break;
    }
  }
  const double bound = 1.0 - half * dec * kappa;
  return std::clamp(bound, 0.0, 1.0);
}

RateReport make_rate_report(const SketchSet& sketch, const Matrix& A, const RateReportOptions& o) {
  RateReport rep;
  rep.m = A.rows();
  rep.n = A.cols();
  rep.rank = numerical_rank(A);
  rep.q = sketch.size();
  rep.method = o.method;
  rep.lambda = o.lambda;
  rep.theta = o.theta;
  Vector p;
  if (o.rule == RuleKind::RowNormWeighted) {
    p = frobenius_probability(sketch);
    rep.p_name = "rownorm";
  } else {
    p = uniform_probability(sketch.size());
    rep.p_name = "uniform";
  }
  rep.sigma_p_sq = sigma_p_squared(sketch, A, p, &rep.sigma_p_rank_ambiguous);
  const SigmaBracket br = sigma_inf_squared_bracket(sketch, A, o.restarts, o.iters, o.seed);
  rep.sigma_inf_sq_lower = br.lower;
  rep.sigma_inf_sq_upper = br.upper;
  if (rep.rank <= 3) rep.sigma_inf_sq_grid = sigma_inf_squared_grid(sketch, A);
  rep.skm_beta = o.beta;
  SkmOptions so;
  so.enumeration_cap = o.enumeration_cap;
  so.restarts = o.restarts;
  so.iters = o.iters;
  so.seed = o.seed;
  so.warm_start = br.argmin;
  rep.skm = skm_constants(sketch, A, o.beta, o.p1, so);
  rep.eta = eta(uniform_probability(sketch.size()));
  if (o.truth) {
    double xmin = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < o.truth->size(); ++j) {
      if ((*o.truth)[j] != 0.0) xmin = std::min(xmin, std::abs((*o.truth)[j]));
    }
    if (std::isfinite(xmin)) rep.xhat_min = xmin;
  }
  if (o.method == Method::Kaczmarz || o.truth) {
    RateParams rp;
    rp.theta = o.theta;
    rp.beta = o.beta;
    rp.lambda = o.lambda;
    rp.truth = o.truth;
    for (auto k : {RuleKind::Uniform, RuleKind::RowNormWeighted, RuleKind::MaxDistance,
                   RuleKind::ProportionalToLoss, RuleKind::Capped, RuleKind::SketchMotzkin}) {
      rep.per_rule_bounds[std::string(to_string(k))] = rate_bound(o.method, k, A, rp);
    }
  }
  return rep;
}

void write_rate_report(std::ostream& out, const RateReport& r) {
  out << "m: " << r.m << '\n'
      << "n: " << r.n << '\n'
      << "rank: " << r.rank << '\n'
      << "q: " << r.q << '\n'
      << "method: " << to_string(r.method) << '\n'
      << "lambda: " << fmt(r.lambda) << '\n'
      << "xhat_min: " << (r.xhat_min ? fmt(*r.xhat_min) : std::string("n/a")) << '\n'
      << "p: " << r.p_name << '\n'
      << "sigma_p_sq: " << fmt(r.sigma_p_sq) << '\n'
      << "sigma_p_rank_ambiguous: " << (r.sigma_p_rank_ambiguous ? "true" : "false") << '\n'
      << "sigma_inf_sq_lower: " << fmt(r.sigma_inf_sq_lower) << '\n'
      << "sigma_inf_sq_upper: " << fmt(r.sigma_inf_sq_upper) << '\n'
      << "sigma_inf_sq_bracket_width: " << fmt(r.sigma_inf_sq_upper - r.sigma_inf_sq_lower) << '\n'
      << "sigma_inf_sq_grid: " << (r.sigma_inf_sq_grid ? fmt(*r.sigma_inf_sq_grid) : std::string("n/a")) << '\n'
      << "skm_beta: " << r.skm_beta << '\n'
      << "skm_subsets: " << fmt(r.skm.subsets) << '\n'
      << "skm_enumerated: " << (r.skm.enumerated ? "true" : "false") << '\n'
      << "skm_monte_carlo: " << (r.skm.enumerated ? "false" : "true") << '\n'
      << "sigma_blk_pp_sq: " << fmt(r.skm.blk_pp) << '\n'
      << "sigma_blk_pp_sq_stderr: " << fmt(r.skm.blk_pp_stderr) << '\n'
      << "sigma_blk_inf_sq_lower: " << fmt(r.skm.blk_inf_lower) << '\n'
      << "sigma_blk_inf_sq_upper: " << fmt(r.skm.blk_inf_upper) << '\n'
      << "sigma_blk_inf_sq_bracket_width: " << fmt(r.skm.blk_inf_upper - r.skm.blk_inf_lower) << '\n'
      << "eta: " << fmt(r.eta) << '\n'
      << "theta: " << fmt(r.theta) << '\n';
  if (r.per_rule_bounds.empty()) {
    out << "rate_bounds: n/a (sparse bounds need --truth)\n";
  }
  for (const auto& [rule, bound] : r.per_rule_bounds) out << "rate_bound_" << rule << ": " << fmt(bound) << '\n';
}

}  // namespace sbp
