#pragma once

#include "sbp/linalg.hpp"
#include "sbp/sampling.hpp"
#include "sbp/sketching.hpp"
#include "sbp/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>

namespace sbp {

/// Smallest nonzero eigenvalue of E_{i~p}[Z_i], computed in an orthonormal
/// basis of range(A^T). Throws Errc::exactness_violated when
/// rank(E[Z]) != rank(A). If `rank_ambiguous` is given it is set when that
/// eigenvalue is below 1e-10.
double sigma_p_squared(const SketchSet& sketch, const Matrix& A, const Vector& p, bool* rank_ambiguous = nullptr);

struct SigmaBracket {
  double lower = 0.0;
  double upper = 1.0;
  /// Unit vector in range(A^T) attaining `upper`.
  Vector argmin;
};

/// lower: max of sigma_p^2 over the uniform and Frobenius-weighted p.
/// upper: best value of max_i |v|_{Z_i}^2 seen by projected subgradient
/// descent on the unit sphere of range(A^T), started from the bottom
/// eigenvector of E_uniform[Z] and `restarts` random points.
SigmaBracket sigma_inf_squared_bracket(const SketchSet& sketch, const Matrix& A, Index restarts = 8,
                                       Index iters = 500, std::uint64_t seed = 0);

/// min over a hemisphere grid of max_i |v|_{Z_i}^2 with `points` samples per
/// angle. Requires rank(A) <= 3.
double sigma_inf_squared_grid(const SketchSet& sketch, const Matrix& A, Index points = 10000);

struct SkmOptions {
  double enumeration_cap = 1e5;
  Index monte_carlo_blocks = 20000;
  Index restarts = 8;
  Index iters = 500;
  std::uint64_t seed = 0;
  /// Extra candidate for the upper end, e.g. SigmaBracket::argmin.
  std::optional<Vector> warm_start;
};

struct SkmConstants {
  double blk_pp = 0.0;
  double blk_pp_stderr = 0.0;  // zero when enumerated
  double blk_inf_lower = 0.0;
  double blk_inf_upper = 1.0;
  bool enumerated = true;
  double subsets = 0.0;  // C(q, beta)
};

/// Constants of the block rule with block size `beta`, p2 uniform inside the
/// block. blk_pp is sigma_min^+ of E_{i~p3}[Z_i] with the joint probability
/// p3[i] = sum_{tau ∋ i} p1(tau) / beta, accumulated over all subsets when
/// C(q, beta) <= enumeration_cap and estimated from sampled blocks otherwise.
/// blk_inf is bracketed like sigma_inf; E_tau[max_{i in tau} g_i] is evaluated
/// in closed form from the order statistics of the losses.
SkmConstants skm_constants(const SketchSet& sketch, const Matrix& A, Index beta, BlockDistribution p1,
                           const SkmOptions& options = {});

/// E_{tau~p1}[max_{i in tau} values_i] for blocks of size `beta`; `weights`
/// are the per-index weights of the Weighted distribution.
double expected_block_max(const Vector& values, const Vector& weights, Index beta, BlockDistribution p1);

/// Marginal p3[i] = sum_{tau ∋ i} p1(tau) / beta in closed form.
Vector joint_probability(const Vector& weights, Index beta, BlockDistribution p1);

/// 1 / max_i sum_{j != i} p_j. Infinite for q == 1.
double eta(const Vector& p);

struct RateParams {
  Vector p;  // reference probability for the capped rule; empty means uniform
  double theta = 0.5;
  Index beta = 1;
  double lambda = 0.0;
  std::optional<Vector> truth;
};

/// Per-iteration contraction factor of the known Kaczmarz and sparse Kaczmarz
/// rate bounds, with gamma_k replaced by its worst case beta_k (m for the
/// max-distance row) and the result clamped to [0, 1). Sparse rows require
/// `truth` and multiply each decrement by |x|_min / (|x|_min + 2 lambda).
double rate_bound(Method method, RuleKind rule, const Matrix& A, const RateParams& params);

/// Smallest nonzero eigenvalue of A^T A (squared smallest nonzero singular value).
double smallest_nonzero_eig_gram(const Matrix& A);

struct RateReportOptions {
  Method method = Method::Kaczmarz;
  RuleKind rule = RuleKind::Uniform;
  double theta = 0.5;
  Index beta = 1;
  BlockDistribution p1 = BlockDistribution::Weighted;
  double lambda = 0.0;
  std::optional<Vector> truth;
  Index restarts = 8;
  Index iters = 500;
  std::uint64_t seed = 0;
  double enumeration_cap = 1e5;
};

struct RateReport {
  Index m = 0;
  Index n = 0;
  Index rank = 0;
  Index q = 0;
  std::string p_name;
  double sigma_p_sq = 0.0;
  bool sigma_p_rank_ambiguous = false;
  double sigma_inf_sq_lower = 0.0;
  double sigma_inf_sq_upper = 0.0;
  std::optional<double> sigma_inf_sq_grid;
  Index skm_beta = 1;
  SkmConstants skm;
  double eta = 0.0;
  Method method = Method::Kaczmarz;
  double lambda = 0.0;
  std::optional<double> xhat_min;
  double theta = 0.5;
  std::map<std::string, double> per_rule_bounds;
};

RateReport make_rate_report(const SketchSet& sketch, const Matrix& A, const RateReportOptions& options);

/// One `key: value` line per field.
void write_rate_report(std::ostream& out, const RateReport& report);

}  // namespace sbp
