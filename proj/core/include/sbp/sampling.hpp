#pragma once

#include "sbp/linalg.hpp"
#include "sbp/sketching.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace sbp {

using Rng = std::mt19937_64;

enum class RuleKind { Uniform, RowNormWeighted, MaxDistance, ProportionalToLoss, Capped, SketchMotzkin };

/// How the block tau_k of the sketch-Motzkin rule is drawn.
///   Weighted: P(tau) proportional to sum_{i in tau} |S_i^T A|_F^2
///   Uniform:  every subset of size beta equally likely
enum class BlockDistribution { Weighted, Uniform };

std::string_view to_string(RuleKind kind);
/// Accepts uniform|rownorm|maxdist|proportional|capped|skm.
RuleKind parse_rule(std::string_view name);
std::string_view to_string(BlockDistribution d);
BlockDistribution parse_block_distribution(std::string_view name);

/// True for rules that look at every sketched loss each iteration.
bool needs_all_losses(RuleKind kind);
bool is_adaptive(RuleKind kind);

struct SamplingRule {
  RuleKind kind = RuleKind::Uniform;
  double theta = 0.5;      // Capped
  Index beta = 1;          // SketchMotzkin block size
  Vector reference_p;      // Capped reference; empty means uniform
  BlockDistribution block_distribution = BlockDistribution::Weighted;
  std::uint64_t rng_seed = 0;

  /// Validates parameters against a family of q sketches.
  void validate(Index q) const;
};

struct SelectionTrace {
  Index chosen = -1;
  std::vector<Index> candidate_set;
  Index losses_evaluated = 0;
};

Index select_uniform(Rng& rng, Index q);
/// Draws i with probability p_i. Zero entries are allowed.
Index select_weighted(Rng& rng, const Vector& p);
/// Smallest index attaining the maximum; nullopt when every loss is zero.
std::optional<Index> select_max_distance(const Vector& losses);
std::optional<Index> select_proportional(Rng& rng, const Vector& losses);
/// W = {i : g_i >= theta max_j g_j + (1 - theta) sum_j p_j g_j}, then a draw
/// from W proportional to reference_p. nullopt when every loss is zero.
std::optional<SelectionTrace> select_capped(Rng& rng, const Vector& losses, double theta, const Vector& reference_p);

/// The set W_k of the capped rule (exposed for tests).
std::vector<Index> capped_candidates(const Vector& losses, double theta, const Vector& reference_p);

/// Draws a block of `beta` distinct indices. With weights, the block has
/// probability proportional to the sum of its weights: the first member is
/// drawn proportional to its weight and the rest uniformly from the remainder.
std::vector<Index> draw_block(Rng& rng, Index q, Index beta, const Vector* weights);

/// Sketch-Motzkin selection evaluating losses only on the drawn block. An
/// all-zero block is redrawn once; if it is still zero the full residual
/// decides between convergence (nullopt) and a fallback argmax over all q.
std::optional<SelectionTrace> select_sketch_motzkin(Rng& rng, const SketchSet& sketch, const Matrix& A, VectorRef x,
                                                    VectorRef b, Index beta,
                                                    BlockDistribution p1 = BlockDistribution::Weighted);

using LossFn = std::function<double(Index)>;

namespace detail {

// Partial Fisher-Yates over a persistent index pool, with an inverse map so a
// weighted first pick can be swapped to the front in O(1).
class BlockDrawer {
 public:
  explicit BlockDrawer(Index q = 0);
  /// `cumulative` (optional) holds running sums of the first-member weights.
  std::vector<Index> draw(Rng& rng, Index beta, const std::vector<double>* cumulative);

 private:
  void swap_slots(Index a, Index b);

  std::vector<Index> pool_;
  std::vector<Index> pos_;
};

}  // namespace detail

/// Stateful selector owning the RNG and scratch buffers of one solver run.
class Sampler {
 public:
  Sampler(const SamplingRule& rule, const SketchSet& sketch);

  const SamplingRule& rule() const noexcept { return rule_; }

  /// Next index. `loss` must return g_i(x^k) for the current iterate; it is
  /// only called by the adaptive rules. nullopt means every loss is zero.
  std::optional<SelectionTrace> next(const LossFn& loss);

 private:
  SamplingRule rule_;
  Index q_;
  Rng rng_;
  Vector weights_;      // rownorm draw / block weights
  Vector reference_;
  Vector losses_;
  std::vector<double> cumulative_;
  detail::BlockDrawer drawer_;
};

}  // namespace sbp
