#include "sbp/sampling.hpp"

#include "sbp/errors.hpp"

#include <algorithm>
#include <numeric>

namespace sbp {

std::string_view to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::Uniform: return "uniform";
    case RuleKind::RowNormWeighted: return "rownorm";
    case RuleKind::MaxDistance: return "maxdist";
    case RuleKind::ProportionalToLoss: return "proportional";
    case RuleKind::Capped: return "capped";
    case RuleKind::SketchMotzkin: return "skm";
  }
  return "unknown";
}

RuleKind parse_rule(std::string_view name) {
  for (auto k : {RuleKind::Uniform, RuleKind::RowNormWeighted, RuleKind::MaxDistance, RuleKind::ProportionalToLoss,
                 RuleKind::Capped, RuleKind::SketchMotzkin}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::invalid_argument, "unknown sampling rule '" + std::string(name) +
                                          "' (expected uniform|rownorm|maxdist|proportional|capped|skm)");
}

std::string_view to_string(BlockDistribution d) {
  return d == BlockDistribution::Weighted ? "weighted" : "uniform";
}

BlockDistribution parse_block_distribution(std::string_view name) {
  if (name == "weighted") return BlockDistribution::Weighted;
  if (name == "uniform") return BlockDistribution::Uniform;
  throw Error(Errc::invalid_argument, "unknown block distribution '" + std::string(name) + "'");
}

bool needs_all_losses(RuleKind kind) {
  return kind == RuleKind::MaxDistance || kind == RuleKind::ProportionalToLoss || kind == RuleKind::Capped;
}

bool is_adaptive(RuleKind kind) { return needs_all_losses(kind) || kind == RuleKind::SketchMotzkin; }

void SamplingRule::validate(Index q) const {
  if (q < 1) throw Error(Errc::invalid_argument, "sampling needs at least one sketch");
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw Error(Errc::invalid_argument, "theta must lie in [0, 1], got " + std::to_string(theta));
  }
  if (kind == RuleKind::SketchMotzkin && (beta < 1 || beta > q)) {
    throw Error(Errc::invalid_argument,
                "beta must lie in [1, " + std::to_string(q) + "], got " + std::to_string(beta));
  }
  if (reference_p.size() != 0) validate_probability(reference_p, q);
}

Index select_uniform(Rng& rng, Index q) {
  if (q < 1) throw Error(Errc::invalid_argument, "select_uniform: q must be >= 1");
  return std::uniform_int_distribution<Index>(0, q - 1)(rng);
}

namespace {

// Index of the first cumulative weight exceeding u * total; skips zero weights.
Index draw_from_cumulative(Rng& rng, const std::vector<double>& cumulative) {
  const double total = cumulative.back();
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  // Guard against landing on a zero-weight entry at the upper end.
  while (it != cumulative.begin() && *it == *(it - 1)) --it;
  return static_cast<Index>(it - cumulative.begin());
}

void build_cumulative(const Vector& w, std::vector<double>& cumulative) {
  cumulative.resize(static_cast<std::size_t>(w.size()));
  double run = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    run += w[i];
    cumulative[static_cast<std::size_t>(i)] = run;
  }
}

Index argmax_smallest(const Vector& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

template <typename LossAt, typename Draw>
std::optional<SelectionTrace> motzkin_select(Index q, LossAt&& loss_at, Draw&& draw) {
  SelectionTrace trace;
  for (int attempt = 0; attempt < 2; ++attempt) {
    trace.candidate_set = draw();
    Index best = -1;
    double best_loss = 0.0;
    for (Index i : trace.candidate_set) {
      const double g = loss_at(i);
      ++trace.losses_evaluated;
      if (g > best_loss || (g == best_loss && best >= 0 && g > 0.0 && i < best)) {
        best = i;
        best_loss = g;
      }
    }
    if (best >= 0) {
      trace.chosen = best;
      return trace;
    }
  }
  // Block twice all-zero: decide on the full set.
  Index best = -1;
  double best_loss = 0.0;
  for (Index i = 0; i < q; ++i) {
    const double g = loss_at(i);
    ++trace.losses_evaluated;
    if (g > best_loss) {
      best = i;
      best_loss = g;
    }
  }
  if (best < 0) return std::nullopt;
  trace.chosen = best;
  trace.candidate_set.assign(1, best);
  return trace;
}

}  // namespace

namespace detail {

BlockDrawer::BlockDrawer(Index q) : pool_(static_cast<std::size_t>(q)), pos_(static_cast<std::size_t>(q)) {
  std::iota(pool_.begin(), pool_.end(), Index{0});
  std::iota(pos_.begin(), pos_.end(), Index{0});
}

std::vector<Index> BlockDrawer::draw(Rng& rng, Index beta, const std::vector<double>* cumulative) {
  const auto q = static_cast<Index>(pool_.size());
  Index start = 0;
  if (cumulative != nullptr) {
    const Index first = draw_from_cumulative(rng, *cumulative);
    swap_slots(0, pos_[static_cast<std::size_t>(first)]);
    start = 1;
  }
  for (Index k = start; k < beta; ++k) {
    const Index j = std::uniform_int_distribution<Index>(k, q - 1)(rng);
    swap_slots(k, j);
  }
  return {pool_.begin(), pool_.begin() + beta};
}

void BlockDrawer::swap_slots(Index a, Index b) {
  auto& pa = pool_[static_cast<std::size_t>(a)];
  auto& pb = pool_[static_cast<std::size_t>(b)];
  std::swap(pa, pb);
  pos_[static_cast<std::size_t>(pa)] = a;
  pos_[static_cast<std::size_t>(pb)] = b;
}

}  // namespace detail

Index select_weighted(Rng& rng, const Vector& p) {
  validate_distribution(p, p.size(), 1e-12);
  std::vector<double> cumulative;
  build_cumulative(p, cumulative);
  return draw_from_cumulative(rng, cumulative);
}

std::optional<Index> select_max_distance(const Vector& losses) {
  if (losses.size() == 0) return std::nullopt;
  const Index best = argmax_smallest(losses);
  if (!(losses[best] > 0.0)) return std::nullopt;
  return best;
}

std::optional<Index> select_proportional(Rng& rng, const Vector& losses) {
  double total = 0.0;
  for (Index i = 0; i < losses.size(); ++i) total += losses[i];
  if (!(total > 0.0)) return std::nullopt;
  std::vector<double> cumulative;
  build_cumulative(losses, cumulative);
  return draw_from_cumulative(rng, cumulative);
}

std::vector<Index> capped_candidates(const Vector& losses, double theta, const Vector& reference_p) {
  if (reference_p.size() != losses.size()) {
    throw Error(Errc::dimension_mismatch, "capped rule: reference probability length differs from loss count");
  }
  const double gmax = losses.maxCoeff();
  const double expected = reference_p.dot(losses);
  // The argmax must always qualify; rounding in the blend must not exclude it.
  const double threshold = std::min(theta * gmax + (1.0 - theta) * expected, gmax);
  std::vector<Index> w;
  for (Index i = 0; i < losses.size(); ++i) {
    if (losses[i] >= threshold) w.push_back(i);
  }
  return w;
}

std::optional<SelectionTrace> select_capped(Rng& rng, const Vector& losses, double theta, const Vector& reference_p) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(Errc::invalid_argument, "theta must lie in [0, 1]");
  validate_probability(reference_p, losses.size());
  if (losses.size() == 0 || !(losses.maxCoeff() > 0.0)) return std::nullopt;
  SelectionTrace trace;
  trace.candidate_set = capped_candidates(losses, theta, reference_p);
  trace.losses_evaluated = losses.size();
  std::vector<double> cumulative(trace.candidate_set.size());
  double run = 0.0;
  for (std::size_t k = 0; k < trace.candidate_set.size(); ++k) {
    run += reference_p[trace.candidate_set[k]];
    cumulative[k] = run;
  }
  trace.chosen = trace.candidate_set[static_cast<std::size_t>(draw_from_cumulative(rng, cumulative))];
  return trace;
}

std::vector<Index> draw_block(Rng& rng, Index q, Index beta, const Vector* weights) {
  if (beta < 1 || beta > q) throw Error(Errc::invalid_argument, "block size must lie in [1, q]");
  detail::BlockDrawer drawer(q);
  if (weights == nullptr) return drawer.draw(rng, beta, nullptr);
  validate_distribution(*weights / weights->sum(), q, 1e-9);
  std::vector<double> cumulative;
  build_cumulative(*weights, cumulative);
  return drawer.draw(rng, beta, &cumulative);
}

std::optional<SelectionTrace> select_sketch_motzkin(Rng& rng, const SketchSet& sketch, const Matrix& A, VectorRef x,
                                                    VectorRef b, Index beta, BlockDistribution p1) {
  sketch.check_compatible(A);
  const Index q = sketch.size();
  if (beta < 1 || beta > q) throw Error(Errc::invalid_argument, "beta must lie in [1, q]");
  detail::BlockDrawer drawer(q);
  std::vector<double> cumulative;
  if (p1 == BlockDistribution::Weighted) {
    Vector w(q);
    for (Index i = 0; i < q; ++i) w[i] = sketch.frobenius_sq(i);
    build_cumulative(w, cumulative);
  }
  auto loss_at = [&](Index i) { return sketched_loss(sketch, i, A, x, b); };
  auto draw = [&] { return drawer.draw(rng, beta, cumulative.empty() ? nullptr : &cumulative); };
  return motzkin_select(q, loss_at, draw);
}

Sampler::Sampler(const SamplingRule& rule, const SketchSet& sketch)
    : rule_(rule), q_(sketch.size()), rng_(rule.rng_seed), drawer_(sketch.size()) {
  rule_.validate(q_);
  weights_.resize(q_);
  for (Index i = 0; i < q_; ++i) weights_[i] = sketch.frobenius_sq(i);
  if (!(weights_.sum() > 0.0) &&
      (rule_.kind == RuleKind::RowNormWeighted ||
       (rule_.kind == RuleKind::SketchMotzkin && rule_.block_distribution == BlockDistribution::Weighted))) {
    throw Error(Errc::invalid_probability, "every sketch has zero norm");
  }
  reference_ = rule_.reference_p.size() == q_ ? rule_.reference_p : uniform_probability(q_);
  losses_.resize(q_);
  if (rule_.kind == RuleKind::RowNormWeighted ||
      (rule_.kind == RuleKind::SketchMotzkin && rule_.block_distribution == BlockDistribution::Weighted)) {
    build_cumulative(weights_, cumulative_);
  }
}

std::optional<SelectionTrace> Sampler::next(const LossFn& loss) {
  SelectionTrace trace;
  switch (rule_.kind) {
    case RuleKind::Uniform:
      trace.chosen = select_uniform(rng_, q_);
      trace.candidate_set.assign(1, trace.chosen);
      return trace;
    case RuleKind::RowNormWeighted:
      trace.chosen = draw_from_cumulative(rng_, cumulative_);
      trace.candidate_set.assign(1, trace.chosen);
      return trace;
    case RuleKind::MaxDistance:
    case RuleKind::ProportionalToLoss:
    case RuleKind::Capped: {
      for (Index i = 0; i < q_; ++i) losses_[i] = loss(i);
      if (rule_.kind == RuleKind::Capped) return select_capped(rng_, losses_, rule_.theta, reference_);
      const auto pick = rule_.kind == RuleKind::MaxDistance ? select_max_distance(losses_)
                                                            : select_proportional(rng_, losses_);
      if (!pick) return std::nullopt;
      trace.chosen = *pick;
      trace.candidate_set.assign(1, *pick);
      trace.losses_evaluated = q_;
      return trace;
    }
    case RuleKind::SketchMotzkin: {
      auto draw = [&] {
        return drawer_.draw(rng_, rule_.beta, cumulative_.empty() ? nullptr : &cumulative_);
      };
      return motzkin_select(q_, loss, draw);
    }
  }
  return std::nullopt;
}

}  // namespace sbp
