#pragma once

#include "sbp/bregman.hpp"
#include "sbp/linalg.hpp"
#include "sbp/sampling.hpp"
#include "sbp/sketching.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sbp {

enum class Method { Kaczmarz, SparseKaczmarz };
enum class StepMode { Exact, Inexact };

std::string_view to_string(Method m);
/// Accepts kaczmarz|sparse.
Method parse_method(std::string_view name);
std::string_view to_string(StepMode s);
/// Accepts exact|inexact.
StepMode parse_step_mode(std::string_view name);

/// Kaczmarz for SquaredNorm, SparseKaczmarz for ElasticNet (any lambda).
Method method_of(const GeneratingFunction& f);

/// A consistent system A x = b together with the geometry and sketch family.
struct Problem {
  Matrix A;
  Vector b;
  std::optional<Vector> truth;
  GeneratingFunction f = GeneratingFunction::squared_norm();
  SketchSet sketch;
  /// A A^T, present for SquaredNorm with row sketches and m <= gram_cap.
  std::optional<Matrix> gram;

  /// Validates dimensions and, when given, that |A truth - b| <= 1e-8 (1 + |b|).
  /// Uses row sketches when `sketch` is empty.
  static Problem make(Matrix A, Vector b, std::optional<Vector> truth, GeneratingFunction f,
                      std::optional<SketchSet> sketch = std::nullopt, Index gram_cap = 4000);
};

struct StoppingCriteria {
  std::optional<Index> max_iters;
  std::optional<double> mse_tol;
  std::optional<double> residual_tol;
  std::optional<double> flop_budget;

  bool empty() const { return !max_iters && !mse_tol && !residual_tol && !flop_budget; }
  /// mse_tol 1e-8 with truth, else residual_tol 1e-8 (1 + |b|); max_iters 1e6.
  static StoppingCriteria defaults(const Problem& problem);
};

enum class StopReason { MaxIters, MseTol, ResidualTol, FlopBudget, Converged };
std::string_view to_string(StopReason r);

struct IterationRecord {
  Index k = 0;
  Index chosen = -1;
  double mse = 0.0;            // NaN without truth
  double bregman_dist = 0.0;   // NaN without truth
  double loss_at_chosen = 0.0; // g_{i_k}(x^k), before the step
  double flops_modeled = 0.0;
  double flops_measured = 0.0;
};

struct SolveState {
  PrimalDualPair pair;
  Vector residual;  // A x - b; meaningful only when residual_valid
  bool residual_valid = false;
  Index k = 0;
  double flops_modeled = 0.0;
  double flops_measured = 0.0;
  Index steps_since_refresh = 0;

  /// x = x_star = 0 with the residual -b.
  static SolveState initial(const Problem& problem, bool track_residual);
};

/// One step with sketch i: x_star <- x_star - A^T S_i y, x <- grad f*(x_star).
/// Adds the arithmetic performed to state.flops_measured and keeps the
/// residual current when state.residual_valid is set. Does not touch k or
/// flops_modeled.
void sbp_step(SolveState& state, const Problem& problem, Index i, StepMode mode);

/// Modeled cost of one iteration. For Kaczmarz: rule term
/// {0, 0, m, 2m, 5m, beta} + 4n (a local convention). For SparseKaczmarz
/// the rule term is added to 17n + n ln n, with 21n + n ln n for uniform and
/// rownorm.
double modeled_flops_per_iter(RuleKind rule, Method method, Index m, Index n, Index beta);

/// |x - truth|^2 / |truth|^2. Throws Errc::zero_truth when truth == 0.
double mse(VectorRef x, VectorRef truth);

struct RunOptions {
  StepMode step = StepMode::Exact;
  Index history_stride = 1;
  /// Compare flop_budget against measured instead of modeled flops.
  bool budget_on_measured = false;
  /// Full residual recomputation period for incremental updates.
  Index refresh_period = 1024;
  /// Called after every step with the chosen index, g_i(x^k) and the new state.
  std::function<void(Index chosen, double loss_before, const SolveState& after)> observer;
};

struct SolveResult {
  SolveState state;
  StopReason reason = StopReason::MaxIters;
  std::vector<IterationRecord> history;
};

/// Runs from x^0 = x_star^0 = 0 until a stopping criterion fires. The history
/// holds k = 0, every `history_stride`-th iteration, and the final one.
/// Throws Errc::configuration when `stop` is empty or mse_tol lacks truth.
SolveResult run(const Problem& problem, const SamplingRule& rule, const StoppingCriteria& stop,
                const RunOptions& options = {});

/// CSV with header k,chosen_index,mse,bregman_dist,loss_at_chosen,flops_modeled,flops_measured
/// and 17 significant digits per float.
void write_history_csv(std::ostream& out, const std::vector<IterationRecord>& history);
std::vector<IterationRecord> read_history_csv(std::istream& in);

}  // namespace sbp
