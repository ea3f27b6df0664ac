#include "sbp/solver.hpp"

#include "sbp/errors.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace sbp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void full_residual(SolveState& s, const Problem& p, double& flops) {
  s.residual.noalias() = p.A * s.pair.x;
  s.residual -= p.b;
  flops += 2.0 * static_cast<double>(p.A.rows() * p.A.cols());
  s.steps_since_refresh = 0;
}

// r += A (x_new - x_old), touching only the columns that changed.
void delta_residual(SolveState& s, const Problem& p, const Vector& x_old, double& flops) {
  const Index n = p.A.cols();
  Index nnz = 0;
  for (Index j = 0; j < n; ++j) nnz += s.pair.x[j] != x_old[j] ? 1 : 0;
  flops += static_cast<double>(n);
  if (2 * nnz > n) {
    full_residual(s, p, flops);
    return;
  }
  for (Index j = 0; j < n; ++j) {
    const double d = s.pair.x[j] - x_old[j];
    if (d != 0.0) s.residual.noalias() += d * p.A.col(j);
  }
  flops += 2.0 * static_cast<double>(nnz * p.A.rows());
}

double loss_flops(const SketchSet& sketch, Index i) {
  if (sketch.kind() == SketchKind::Row) return 2.0;
  const auto& W = sketch.block_w(i);
  return 2.0 * static_cast<double>(W.rows() * W.cols()) + static_cast<double>(W.rows());
}

double selection_flops(RuleKind kind, Index q, const SelectionTrace& t) {
  switch (kind) {
    case RuleKind::ProportionalToLoss: return 2.0 * static_cast<double>(q);
    case RuleKind::Capped: return 4.0 * static_cast<double>(q) + static_cast<double>(t.candidate_set.size());
    default: return 0.0;
  }
}

void row_step(SolveState& s, const Problem& p, Index i, StepMode mode) {
  const auto a = p.A.row(i).transpose();
  const Index n = p.A.cols();
  if (p.sketch.frobenius_sq(i) == 0.0) return;  // identity step on a zero row
  double& fl = s.flops_measured;
  double t;
  if (mode == StepMode::Inexact) {
    t = inexact_dual_step(s.pair.x, a, p.b[i]);
    fl += 2.0 * static_cast<double>(n);
  } else {
    t = exact_dual_linesearch(p.f, s.pair.x_star, a, p.b[i], &fl);
  }
  if (t == 0.0) return;
  s.pair.x_star.noalias() -= t * a;
  fl += 2.0 * static_cast<double>(n);
  if (p.f.is_smooth()) {
    s.pair.x = s.pair.x_star;
    if (s.residual_valid) {
      if (p.gram) {
        s.residual.noalias() -= t * p.gram->col(i);
        fl += 2.0 * static_cast<double>(p.A.rows());
      } else {
        full_residual(s, p, fl);
      }
    }
    return;
  }
  Vector x_old;
  if (s.residual_valid) x_old = s.pair.x;
  s.pair.x = soft_threshold(s.pair.x_star, p.f.lambda());
  fl += 2.0 * static_cast<double>(n);
  if (s.residual_valid) delta_residual(s, p, x_old, fl);
}

// Gradient descent on D(y) = f*(x_star - M^T y) + <b_tau, y>.
Vector block_dual_solve(const Problem& p, const Matrix& M, const Vector& bt, VectorRef x_star, double lipschitz,
                        double& fl) {
  constexpr Index kMaxInner = 10000;
  const double lambda = p.f.lambda();
  const double tol = 1e-10 * (1.0 + bt.norm());
  const double step = 1.0 / lipschitz;
  const auto cost = 4.0 * static_cast<double>(M.rows() * M.cols()) + 4.0 * static_cast<double>(M.cols());
  Vector y = Vector::Zero(M.rows());
  Vector z(M.cols());
  Vector grad(M.rows());
  double gnorm = 0.0;
  for (Index it = 0; it < kMaxInner; ++it) {
    z = x_star;
    z.noalias() -= M.transpose() * y;
    grad = bt;
    grad.noalias() -= M * soft_threshold(z, lambda);
    fl += cost;
    gnorm = grad.norm();
    if (gnorm <= tol) return y;
    y -= step * grad;
  }
  throw Error(Errc::inner_solver_nonconvergence,
              "block dual solver did not converge in " + std::to_string(kMaxInner) +
                  " iterations (gradient norm " + std::to_string(gnorm) + ", tolerance " + std::to_string(tol) + ")");
}

void block_step(SolveState& s, const Problem& p, Index i, StepMode mode) {
  const auto blk = p.sketch.block(i);
  const auto tau = static_cast<Index>(blk.size());
  const Index n = p.A.cols();
  double& fl = s.flops_measured;
  if (p.sketch.block_rank(i) == 0) return;

  Vector dual_change;
  if (p.f.is_smooth() || mode == StepMode::Inexact) {
    // Closed form: M^T (M M^T)^+ r_tau = V W r_tau, with r_tau from the primal iterate.
    Vector rt(tau);
    if (s.residual_valid) {
      for (Index k = 0; k < tau; ++k) rt[k] = s.residual[blk[static_cast<std::size_t>(k)]];
    } else {
      for (Index k = 0; k < tau; ++k) {
        const Index r = blk[static_cast<std::size_t>(k)];
        rt[k] = p.A.row(r).dot(s.pair.x) - p.b[r];
      }
      fl += 2.0 * static_cast<double>(tau * n);
    }
    const Matrix& W = p.sketch.block_w(i);
    const Matrix& V = p.sketch.block_v(i);
    dual_change = V * (W * rt);
    fl += 2.0 * static_cast<double>(W.rows() * W.cols() + V.rows() * V.cols());
  } else {
    Matrix M(tau, n);
    Vector bt(tau);
    for (Index k = 0; k < tau; ++k) {
      const Index r = blk[static_cast<std::size_t>(k)];
      M.row(k) = p.A.row(r);
      bt[k] = p.b[r];
    }
    const Vector y = block_dual_solve(p, M, bt, s.pair.x_star, p.sketch.spectral_sq(i), fl);
    dual_change = M.transpose() * y;
    fl += 2.0 * static_cast<double>(tau * n);
  }

  s.pair.x_star -= dual_change;
  fl += static_cast<double>(n);
  Vector x_old;
  if (s.residual_valid) x_old = s.pair.x;
  if (p.f.is_smooth()) {
    s.pair.x = s.pair.x_star;
  } else {
    s.pair.x = soft_threshold(s.pair.x_star, p.f.lambda());
    fl += 2.0 * static_cast<double>(n);
  }
  if (s.residual_valid) delta_residual(s, p, x_old, fl);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::Kaczmarz ? "kaczmarz" : "sparse"; }

Method parse_method(std::string_view name) {
  if (name == "kaczmarz") return Method::Kaczmarz;
  if (name == "sparse") return Method::SparseKaczmarz;
  throw Error(Errc::invalid_argument, "unknown method '" + std::string(name) + "' (expected kaczmarz|sparse)");
}

std::string_view to_string(StepMode s) { return s == StepMode::Exact ? "exact" : "inexact"; }

StepMode parse_step_mode(std::string_view name) {
  if (name == "exact") return StepMode::Exact;
  if (name == "inexact") return StepMode::Inexact;
  throw Error(Errc::invalid_argument, "unknown step '" + std::string(name) + "' (expected exact|inexact)");
}

Method method_of(const GeneratingFunction& f) {
  return f.kind() == GeneratingKind::SquaredNorm ? Method::Kaczmarz : Method::SparseKaczmarz;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIters: return "max_iters";
    case StopReason::MseTol: return "mse_tol";
    case StopReason::ResidualTol: return "residual_tol";
    case StopReason::FlopBudget: return "flop_budget";
    case StopReason::Converged: return "converged";
  }
  return "unknown";
}

Problem Problem::make(Matrix A, Vector b, std::optional<Vector> truth, GeneratingFunction f,
                      std::optional<SketchSet> sketch, Index gram_cap) {
  if (A.rows() < 1 || A.cols() < 1) throw Error(Errc::dimension_mismatch, "matrix must be at least 1x1");
  if (b.size() != A.rows()) {
    throw Error(Errc::dimension_mismatch, "right-hand side has length " + std::to_string(b.size()) +
                                              ", matrix has " + std::to_string(A.rows()) + " rows");
  }
  if (truth) {
    if (truth->size() != A.cols()) {
      throw Error(Errc::dimension_mismatch, "truth has length " + std::to_string(truth->size()) + ", matrix has " +
                                                std::to_string(A.cols()) + " columns");
    }
    const double gap = (A * *truth - b).norm();
    if (gap > 1e-8 * (1.0 + b.norm())) {
      throw Error(Errc::invalid_argument, "system is inconsistent with the given truth: |A x - b| = " +
                                              std::to_string(gap));
    }
  }
  SketchSet s = sketch ? std::move(*sketch) : SketchSet::rows(A);
  s.check_compatible(A);
  std::optional<Matrix> gram;
  if (f.is_smooth() && s.kind() == SketchKind::Row && A.rows() <= gram_cap) {
    gram = A * A.transpose();
  }
  return Problem{std::move(A), std::move(b), std::move(truth), f, std::move(s), std::move(gram)};
}

StoppingCriteria StoppingCriteria::defaults(const Problem& problem) {
  StoppingCriteria c;
  c.max_iters = 1000000;
  if (problem.truth) {
    c.mse_tol = 1e-8;
  } else {
    c.residual_tol = 1e-8 * (1.0 + problem.b.norm());
  }
  return c;
}

SolveState SolveState::initial(const Problem& problem, bool track_residual) {
  SolveState s;
  s.pair.x = Vector::Zero(problem.A.cols());
  s.pair.x_star = Vector::Zero(problem.A.cols());
  if (track_residual) {
    s.residual = -problem.b;
    s.residual_valid = true;
  }
  return s;
}

void sbp_step(SolveState& state, const Problem& problem, Index i, StepMode mode) {
  problem.sketch.check_index(i);
  if (problem.sketch.kind() == SketchKind::Row) {
    row_step(state, problem, i, mode);
  } else {
    block_step(state, problem, i, mode);
  }
}

double modeled_flops_per_iter(RuleKind rule, Method method, Index m, Index n, Index beta) {
  if (m < 1 || n < 1) throw Error(Errc::invalid_argument, "flop model needs m, n >= 1");
  const auto md = static_cast<double>(m);
  const auto nd = static_cast<double>(n);
  double rule_term = 0.0;
  switch (rule) {
    case RuleKind::Uniform:
    case RuleKind::RowNormWeighted: rule_term = 0.0; break;
    case RuleKind::MaxDistance: rule_term = md; break;
    case RuleKind::ProportionalToLoss: rule_term = 2.0 * md; break;
    case RuleKind::Capped: rule_term = 5.0 * md; break;
    case RuleKind::SketchMotzkin: rule_term = static_cast<double>(beta); break;
  }
  if (method == Method::Kaczmarz) return rule_term + 4.0 * nd;
  const double base = nd * std::log(nd);
  if (rule == RuleKind::Uniform || rule == RuleKind::RowNormWeighted) return 21.0 * nd + base;
  return rule_term + 17.0 * nd + base;
}

double mse(VectorRef x, VectorRef truth) {
  if (x.size() != truth.size()) throw Error(Errc::dimension_mismatch, "mse: vector lengths differ");
  const double t2 = truth.squaredNorm();
  if (t2 == 0.0) throw Error(Errc::zero_truth, "mse: truth is the zero vector");
  return (x - truth).squaredNorm() / t2;
}

SolveResult run(const Problem& problem, const SamplingRule& rule, const StoppingCriteria& stop,
                const RunOptions& options) {
  if (stop.empty()) throw Error(Errc::configuration, "no stopping criterion given");
  if (stop.mse_tol && !problem.truth) throw Error(Errc::configuration, "mse_tol requires a truth vector");
  if (options.history_stride < 1) throw Error(Errc::configuration, "history stride must be >= 1");
  if (problem.truth && problem.truth->squaredNorm() == 0.0) {
    throw Error(Errc::zero_truth, "truth is the zero vector");
  }

  const SketchSet& sketch = problem.sketch;
  const Index q = sketch.size();
  Sampler sampler(rule, sketch);
  const bool track = is_adaptive(rule.kind) || stop.residual_tol.has_value();
  const double per_iter =
      modeled_flops_per_iter(rule.kind, method_of(problem.f), q, problem.A.cols(), rule.beta);

  SolveResult result;
  SolveState& s = result.state;
  s = SolveState::initial(problem, track);

  auto record = [&](Index chosen, double loss) {
    IterationRecord r;
    r.k = s.k;
    r.chosen = chosen;
    r.loss_at_chosen = loss;
    r.flops_modeled = s.flops_modeled;
    r.flops_measured = s.flops_measured;
    if (problem.truth) {
      r.mse = mse(s.pair.x, *problem.truth);
      r.bregman_dist = bregman_distance(problem.f, s.pair, *problem.truth);
    } else {
      r.mse = kNaN;
      r.bregman_dist = kNaN;
    }
    result.history.push_back(r);
  };

  auto check = [&]() -> std::optional<StopReason> {
    if (stop.mse_tol && mse(s.pair.x, *problem.truth) <= *stop.mse_tol) return StopReason::MseTol;
    if (stop.residual_tol && s.residual.norm() <= *stop.residual_tol) return StopReason::ResidualTol;
    if (stop.flop_budget && s.k > 0) {
      const double used = options.budget_on_measured ? s.flops_measured : s.flops_modeled;
      if (used >= *stop.flop_budget) return StopReason::FlopBudget;
    }
    if (stop.max_iters && s.k >= *stop.max_iters) return StopReason::MaxIters;
    return std::nullopt;
  };

  const LossFn loss_fn = [&](Index i) { return sketch.loss_from_residual(i, s.residual); };

  record(-1, 0.0);
  Index last_recorded = 0;
  std::optional<StopReason> reason = check();
  while (!reason) {
    const auto pick = sampler.next(loss_fn);
    if (!pick) {
      reason = StopReason::Converged;
      break;
    }
    const Index i = pick->chosen;
    if (is_adaptive(rule.kind)) {
      s.flops_measured += static_cast<double>(pick->losses_evaluated) * loss_flops(sketch, i) +
                          selection_flops(rule.kind, q, *pick);
    }
    const double loss_before = s.residual_valid ? sketch.loss_from_residual(i, s.residual)
                                                : sketched_loss(sketch, i, problem.A, s.pair.x, problem.b);
    sbp_step(s, problem, i, options.step);
    ++s.k;
    s.flops_modeled += per_iter;
    if (s.residual_valid && ++s.steps_since_refresh >= options.refresh_period) {
      double ignored = 0.0;
      full_residual(s, problem, ignored);
    }
    if (options.observer) options.observer(i, loss_before, s);
    reason = check();
    if (reason || s.k % options.history_stride == 0) {
      record(i, loss_before);
      last_recorded = s.k;
    }
  }
  if (last_recorded != s.k) {
    // Converged before the stride boundary: close the history with the final state.
    record(-1, 0.0);
  }
  result.reason = *reason;
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<IterationRecord>& history) {
  out << "k,chosen_index,mse,bregman_dist,loss_at_chosen,flops_modeled,flops_measured\n";
  for (const auto& r : history) {
    out << r.k << ',' << r.chosen << ',' << format_double(r.mse) << ',' << format_double(r.bregman_dist) << ','
        << format_double(r.loss_at_chosen) << ',' << format_double(r.flops_modeled) << ','
        << format_double(r.flops_measured) << '\n';
  }
}

std::vector<IterationRecord> read_history_csv(std::istream& in) {
  std::vector<IterationRecord> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "k,chosen_index,mse,bregman_dist,loss_at_chosen,flops_modeled,flops_measured") {
        throw Error(Errc::parse_error, "history line " + std::to_string(lineno) + ": unexpected header");
      }
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) {
      throw Error(Errc::parse_error, "history line " + std::to_string(lineno) + ": expected 7 fields, got " +
                                         std::to_string(cells.size()));
    }
    try {
      IterationRecord r;
      r.k = std::stoll(cells[0]);
      r.chosen = std::stoll(cells[1]);
      r.mse = std::stod(cells[2]);
      r.bregman_dist = std::stod(cells[3]);
      r.loss_at_chosen = std::stod(cells[4]);
      r.flops_modeled = std::stod(cells[5]);
      r.flops_measured = std::stod(cells[6]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw Error(Errc::parse_error, "history line " + std::to_string(lineno) + ": malformed number");
    }
  }
  if (!header) throw Error(Errc::parse_error, "history: missing header");
  return out;
}

}  // namespace sbp
