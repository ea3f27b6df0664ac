#pragma once

#include "sbp/linalg.hpp"
#include "sbp/sampling.hpp"
#include "sbp/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sbp {

/// One step of the splitmix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);
/// Child seed `index` of `master`: the (index + 1)-th splitmix64 output
/// started from `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct GeneratedProblem {
  Matrix A;
  Vector b;
  Vector truth;
};

/// A with i.i.d. N(0, 1) entries, truth with `sparsity` N(0, 1) entries at
/// uniformly random positions, b = A truth.
GeneratedProblem generate_problem(Index m, Index n, Index sparsity, std::uint64_t seed);

/// Sample quantile with linear interpolation between order statistics
/// (h = (n - 1) prob). `sorted` must be ascending and nonempty.
double quantile_sorted(const std::vector<double>& sorted, double prob);

struct QuantileSeries {
  std::string axis;  // "k" or "flops"
  std::vector<double> grid;
  std::vector<double> min, q25, median, q75, max;

  std::size_t size() const { return grid.size(); }
};

/// Quantiles of MSE across trials at every iteration checkpoint. A trial that
/// stopped early contributes its last value.
QuantileSeries aggregate_by_iteration(const std::vector<std::vector<IterationRecord>>& histories);
/// Quantiles on `points` evenly spaced flop checkpoints in [0, max final
/// flops], interpolating each trial linearly in flops.
QuantileSeries aggregate_by_flops(const std::vector<std::vector<IterationRecord>>& histories, bool measured,
                                  Index points);

struct ExperimentConfig {
  enum class Source { Gaussian, File };
  Source source = Source::Gaussian;
  Index rows = 300;
  Index cols = 200;
  Index sparsity = 30;
  std::string matrix_path;
  std::string rhs_path;
  std::string truth_path;

  Method method = Method::SparseKaczmarz;
  double lambda = 1.0;
  RuleKind rule = RuleKind::Uniform;
  double theta = 0.5;
  Index beta = 1;
  BlockDistribution p1 = BlockDistribution::Weighted;
  StepMode step = StepMode::Exact;

  Index trials = 100;
  std::uint64_t master_seed = 0;
  StoppingCriteria stop;  // empty: mse_tol 1e-8, max_iters 1e6
  Index history_stride = 1;
  bool fresh_data_per_trial = false;
  bool measured_axis = false;
  Index flop_points = 200;
  Index workers = 0;  // 0: hardware concurrency
  std::string output_prefix;
  bool svg = false;

  void validate() const;
};

struct TrialOutcome {
  std::uint64_t seed = 0;
  StopReason reason = StopReason::MaxIters;
  std::vector<IterationRecord> history;
};

struct ExperimentResult {
  QuantileSeries by_iteration;
  QuantileSeries by_flops;
  std::vector<TrialOutcome> trials;
  std::string metadata;  // single line, no leading '#'
};

/// Seeds: trial t uses derive_seed(master, t) for sampling; data draws use
/// derive_seed(master ^ kDataStream, t) with t = 0 when shared.
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_quantile_csv(std::ostream& out, const QuantileSeries& series, const std::string& metadata);
void write_trials_csv(std::ostream& out, const ExperimentResult& result);
/// Writes <prefix>_iter.csv, <prefix>_flops.csv, <prefix>_trials.csv and,
/// when config.svg is set, <prefix>_iter.svg and <prefix>_flops.svg.
void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace sbp
