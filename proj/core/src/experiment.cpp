#include "sbp/experiment.hpp"

#include "sbp/errors.hpp"
#include "sbp/matrix_market.hpp"
#include "sbp/svg.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace sbp {

namespace {

constexpr std::uint64_t kDataStream = 0x9e6c63d0676a9a99ULL;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void push_quantiles(QuantileSeries& s, std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  s.min.push_back(values.front());
  s.q25.push_back(quantile_sorted(values, 0.25));
  s.median.push_back(quantile_sorted(values, 0.5));
  s.q75.push_back(quantile_sorted(values, 0.75));
  s.max.push_back(values.back());
}

struct SharedData {
  Matrix A;
  Vector b;
  Vector truth;
};

SharedData load_data(const ExperimentConfig& c, std::uint64_t seed) {
  SharedData d;
  if (c.source == ExperimentConfig::Source::Gaussian) {
    auto g = generate_problem(c.rows, c.cols, c.sparsity, seed);
    d.A = std::move(g.A);
    d.b = std::move(g.b);
    d.truth = std::move(g.truth);
  } else {
    d.A = load_matrix_market(c.matrix_path);
    d.b = load_vector_market(c.rhs_path);
    d.truth = load_vector_market(c.truth_path);
  }
  if (c.step == StepMode::Inexact) {
    // The inexact step assumes unit-norm rows; rescale each equation.
    const Vector norms = d.A.rowwise().norm();
    for (Index i = 0; i < d.A.rows(); ++i) {
      if (norms[i] > 0.0) {
        d.A.row(i) /= norms[i];
        d.b[i] /= norms[i];
      }
    }
  }
  return d;
}

Problem make_problem(const ExperimentConfig& c, const SharedData& d) {
  const GeneratingFunction f =
      c.method == Method::Kaczmarz ? GeneratingFunction::squared_norm() : GeneratingFunction::elastic_net(c.lambda);
  return Problem::make(d.A, d.b, d.truth, f);
}

std::string metadata_line(const ExperimentConfig& c) {
  std::ostringstream m;
  m << "source=" << (c.source == ExperimentConfig::Source::Gaussian ? "gaussian" : "file");
  if (c.source == ExperimentConfig::Source::Gaussian) {
    m << " rows=" << c.rows << " cols=" << c.cols << " sparsity=" << c.sparsity;
  } else {
    m << " matrix=" << c.matrix_path;
  }
  m << " method=" << to_string(c.method) << " lambda=" << fmt(c.lambda) << " rule=" << to_string(c.rule)
    << " theta=" << fmt(c.theta) << " beta=" << c.beta << " p1=" << to_string(c.p1) << " step=" << to_string(c.step)
    << " trials=" << c.trials << " master_seed=" << c.master_seed
    << " data=" << (c.fresh_data_per_trial ? "per-trial" : "shared") << " flop_axis="
    << (c.measured_axis ? "measured" : (c.method == Method::Kaczmarz ? "modeled-kaczmarz" : "modeled"));
  return m.str();
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master + index * 0x9e3779b97f4a7c15ULL;
  return splitmix64(state);
}

GeneratedProblem generate_problem(Index m, Index n, Index sparsity, std::uint64_t seed) {
  if (m < 1 || n < 1) throw Error(Errc::invalid_argument, "generate: rows and cols must be >= 1");
  if (sparsity < 1 || sparsity > n) {
    throw Error(Errc::invalid_argument, "generate: sparsity must lie in [1, " + std::to_string(n) + "]");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal;
  GeneratedProblem g;
  g.A.resize(m, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) g.A(i, j) = normal(rng);
  }
  std::vector<Index> pos(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) pos[static_cast<std::size_t>(j)] = j;
  for (Index k = 0; k < sparsity; ++k) {
    const Index j = std::uniform_int_distribution<Index>(k, n - 1)(rng);
    std::swap(pos[static_cast<std::size_t>(k)], pos[static_cast<std::size_t>(j)]);
  }
  g.truth = Vector::Zero(n);
  for (Index k = 0; k < sparsity; ++k) {
    double v = 0.0;
    while (v == 0.0) v = normal(rng);
    g.truth[pos[static_cast<std::size_t>(k)]] = v;
  }
  g.b = g.A * g.truth;
  return g;
}

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw Error(Errc::invalid_argument, "quantile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

QuantileSeries aggregate_by_iteration(const std::vector<std::vector<IterationRecord>>& histories) {
  if (histories.empty()) throw Error(Errc::invalid_argument, "no trials to aggregate");
  std::vector<Index> ks;
  for (const auto& h : histories) {
    if (h.empty()) throw Error(Errc::invalid_argument, "empty trial history");
    for (const auto& r : h) ks.push_back(r.k);
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  QuantileSeries s;
  s.axis = "k";
  std::vector<std::size_t> cursor(histories.size(), 0);
  std::vector<double> values(histories.size());
  for (Index k : ks) {
    for (std::size_t t = 0; t < histories.size(); ++t) {
      const auto& h = histories[t];
      while (cursor[t] + 1 < h.size() && h[cursor[t] + 1].k <= k) ++cursor[t];
      values[t] = h[cursor[t]].mse;
    }
    s.grid.push_back(static_cast<double>(k));
    push_quantiles(s, values);
  }
  return s;
}

QuantileSeries aggregate_by_flops(const std::vector<std::vector<IterationRecord>>& histories, bool measured,
                                  Index points) {
  if (histories.empty()) throw Error(Errc::invalid_argument, "no trials to aggregate");
  if (points < 1) throw Error(Errc::invalid_argument, "flop grid needs at least one point");
  auto flops = [measured](const IterationRecord& r) { return measured ? r.flops_measured : r.flops_modeled; };
  double fmax = 0.0;
  for (const auto& h : histories) {
    if (h.empty()) throw Error(Errc::invalid_argument, "empty trial history");
    fmax = std::max(fmax, flops(h.back()));
  }
  QuantileSeries s;
  s.axis = "flops";
  std::vector<std::size_t> cursor(histories.size(), 0);
  std::vector<double> values(histories.size());
  for (Index g = 0; g < points; ++g) {
    const double F = points == 1 ? fmax : fmax * static_cast<double>(g) / static_cast<double>(points - 1);
    for (std::size_t t = 0; t < histories.size(); ++t) {
      const auto& h = histories[t];
      std::size_t& c = cursor[t];
      while (c + 1 < h.size() && flops(h[c + 1]) <= F) ++c;
      if (c + 1 >= h.size() || flops(h[c]) >= F) {
        values[t] = h[c].mse;
      } else {
        const double f0 = flops(h[c]);
        const double f1 = flops(h[c + 1]);
        const double w = (F - f0) / (f1 - f0);
        values[t] = h[c].mse + w * (h[c + 1].mse - h[c].mse);
      }
    }
    s.grid.push_back(F);
    push_quantiles(s, values);
  }
  return s;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw Error(Errc::configuration, "trials must be >= 1");
  if (history_stride < 1) throw Error(Errc::configuration, "history stride must be >= 1");
  if (flop_points < 1) throw Error(Errc::configuration, "flop grid needs at least one point");
  if (source == Source::Gaussian) {
    if (rows < 1 || cols < 1) throw Error(Errc::configuration, "rows and cols must be >= 1");
    if (sparsity < 1 || sparsity > cols) throw Error(Errc::configuration, "sparsity must lie in [1, cols]");
  } else if (matrix_path.empty() || rhs_path.empty() || truth_path.empty()) {
    throw Error(Errc::configuration, "file experiments need --matrix, --rhs and --truth");
  }
  if (method == Method::SparseKaczmarz && !(lambda >= 0.0)) throw Error(Errc::configuration, "lambda must be >= 0");
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(Errc::configuration, "theta must lie in [0, 1]");
  if (beta < 1) throw Error(Errc::configuration, "beta must be >= 1");
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto trials = static_cast<std::size_t>(config.trials);
  std::optional<SharedData> shared_data;
  std::optional<Problem> shared;
  if (!config.fresh_data_per_trial) {
    shared_data = load_data(config, derive_seed(config.master_seed ^ kDataStream, 0));
    shared = make_problem(config, *shared_data);
  }

  ExperimentResult result;
  result.trials.resize(trials);
  std::vector<std::exception_ptr> errors(trials);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t t = next++; t < trials; t = next++) {
      TrialOutcome& out = result.trials[t];
      out.seed = derive_seed(config.master_seed, t);
      try {
        std::optional<Problem> own;
        if (!shared) own = make_problem(config, load_data(config, derive_seed(config.master_seed ^ kDataStream, t)));
        const Problem& problem = shared ? *shared : *own;
        SamplingRule rule;
        rule.kind = config.rule;
        rule.theta = config.theta;
        rule.beta = config.beta;
        rule.block_distribution = config.p1;
        rule.rng_seed = out.seed;
        const StoppingCriteria stop = config.stop.empty() ? StoppingCriteria::defaults(problem) : config.stop;
        RunOptions opts;
        opts.step = config.step;
        opts.history_stride = config.history_stride;
        opts.budget_on_measured = config.measured_axis;
        SolveResult r = run(problem, rule, stop, opts);
        out.reason = r.reason;
        out.history = std::move(r.history);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };

  std::size_t nworkers = config.workers > 0 ? static_cast<std::size_t>(config.workers)
                                            : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  nworkers = std::min(nworkers, trials);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < nworkers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (std::size_t t = 0; t < trials; ++t) {
    if (!errors[t]) continue;
    try {
      std::rethrow_exception(errors[t]);
    } catch (const Error& e) {
      throw Error(e.code(), "trial " + std::to_string(t) + " (seed " + std::to_string(result.trials[t].seed) +
                                ") failed: " + e.what());
    }
  }

  std::vector<std::vector<IterationRecord>> histories;
  histories.reserve(trials);
  for (const auto& t : result.trials) histories.push_back(t.history);
  result.by_iteration = aggregate_by_iteration(histories);
  result.by_flops = aggregate_by_flops(histories, config.measured_axis, config.flop_points);
  result.metadata = metadata_line(config);
  return result;
}

void write_quantile_csv(std::ostream& out, const QuantileSeries& s, const std::string& metadata) {
  out << "# " << metadata << '\n' << s.axis << ",min,q25,median,q75,max\n";
  for (std::size_t j = 0; j < s.size(); ++j) {
    out << fmt(s.grid[j]) << ',' << fmt(s.min[j]) << ',' << fmt(s.q25[j]) << ',' << fmt(s.median[j]) << ','
        << fmt(s.q75[j]) << ',' << fmt(s.max[j]) << '\n';
  }
}

void write_trials_csv(std::ostream& out, const ExperimentResult& result) {
  out << "# " << result.metadata << '\n'
      << "trial,seed,iterations,stop_reason,final_mse,flops_modeled,flops_measured\n";
  for (std::size_t t = 0; t < result.trials.size(); ++t) {
    const auto& tr = result.trials[t];
    const auto& last = tr.history.back();
    out << t << ',' << tr.seed << ',' << last.k << ',' << to_string(tr.reason) << ',' << fmt(last.mse) << ','
        << fmt(last.flops_modeled) << ',' << fmt(last.flops_measured) << '\n';
  }
}

void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  if (config.output_prefix.empty()) throw Error(Errc::configuration, "missing output prefix");
  auto open = [](const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(Errc::io, "cannot write '" + path + "'");
    return f;
  };
  {
    auto f = open(config.output_prefix + "_iter.csv");
    write_quantile_csv(f, result.by_iteration, result.metadata + " axis=iteration");
  }
  {
    auto f = open(config.output_prefix + "_flops.csv");
    write_quantile_csv(f, result.by_flops, result.metadata + " axis=flops");
  }
  {
    auto f = open(config.output_prefix + "_trials.csv");
    write_trials_csv(f, result);
  }
  if (config.svg) {
    emit_svg(config.output_prefix + "_iter.svg", result.by_iteration, "MSE vs iteration");
    emit_svg(config.output_prefix + "_flops.svg", result.by_flops, "MSE vs flops");
  }
}

}  // namespace sbp
