// sbp: generate problems, solve, run multi-trial benchmarks, and report
// spectral constants.

#include "sbp/errors.hpp"
#include "sbp/experiment.hpp"
#include "sbp/matrix_market.hpp"
#include "sbp/solver.hpp"
#include "sbp/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kNumerical = 3;

struct CommonRule {
  std::string rule = "uniform";
  double theta = 0.5;
  sbp::Index beta = 1;
  std::string p1 = "weighted";
};

void add_rule_options(CLI::App* app, CommonRule& r) {
  app->add_option("--rule", r.rule, "uniform|rownorm|maxdist|proportional|capped|skm")->capture_default_str();
  app->add_option("--theta", r.theta, "capped rule blend in [0, 1]")->capture_default_str();
  app->add_option("--beta", r.beta, "skm block size")->capture_default_str();
  app->add_option("--p1", r.p1, "skm block distribution: weighted|uniform")->capture_default_str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// key=value lines become --key value pairs; boolean keys become bare flags.
std::vector<std::string> config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sbp::Error(sbp::Errc::io, "cannot open config '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw sbp::Error(sbp::Errc::parse_error, path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw sbp::Error(sbp::Errc::parse_error, path + ":" + std::to_string(lineno) + ": empty key");
    if (value == "true") {
      out.push_back("--" + key);
    } else if (value != "false") {
      out.push_back("--" + key);
      out.push_back(value);
    }
  }
  return out;
}

// Splices the contents of `bench --config FILE` in front of the other bench
// flags so that later command-line flags take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::size_t sub = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "bench") {
      sub = i;
      break;
    }
  }
  if (sub == args.size()) return args;
  std::string path;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return args;
  const auto extra = config_args(path);
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, extra.begin(), extra.end());
  return args;
}

sbp::Vector rescale_rows(sbp::Matrix& A, sbp::Vector& b) {
  const sbp::Vector norms = A.rowwise().norm();
  for (sbp::Index i = 0; i < A.rows(); ++i) {
    if (norms[i] > 0.0) {
      A.row(i) /= norms[i];
      b[i] /= norms[i];
    }
  }
  return norms;
}

struct SolveArgs {
  std::string matrix, rhs, truth, history;
  std::string method = "kaczmarz";
  double lambda = 1.0;
  CommonRule rule;
  std::string step = "exact";
  sbp::Index max_iters = 0;
  double mse_tol = 0.0;
  double residual_tol = 0.0;
  double flop_budget = 0.0;
  std::uint64_t seed = 0;
  sbp::Index stride = 1;
  sbp::Index block_size = 1;
};

int cmd_solve(const SolveArgs& a) {
  sbp::Matrix A = sbp::load_matrix_market(a.matrix);
  sbp::Vector b = sbp::load_vector_market(a.rhs);
  std::optional<sbp::Vector> truth;
  if (!a.truth.empty()) truth = sbp::load_vector_market(a.truth);
  const auto method = sbp::parse_method(a.method);
  const auto step = sbp::parse_step_mode(a.step);
  if (b.size() != A.rows()) throw sbp::Error(sbp::Errc::dimension_mismatch, "rhs length does not match matrix rows");
  if (step == sbp::StepMode::Inexact) rescale_rows(A, b);
  const auto f = method == sbp::Method::Kaczmarz ? sbp::GeneratingFunction::squared_norm()
                                                 : sbp::GeneratingFunction::elastic_net(a.lambda);
  std::optional<sbp::SketchSet> sketch;
  if (a.block_size > 1) sketch = sbp::SketchSet::contiguous_blocks(A, a.block_size);
  const auto problem = sbp::Problem::make(std::move(A), std::move(b), std::move(truth), f, std::move(sketch));

  sbp::SamplingRule rule;
  rule.kind = sbp::parse_rule(a.rule.rule);
  rule.theta = a.rule.theta;
  rule.beta = a.rule.beta;
  rule.block_distribution = sbp::parse_block_distribution(a.rule.p1);
  rule.rng_seed = a.seed;

  sbp::StoppingCriteria stop;
  if (a.max_iters > 0) stop.max_iters = a.max_iters;
  if (a.mse_tol > 0.0) stop.mse_tol = a.mse_tol;
  if (a.residual_tol > 0.0) stop.residual_tol = a.residual_tol;
  if (a.flop_budget > 0.0) stop.flop_budget = a.flop_budget;
  if (stop.empty()) stop = sbp::StoppingCriteria::defaults(problem);

  sbp::RunOptions opts;
  opts.step = step;
  opts.history_stride = a.stride;
  const auto result = sbp::run(problem, rule, stop, opts);
  if (!a.history.empty()) {
    std::ofstream out(a.history);
    if (!out) throw sbp::Error(sbp::Errc::io, "cannot write '" + a.history + "'");
    sbp::write_history_csv(out, result.history);
  }
  const auto& last = result.history.back();
  std::printf("stop_reason: %s\niterations: %lld\nmse: %.17g\nflops_modeled: %.17g\nflops_measured: %.17g\n",
              std::string(sbp::to_string(result.reason)).c_str(), static_cast<long long>(result.state.k), last.mse,
              result.state.flops_modeled, result.state.flops_measured);
  return kOk;
}

struct BenchArgs {
  std::string config;
  sbp::Index rows = 300, cols = 200, sparsity = 30;
  std::string matrix, rhs, truth;
  std::string method = "sparse";
  double lambda = 1.0;
  CommonRule rule;
  std::string step = "exact";
  sbp::Index trials = 100;
  std::uint64_t seed = 0;
  sbp::Index max_iters = 0;
  double mse_tol = 0.0;
  double flop_budget = 0.0;
  sbp::Index stride = 1;
  sbp::Index workers = 0;
  sbp::Index flop_points = 200;
  std::string out;
  bool svg = false, measured = false, fresh = false, suite = false;
};

sbp::ExperimentConfig to_config(const BenchArgs& a) {
  sbp::ExperimentConfig c;
  if (!a.matrix.empty()) {
    c.source = sbp::ExperimentConfig::Source::File;
    c.matrix_path = a.matrix;
    c.rhs_path = a.rhs;
    c.truth_path = a.truth;
  }
  c.rows = a.rows;
  c.cols = a.cols;
  c.sparsity = a.sparsity;
  c.method = sbp::parse_method(a.method);
  c.lambda = a.lambda;
  c.rule = sbp::parse_rule(a.rule.rule);
  c.theta = a.rule.theta;
  c.beta = a.rule.beta;
  c.p1 = sbp::parse_block_distribution(a.rule.p1);
  c.step = sbp::parse_step_mode(a.step);
  c.trials = a.trials;
  c.master_seed = a.seed;
  if (a.max_iters > 0) c.stop.max_iters = a.max_iters;
  if (a.mse_tol > 0.0) c.stop.mse_tol = a.mse_tol;
  if (a.flop_budget > 0.0) c.stop.flop_budget = a.flop_budget;
  c.history_stride = a.stride;
  c.fresh_data_per_trial = a.fresh;
  c.measured_axis = a.measured;
  c.flop_points = a.flop_points;
  c.workers = a.workers;
  c.output_prefix = a.out;
  c.svg = a.svg;
  return c;
}

int cmd_bench(const BenchArgs& a) {
  if (a.out.empty()) throw sbp::Error(sbp::Errc::configuration, "bench needs --out PREFIX");
  if (!a.suite) {
    const auto config = to_config(a);
    const auto result = sbp::run_experiment(config);
    sbp::write_experiment_outputs(config, result);
    std::printf("wrote %s_iter.csv %s_flops.csv %s_trials.csv\n", a.out.c_str(), a.out.c_str(), a.out.c_str());
    return kOk;
  }
  // Both orientations of m/n = 1.5 and m/n ~ 3.3, every rule except rownorm.
  const std::vector<std::pair<sbp::Index, sbp::Index>> shapes = {{300, 200}, {200, 300}, {1000, 300}, {300, 1000}};
  const std::vector<std::string> rules = {"uniform", "maxdist", "proportional", "capped", "skm"};
  for (const auto& [m, n] : shapes) {
    for (const auto& r : rules) {
      BenchArgs one = a;
      one.suite = false;
      one.matrix.clear();
      one.rows = m;
      one.cols = n;
      one.rule.rule = r;
      if (r == "skm") one.rule.beta = std::max<sbp::Index>(1, m / 2);
      one.out = a.out + "_" + std::to_string(m) + "x" + std::to_string(n) + "_" + r;
      cmd_bench(one);
    }
  }
  return kOk;
}

struct SpectralArgs {
  std::string matrix, truth, out;
  CommonRule rule;
  double lambda = 0.0;
  sbp::Index restarts = 8, iters = 500;
  std::uint64_t seed = 0;
  double cap = 1e5;
};

int cmd_spectral(const SpectralArgs& a) {
  const sbp::Matrix A = sbp::load_matrix_market(a.matrix);
  sbp::RateReportOptions o;
  o.method = a.lambda > 0.0 ? sbp::Method::SparseKaczmarz : sbp::Method::Kaczmarz;
  o.rule = sbp::parse_rule(a.rule.rule);
  o.theta = a.rule.theta;
  o.beta = a.rule.beta;
  o.p1 = sbp::parse_block_distribution(a.rule.p1);
  o.lambda = a.lambda;
  if (!a.truth.empty()) o.truth = sbp::load_vector_market(a.truth);
  o.restarts = a.restarts;
  o.iters = a.iters;
  o.seed = a.seed;
  o.enumeration_cap = a.cap;
  const auto sketch = sbp::SketchSet::rows(A);
  const auto report = sbp::make_rate_report(sketch, A, o);
  if (a.out.empty() || a.out == "-") {
    sbp::write_rate_report(std::cout, report);
  } else {
    std::ofstream out(a.out);
    if (!out) throw sbp::Error(sbp::Errc::io, "cannot write '" + a.out + "'");
    sbp::write_rate_report(out, report);
  }
  return kOk;
}

struct GenerateArgs {
  sbp::Index rows = 0, cols = 0, sparsity = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  const auto g = sbp::generate_problem(a.rows, a.cols, a.sparsity, a.seed);
  sbp::save_matrix_market(a.out + "_A.mtx", g.A);
  sbp::save_matrix_market(a.out + "_b.mtx", g.b);
  sbp::save_matrix_market(a.out + "_x.mtx", g.truth);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketched Bregman projection solver"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write a random consistent Gaussian system");
  g->add_option("--rows", gen.rows)->required();
  g->add_option("--cols", gen.cols)->required();
  g->add_option("--sparsity", gen.sparsity)->required();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "writes OUT_A.mtx, OUT_b.mtx, OUT_x.mtx")->required();

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "run one solve and write its history");
  s->add_option("--matrix", sol.matrix)->required();
  s->add_option("--rhs", sol.rhs)->required();
  s->add_option("--truth", sol.truth);
  s->add_option("--method", sol.method, "kaczmarz|sparse")->capture_default_str();
  s->add_option("--lambda", sol.lambda, "l1 weight for the sparse method")->capture_default_str();
  add_rule_options(s, sol.rule);
  s->add_option("--step", sol.step, "exact|inexact")->capture_default_str();
  s->add_option("--max-iters", sol.max_iters);
  s->add_option("--mse-tol", sol.mse_tol);
  s->add_option("--residual-tol", sol.residual_tol);
  s->add_option("--flop-budget", sol.flop_budget);
  s->add_option("--seed", sol.seed)->capture_default_str();
  s->add_option("--history", sol.history, "history CSV path");
  s->add_option("--stride", sol.stride, "history stride")->capture_default_str();
  s->add_option("--block-size", sol.block_size, "rows per contiguous block sketch")->capture_default_str();

  BenchArgs ben;
  auto* b = app.add_subcommand("bench", "multi-trial experiment with quantile output");
  b->add_option("--config", ben.config, "key=value file; command-line flags override it");
  b->add_option("--rows", ben.rows)->capture_default_str();
  b->add_option("--cols", ben.cols)->capture_default_str();
  b->add_option("--sparsity", ben.sparsity)->capture_default_str();
  b->add_option("--matrix", ben.matrix, "use a MatrixMarket system instead of a Gaussian draw");
  b->add_option("--rhs", ben.rhs);
  b->add_option("--truth", ben.truth);
  b->add_option("--method", ben.method, "kaczmarz|sparse")->capture_default_str();
  b->add_option("--lambda", ben.lambda)->capture_default_str();
  add_rule_options(b, ben.rule);
  b->add_option("--step", ben.step, "exact|inexact")->capture_default_str();
  b->add_option("--trials", ben.trials)->capture_default_str();
  b->add_option("--seed", ben.seed, "master seed")->capture_default_str();
  b->add_option("--max-iters", ben.max_iters);
  b->add_option("--mse-tol", ben.mse_tol);
  b->add_option("--flop-budget", ben.flop_budget);
  b->add_option("--stride", ben.stride)->capture_default_str();
  b->add_option("--workers", ben.workers, "0 = hardware concurrency")->capture_default_str();
  b->add_option("--flop-points", ben.flop_points)->capture_default_str();
  b->add_option("--out", ben.out, "output prefix");
  b->add_flag("--svg", ben.svg, "also write SVG band plots");
  b->add_flag("--measured", ben.measured, "use measured flops for the flop axis");
  b->add_flag("--fresh-data-per-trial", ben.fresh, "draw a new system for every trial");
  b->add_flag("--suite", ben.suite, "run the default grid of shapes and rules");

  SpectralArgs spe;
  auto* p = app.add_subcommand("spectral", "spectral constants and rate bounds");
  p->add_option("--matrix", spe.matrix)->required();
  p->add_option("--truth", spe.truth);
  add_rule_options(p, spe.rule);
  p->add_option("--lambda", spe.lambda, "> 0 selects the sparse bounds")->capture_default_str();
  p->add_option("--restarts", spe.restarts)->capture_default_str();
  p->add_option("--iters", spe.iters)->capture_default_str();
  p->add_option("--seed", spe.seed)->capture_default_str();
  p->add_option("--enumeration-cap", spe.cap)->capture_default_str();
  p->add_option("--out", spe.out, "report path, '-' for stdout");

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  } catch (const sbp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_solve(sol);
    if (*b) return cmd_bench(ben);
    if (*p) return cmd_spectral(spe);
  } catch (const sbp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_numerical() ? kNumerical : kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kOk;
}
