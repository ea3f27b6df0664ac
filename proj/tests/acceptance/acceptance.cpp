// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria (0 when all pass).

#include "sbp/bregman.hpp"
#include "sbp/experiment.hpp"
#include "sbp/solver.hpp"
#include "sbp/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace sbp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int g_failed = 0;

void report(int id, bool ok, double seconds, double limit, const std::string& detail) {
  const bool in_time = limit <= 0.0 || seconds <= limit;
  const bool pass = ok && in_time;
  if (!pass) ++g_failed;
  std::printf("%s criterion %d: %s (%.1f s%s)\n", pass ? "PASS" : "FAIL", id, detail.c_str(), seconds,
              in_time ? "" : ", over time limit");
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const RuleKind kRules[] = {RuleKind::Uniform,          RuleKind::RowNormWeighted, RuleKind::MaxDistance,
                           RuleKind::ProportionalToLoss, RuleKind::Capped,        RuleKind::SketchMotzkin};

Matrix gaussian(Index m, Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix A(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) A(i, j) = nd(rng);
  return A;
}

// Criteria 1 and 2 share trajectories.
void zero_loss_and_descent() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<Index> dim(20, 60);
  double worst_loss = 0.0;   // max of g / (1 + |b|^2)
  double worst_descent = -1e300;
  long steps = 0;
  for (int prob = 0; prob < 20; ++prob) {
    const Index m = dim(rng), n = dim(rng);
    const auto gp = generate_problem(m, n, std::max<Index>(1, n / 4), derive_seed(101, static_cast<std::uint64_t>(prob)));
    const double scale = 1.0 + gp.b.squaredNorm();
    for (auto method : {Method::Kaczmarz, Method::SparseKaczmarz}) {
      const auto f = method == Method::Kaczmarz ? GeneratingFunction::squared_norm()
                                                : GeneratingFunction::elastic_net(0.5 + 0.05 * prob);
      const Problem pr = Problem::make(gp.A, gp.b, gp.truth, f);
      for (auto kind : kRules) {
        SamplingRule rule;
        rule.kind = kind;
        rule.beta = std::max<Index>(1, m / 2);
        rule.rng_seed = derive_seed(202, static_cast<std::uint64_t>(prob));
        StoppingCriteria stop;
        stop.max_iters = 500;
        PrimalDualPair start{Vector::Zero(n), Vector::Zero(n)};
        double prev = bregman_distance(f, start, gp.truth);
        RunOptions opt;
        opt.observer = [&](Index i, double loss, const SolveState& st) {
          worst_loss = std::max(worst_loss, sketched_loss(pr.sketch, i, gp.A, st.pair.x, gp.b) / scale);
          const double d = bregman_distance(f, st.pair, gp.truth);
          worst_descent = std::max(worst_descent, d - prev + 0.5 * loss);
          prev = d;
          ++steps;
        };
        run(pr, rule, stop, opt);
      }
    }
  }
  const double t = seconds_since(t0);
  report(1, worst_loss <= 1e-10, t, 30.0,
         "max g_i(x+)/(1+|b|^2) = " + fmt("%.3g", worst_loss) + " over " + std::to_string(steps) + " steps, tol 1e-10");
  report(2, worst_descent <= 1e-9, t, 30.0,
         "max D(k+1) - D(k) + g/2 = " + fmt("%.3g", worst_descent) + ", tol 1e-9");
}

void spectral_ordering() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  double worst = -1e300;  // largest violation of any chain inequality
  bool positive = true;
  for (int inst = 0; inst < 100; ++inst) {
    const bool small = inst < 50;
    const Index n = small ? 1 + inst % 3 : 4 + inst % 5;
    const Index m = std::uniform_int_distribution<Index>(2, 12)(rng);
    const Matrix A = gaussian(m, n, rng);
    const auto sk = SketchSet::rows(A);
    const double su = sigma_p_squared(sk, A, uniform_probability(m));
    const double sf = sigma_p_squared(sk, A, frobenius_probability(sk));
    positive = positive && su > 0.0 && sf > 0.0;
    const auto br = sigma_inf_squared_bracket(sk, A, 8, 500, static_cast<std::uint64_t>(inst));
    double hi = br.upper;
    if (small) hi = std::min(hi, sigma_inf_squared_grid(sk, A));
    worst = std::max({worst, su - hi, sf - hi, br.lower - hi, hi - 1.0});
  }
  report(3, positive && worst <= 1e-9, seconds_since(t0), 60.0,
         "max chain violation " + fmt("%.3g", worst) + " on 100 instances, tol 1e-9");
}

void rate_bound_validity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(404);
  double worst = -1e300;  // observed - (bound + 3 se)
  for (int prob = 0; prob < 10; ++prob) {
    const Matrix A = gaussian(50, 20, rng);
    const Vector xbar = gaussian(20, 1, rng).col(0);
    const Vector b = A * xbar;
    const Problem pr = Problem::make(A, b, xbar, GeneratingFunction::squared_norm());
    RateParams params;
    const double bound = rate_bound(Method::Kaczmarz, RuleKind::RowNormWeighted, A, params);
    for (int s = 0; s < 5; ++s) {
      const Vector x0 = gaussian(20, 1, rng).col(0) * 3.0;
      const double e0 = 0.5 * (x0 - xbar).squaredNorm();
      SamplingRule rule;
      rule.kind = RuleKind::RowNormWeighted;
      rule.rng_seed = derive_seed(404, static_cast<std::uint64_t>(prob * 5 + s));
      Sampler sampler(rule, pr.sketch);
      double sum = 0, sum2 = 0;
      const int trials = 2000;
      for (int t = 0; t < trials; ++t) {
        SolveState st = SolveState::initial(pr, false);
        st.pair = PrimalDualPair{x0, x0};
        const auto pick = sampler.next([](Index) { return 1.0; });
        sbp_step(st, pr, pick->chosen, StepMode::Exact);
        const double ratio = 0.5 * (st.pair.x - xbar).squaredNorm() / e0;
        sum += ratio;
        sum2 += ratio * ratio;
      }
      const double mean = sum / trials;
      const double se = std::sqrt(std::max(0.0, sum2 / trials - mean * mean) / (trials - 1));
      worst = std::max(worst, mean - (bound + 3.0 * se));
    }
  }
  report(4, worst <= 0.0, seconds_since(t0), 120.0,
         "max (observed contraction - bound - 3 se) = " + fmt("%.3g", worst));
}

double oracle_minimizer(const std::function<double(double)>& phi) {
  // Convexity: once phi(-T) and phi(T) both exceed phi(0) the minimiser lies in [-T, T].
  const double p0 = phi(0.0);
  double T = 1.0;
  while ((phi(T) <= p0 || phi(-T) <= p0) && T < 1e12) T *= 2.0;
  const int cells = 4000;
  const double h = 2.0 * T / cells;
  double best_t = -T, best = phi(-T);
  for (int k = 1; k <= cells; ++k) {
    const double t = -T + h * k;
    const double v = phi(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  double l = best_t - h, r = best_t + h;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 300 && r - l > 1e-15 * (1.0 + std::abs(l)); ++it) {
    const double a = r - g * (r - l), c = l + g * (r - l);
    if (phi(a) < phi(c)) {
      r = c;
    } else {
      l = a;
    }
  }
  return 0.5 * (l + r);
}

void linesearch_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(505);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ul(0.0, 2.0);
  std::uniform_int_distribution<Index> dim(1, 12);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Index n = dim(rng);
    Vector xs(n), a(n);
    for (Index j = 0; j < n; ++j) {
      xs[j] = 2.0 * nd(rng);
      a[j] = (k % 4 == 0 && j % 2 == 1) ? 0.0 : nd(rng);
    }
    if (a.squaredNorm() == 0.0) a[0] = 1.0;
    const double beta = 2.0 * nd(rng);
    const double lam = k % 10 == 0 ? 0.0 : ul(rng);
    const auto f = GeneratingFunction::elastic_net(lam);
    auto phi = [&](double t) { return dual_objective(f, xs, a, beta, t); };
    const double t = exact_dual_linesearch(f, xs, a, beta);
    const double o = oracle_minimizer(phi);
    worst = std::max(worst, std::abs(phi(t) - phi(o)));
  }
  report(5, worst <= 1e-8, seconds_since(t0), 10.0,
         "max |phi(t) - phi(t_oracle)| = " + fmt("%.3g", worst) + " over 1000 tuples, tol 1e-8");
}

void lambda_zero_reduction() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool same_indices = true;
  for (int run_id = 0; run_id < 10; ++run_id) {
    const auto gp = generate_problem(60, 40, 10, derive_seed(606, static_cast<std::uint64_t>(run_id)));
    SamplingRule rule;
    rule.kind = kRules[run_id % 6];
    rule.beta = 30;
    rule.rng_seed = derive_seed(607, static_cast<std::uint64_t>(run_id));
    StoppingCriteria stop;
    stop.max_iters = 1000;
    std::vector<Vector> xs[2];
    std::vector<Index> picks[2];
    int which = 0;
    RunOptions opt;
    opt.observer = [&](Index i, double, const SolveState& st) {
      xs[which].push_back(st.pair.x);
      picks[which].push_back(i);
    };
    run(Problem::make(gp.A, gp.b, gp.truth, GeneratingFunction::squared_norm()), rule, stop, opt);
    which = 1;
    run(Problem::make(gp.A, gp.b, gp.truth, GeneratingFunction::elastic_net(0.0)), rule, stop, opt);
    same_indices = same_indices && picks[0] == picks[1] && xs[0].size() == xs[1].size();
    for (std::size_t k = 0; k < std::min(xs[0].size(), xs[1].size()); ++k)
      worst = std::max(worst, (xs[0][k] - xs[1][k]).lpNorm<Eigen::Infinity>());
  }
  report(6, same_indices && worst == 0.0, seconds_since(t0), 10.0,
         "max |x_kaczmarz - x_sparse(lambda=0)| = " + fmt("%.3g", worst) + " over 10 x 1000 iterations");
}

ExperimentConfig recovery_config(RuleKind rule) {
  ExperimentConfig c;
  c.rows = 200;
  c.cols = 300;
  c.sparsity = 30;
  c.method = Method::SparseKaczmarz;
  c.lambda = 1.0;
  c.rule = rule;
  c.beta = 100;
  c.theta = 0.5;
  c.trials = 20;
  c.master_seed = 1;
  c.history_stride = 1;
  c.workers = 0;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

void sparse_recovery() {
  const auto t0 = Clock::now();
  auto c = recovery_config(RuleKind::SketchMotzkin);
  c.stop.max_iters = 20000;
  c.stop.mse_tol = 1e-6;
  const auto r = run_experiment(c);
  double best = 1e300;
  double at = -1;
  for (std::size_t j = 0; j < r.by_iteration.size(); ++j)
    if (r.by_iteration.grid[j] <= 20000 && r.by_iteration.median[j] < best) {
      best = r.by_iteration.median[j];
      at = r.by_iteration.grid[j];
    }
  report(7, best <= 1e-6, seconds_since(t0), 180.0,
         "median MSE " + fmt("%.3g", best) + " at k = " + fmt("%.0f", at) + " (need <= 1e-6 within 2e4)");
}

void rule_ordering() {
  const auto t0 = Clock::now();
  const RuleKind order[] = {RuleKind::MaxDistance, RuleKind::SketchMotzkin, RuleKind::Capped,
                            RuleKind::ProportionalToLoss, RuleKind::Uniform};
  std::map<RuleKind, double> iters, flops;
  bool all_reached = true;
  for (auto kind : order) {
    auto c = recovery_config(kind);
    c.stop.max_iters = 200000;
    c.stop.mse_tol = 1e-4;
    c.history_stride = 1000000;
    const auto r = run_experiment(c);
    std::vector<double> k, fl;
    for (const auto& t : r.trials) {
      all_reached = all_reached && t.reason == StopReason::MseTol;
      k.push_back(static_cast<double>(t.history.back().k));
      fl.push_back(t.history.back().flops_modeled);
    }
    iters[kind] = median(k);
    flops[kind] = median(fl);
  }
  bool ordered = true;
  std::string detail = "median iterations";
  for (std::size_t j = 0; j < 5; ++j) {
    detail += std::string(j ? " <= " : " ") + std::string(to_string(order[j])) + " " + fmt("%.0f", iters[order[j]]);
    if (j > 0) ordered = ordered && iters[order[j - 1]] <= 1.1 * iters[order[j]];
  }
  bool skm_cheapest = true;
  for (auto kind : {RuleKind::MaxDistance, RuleKind::ProportionalToLoss, RuleKind::Capped})
    skm_cheapest = skm_cheapest && flops[RuleKind::SketchMotzkin] < flops[kind];
  detail += "; median modeled flops skm " + fmt("%.4g", flops[RuleKind::SketchMotzkin]) + ", maxdist " +
            fmt("%.4g", flops[RuleKind::MaxDistance]) + ", capped " + fmt("%.4g", flops[RuleKind::Capped]) +
            ", proportional " + fmt("%.4g", flops[RuleKind::ProportionalToLoss]);
  report(8, all_reached && ordered && skm_cheapest, seconds_since(t0), 300.0, detail);
}

void flop_model() {
  bool ok = true;
  for (auto [m, n, beta] : {std::tuple<Index, Index, Index>{100, 50, 50}, {1000, 100, 500}}) {
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    const double nl = dn * std::log(dn);
    const std::map<RuleKind, double> table{
        {RuleKind::Uniform, 21 * dn + nl},
        {RuleKind::RowNormWeighted, 21 * dn + nl},
        {RuleKind::MaxDistance, dm + 17 * dn + nl},
        {RuleKind::ProportionalToLoss, 2 * dm + 17 * dn + nl},
        {RuleKind::Capped, 5 * dm + 17 * dn + nl},
        {RuleKind::SketchMotzkin, static_cast<double>(beta) + 17 * dn + nl},
    };
    for (const auto& [kind, want] : table)
      ok = ok && modeled_flops_per_iter(kind, Method::SparseKaczmarz, m, n, beta) == want;
  }
  report(9, ok, 0.0, 0.0, "six formulas at (100,50,50) and (1000,100,500), zero tolerance");
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void determinism(const std::string& cli) {
  const auto t0 = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "sbp_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "bench.cfg";
  std::ofstream(cfg) << "rows=60\ncols=80\nsparsity=8\nmethod=sparse\nlambda=1\nrule=skm\nbeta=30\n"
                        "trials=8\nseed=12345\nmax-iters=3000\nmse-tol=1e-8\n";
  bool ok = true;
  for (const char* run_name : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" bench --config \"" + cfg.string() + "\" --out \"" +
                            (dir / run_name).string() + "\" > /dev/null";
    ok = ok && std::system(cmd.c_str()) == 0;
  }
  std::string detail = "bench re-run outputs";
  for (const char* suffix : {"_iter.csv", "_flops.csv", "_trials.csv"}) {
    const std::string a = slurp(dir / (std::string("a") + suffix));
    const std::string b = slurp(dir / (std::string("b") + suffix));
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += std::string(" ") + suffix + (same ? " identical" : " differ");
  }
  report(10, ok, seconds_since(t0), 0.0, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path to sbp cli>\n", argv[0]);
    return 2;
  }
  zero_loss_and_descent();
  spectral_ordering();
  rate_bound_validity();
  linesearch_oracle();
  lambda_zero_reduction();
  sparse_recovery();
  rule_ordering();
  flop_model();
  determinism(argv[1]);
  std::printf("%d criteria failed\n", g_failed);
  return g_failed;
}
