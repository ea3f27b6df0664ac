#include "sbp/bregman.hpp"
#include "sbp/experiment.hpp"
#include "sbp/sampling.hpp"
#include "sbp/solver.hpp"

#include <benchmark/benchmark.h>

using namespace sbp;

namespace {

void BM_BreakpointLinesearch(benchmark::State& state) {
  const Index n = state.range(0);
  const auto gp = generate_problem(2, n, n, 1);
  const Vector xs = gp.A.row(0).transpose() * 2.0;
  const Vector a = gp.A.row(1).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(breakpoint_linesearch(xs, a, 0.7, 1.0));
  state.SetComplexityN(n);
}
BENCHMARK(BM_BreakpointLinesearch)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oNLogN);

void BM_Step(benchmark::State& state) {
  const bool sparse = state.range(0) != 0;
  const auto gp = generate_problem(200, 300, 30, 2);
  const auto f = sparse ? GeneratingFunction::elastic_net(1.0) : GeneratingFunction::squared_norm();
  const Problem pr = Problem::make(gp.A, gp.b, gp.truth, f);
  SolveState st = SolveState::initial(pr, true);
  Index i = 0;
  for (auto _ : state) {
    sbp_step(st, pr, i, StepMode::Exact);
    i = (i + 1) % 200;
  }
}
BENCHMARK(BM_Step)->Arg(0)->Arg(1);

void BM_SamplerNext(benchmark::State& state) {
  const auto kind = static_cast<RuleKind>(state.range(0));
  const auto gp = generate_problem(1000, 50, 10, 3);
  const auto sk = SketchSet::rows(gp.A);
  const Vector g = (gp.A * Vector::Ones(50) - gp.b).cwiseAbs2();
  SamplingRule rule;
  rule.kind = kind;
  rule.beta = 100;
  Sampler sampler(rule, sk);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.next([&](Index i) { return g[i]; }));
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_SamplerNext)->DenseRange(0, 5);

void BM_Solve(benchmark::State& state) {
  const auto gp = generate_problem(200, 300, 30, 4);
  const Problem pr = Problem::make(gp.A, gp.b, gp.truth, GeneratingFunction::elastic_net(1.0));
  SamplingRule rule;
  rule.kind = static_cast<RuleKind>(state.range(0));
  rule.beta = 100;
  StoppingCriteria stop;
  stop.max_iters = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(run(pr, rule, stop).state.k);
  state.SetLabel(std::string(to_string(rule.kind)));
}
BENCHMARK(BM_Solve)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
