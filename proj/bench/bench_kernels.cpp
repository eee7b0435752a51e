#include "kstep/envs.hpp"
#include "kstep/explain.hpp"
#include "kstep/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace kstep;

namespace {

kernels::Exec exec_of(const benchmark::State& state)
{
    return state.range(0) ? kernels::Exec::Parallel : kernels::Exec::Serial;
}

// Exact forward passes of the GridWorld fixture agent over every desk start.
void BM_find_first_forward(benchmark::State& state)
{
    auto agent = envs::make_fixture_agent(envs::AgentKind::GridWorld, 1);
    auto starts = envs::fixture_starts(envs::AgentKind::GridWorld);
    for (auto _ : state) {
        std::size_t hit = kernels::find_first(exec_of(state), starts.size(), [&](std::size_t i) {
            return classify(*agent.net, starts[i]) == 99;
        });
        benchmark::DoNotOptimize(hit);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(starts.size()));
}

void BM_for_each_forward(benchmark::State& state)
{
    auto agent = envs::make_fixture_agent(envs::AgentKind::GridWorld, 1);
    auto starts = envs::fixture_starts(envs::AgentKind::GridWorld);
    std::vector<Action> out(starts.size());
    for (auto _ : state) {
        kernels::for_each(exec_of(state), starts.size(),
                          [&](std::size_t i) { out[i] = classify(*agent.net, starts[i]); });
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(starts.size()));
}

struct GridCase {
    ReactiveSystem sys;
    std::shared_ptr<const Network> net;
    Execution exec;
};

GridCase grid_case(std::size_t k)
{
    GridCase c{envs::fixture_system(envs::AgentKind::GridWorld), nullptr, {}};
    auto step = envs::step_function(envs::AgentKind::GridWorld);
    for (std::uint64_t seed = 1;; ++seed) {
        auto agent = envs::make_fixture_agent(envs::AgentKind::GridWorld, seed);
        for (const auto& s : envs::fixture_starts(envs::AgentKind::GridWorld)) {
            try {
                c.exec = simulate(c.sys, *agent.net, step, s, k);
                require_explainable(c.sys, *agent.net, c.exec, RivalMode::Weak);
                c.net = agent.net;
                return c;
            } catch (const std::exception&) {
            }
        }
    }
}

// Finite-domain search on the unpinned two-step explanation query.
void BM_solve_finite(benchmark::State& state)
{
    GridCase c = grid_case(2);
    BuiltQuery q = explanation_query_multi(c.sys, c.net, c.exec, StepMask::empty(2));
    SolverOptions opts;
    opts.exec = exec_of(state);
    opts.enumeration_threshold = state.range(1) ? 1 : 4096;
    for (auto _ : state) {
        auto r = solve(q.query, opts);
        benchmark::DoNotOptimize(r.verdict.status);
    }
}

void BM_method4_grid(benchmark::State& state)
{
    GridCase c = grid_case(3);
    ExplainOptions opts;
    opts.exec = exec_of(state);
    opts.solver.exec = exec_of(state);
    for (auto _ : state) {
        auto r = method4(c.sys, c.net, c.exec, opts);
        benchmark::DoNotOptimize(r.mask);
    }
}

void BM_method3_minimal_grid(benchmark::State& state)
{
    GridCase c = grid_case(3);
    ExplainOptions opts;
    opts.exec = exec_of(state);
    opts.solver.exec = exec_of(state);
    for (auto _ : state) {
        auto r = method3_minimal(c.sys, c.net, c.exec, opts);
        benchmark::DoNotOptimize(r.mask);
    }
}

}  // namespace

BENCHMARK(BM_find_first_forward)->ArgName("parallel")->Arg(0)->Arg(1);
BENCHMARK(BM_for_each_forward)->ArgName("parallel")->Arg(0)->Arg(1);
BENCHMARK(BM_solve_finite)
    ->ArgNames({"parallel", "backtrack"})
    ->Args({0, 0})
    ->Args({1, 0})
    ->Args({0, 1})
    ->Args({1, 1})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_method4_grid)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_method3_minimal_grid)
    ->ArgName("parallel")
    ->Arg(0)
    ->Arg(1)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
