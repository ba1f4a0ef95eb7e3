#include <benchmark/benchmark.h>

#include <genvert/lp.hpp>
#include <genvert/random.hpp>

using namespace genvert;

namespace {

// Feasible by construction: rows are tight or slack at a random interior point.
lp::LpProblem random_lp(std::size_t vars, std::size_t rows, std::uint64_t seed)
{
    Rng rng(seed);
    lp::LpProblem p(vars, lp::Sense::Maximize);
    Vector c(vars), x0(vars);
    for (std::size_t j = 0; j < vars; ++j) {
        c[j] = rng.normal();
        x0[j] = rng.normal();
        p.set_bounds(j, -10.0, 10.0);
    }
    p.set_objective(c);
    for (std::size_t r = 0; r < rows; ++r) {
        Vector a(vars);
        double lhs = 0.0;
        for (std::size_t j = 0; j < vars; ++j) {
            a[j] = rng.normal();
            lhs += a[j] * x0[j];
        }
        p.add_constraint(a, lp::Relation::LessEqual, lhs + rng.uniform01());
    }
    return p;
}

void BM_SolvePrimal(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    auto p = random_lp(n, 3 * n, 1);
    lp::SolverOptions o;
    o.formulation = lp::Formulation::Primal;
    for (auto _ : state) benchmark::DoNotOptimize(lp::solve(p, o));
}
BENCHMARK(BM_SolvePrimal)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SolveDual(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    auto p = random_lp(n, 3 * n, 1);
    lp::SolverOptions o;
    o.formulation = lp::Formulation::Dual;
    for (auto _ : state) benchmark::DoNotOptimize(lp::solve(p, o));
}
BENCHMARK(BM_SolveDual)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace
