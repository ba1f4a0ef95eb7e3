#include <benchmark/benchmark.h>

#include <genvert/baseline.hpp>
#include <genvert/invert.hpp>
#include <genvert/model.hpp>
#include <genvert/random.hpp>

using namespace genvert;

namespace {

struct Instance {
    GeneratorNetwork net;
    Vector x;
};

Instance make(std::size_t k, WeightStdRule rule)
{
    std::vector<std::size_t> dims{k, 100, 500};
    auto net = random_gaussian_net(dims, rule, 3);
    Rng rng(4);
    Vector z(k);
    for (double& v : z) v = rng.normal();
    Vector x = forward(net, z);
    return {std::move(net), std::move(x)};
}

void BM_Forward(benchmark::State& state)
{
    auto inst = make(20, WeightStdRule::Unit);
    Vector z(20, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(forward(inst.net, z));
}
BENCHMARK(BM_Forward);

void BM_InvertRealizable(benchmark::State& state)
{
    auto inst = make(20, WeightStdRule::Unit);
    for (auto _ : state) benchmark::DoNotOptimize(invert_realizable(inst.net, inst.x));
}
BENCHMARK(BM_InvertRealizable)->Unit(benchmark::kMillisecond);

void BM_InvertLp(benchmark::State& state)
{
    auto inst = make(20, WeightStdRule::Unit);
    const auto method = static_cast<InversionMethod>(state.range(0));
    LpInvertConfig cfg;
    cfg.epsilon_init = 1e-6;
    for (auto _ : state) benchmark::DoNotOptimize(invert_network(inst.net, inst.x, method, cfg));
    state.SetLabel(std::string(to_string(method)));
}
BENCHMARK(BM_InvertLp)
    ->Arg(static_cast<int>(InversionMethod::Linf))
    ->Arg(static_cast<int>(InversionMethod::L1))
    ->Arg(static_cast<int>(InversionMethod::Relaxed))
    ->Unit(benchmark::kMillisecond);

void BM_GradientDescent(benchmark::State& state)
{
    auto inst = make(20, WeightStdRule::InvSqrtFanout);
    GdConfig cfg;
    cfg.max_iters = 1000;
    for (auto _ : state) benchmark::DoNotOptimize(gd_invert(inst.net, inst.x, ForwardOperator::identity(500), cfg));
}
BENCHMARK(BM_GradientDescent)->Unit(benchmark::kMillisecond);

}  // namespace
