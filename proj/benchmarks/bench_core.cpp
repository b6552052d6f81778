#include <cmath>
#include <numbers>

#include <benchmark/benchmark.h>

#include "cycledeg/adjoint.hpp"
#include "cycledeg/cycle.hpp"
#include "cycledeg/degree.hpp"
#include "cycledeg/malkin.hpp"
#include "cycledeg/ode.hpp"

using namespace cycledeg;

namespace {

constexpr double kPi = std::numbers::pi;

struct Circle {
    SystemSpec spec;
    LimitCycle cycle;
    AdjointCycle adj;
};

const Circle& circle() {
    static const Circle c = [] {
        SystemSpec spec = SystemSpec::from_strings(2, 2 * kPi, {"-x2 + x1*(1 - x1^2 - x2^2)", "x1 + x2*(1 - x1^2 - x2^2)"},
                                                   {"cos(t)", "sin(t)"});
        LimitCycle cyc = find_cycle(spec, Eigen::Vector2d(1.1, 0.0), Section{2, 0.0, 1});
        AdjointCycle adj = periodic_adjoint(spec, cyc);
        return Circle{spec, cyc, adj};
    }();
    return c;
}

void BM_FlowEndpoint(benchmark::State& state) {
    const Circle& c = circle();
    const double tol = std::pow(10.0, -static_cast<double>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(flow_endpoint(c.spec, Eigen::Vector2d(1.2, 0.1), 2 * kPi, tol));
}
BENCHMARK(BM_FlowEndpoint)->Arg(8)->Arg(10)->Arg(12);

void BM_Variational(benchmark::State& state) {
    const Circle& c = circle();
    for (auto _ : state) benchmark::DoNotOptimize(flow_with_variational(c.spec, c.cycle.xi0, 2 * kPi, 1e-12));
}
BENCHMARK(BM_Variational);

void BM_FindCycle(benchmark::State& state) {
    const Circle& c = circle();
    for (auto _ : state) benchmark::DoNotOptimize(find_cycle(c.spec, Eigen::Vector2d(1.1, 0.0), Section{2, 0.0, 1}));
}
BENCHMARK(BM_FindCycle)->Unit(benchmark::kMillisecond);

void BM_EvalF(benchmark::State& state) {
    const Circle& c = circle();
    const int panels = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(eval_f(c.spec, c.cycle, c.adj, 0.7, panels));
}
BENCHMARK(BM_EvalF)->Arg(16)->Arg(64)->Arg(256);

void BM_EvalFAlt(benchmark::State& state) {
    const Circle& c = circle();
    for (auto _ : state) benchmark::DoNotOptimize(eval_f_alt(c.spec, c.cycle, c.adj, 0.7));
}
BENCHMARK(BM_EvalFAlt)->Unit(benchmark::kMillisecond);

void BM_SampleF(benchmark::State& state) {
    const Circle& c = circle();
    for (auto _ : state)
        benchmark::DoNotOptimize(sample_f(c.spec, c.cycle, c.adj, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_SampleF)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_PoincareDegree(benchmark::State& state) {
    const Circle& c = circle();
    Region box = Region::box(Eigen::Vector2d(-2, -2), Eigen::Vector2d(0.5, 2));
    for (auto _ : state) benchmark::DoNotOptimize(poincare_degree(c.spec, box, 1e-3));
}
BENCHMARK(BM_PoincareDegree)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
