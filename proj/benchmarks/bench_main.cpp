#include <benchmark/benchmark.h>

#include "maxreg/model_zoo.hpp"
#include "maxreg/pdo.hpp"
#include "maxreg/semigroup.hpp"
#include "maxreg/volterra.hpp"

using namespace maxreg;

static void BM_ExpmAction(benchmark::State& state) {
    const auto family = build_random_accretive(static_cast<int>(state.range(0)), 1);
    const OperatorH a = assemble_operator(family, 0.0);
    const Vec x = Vec::Ones(family.dim());
    for (auto _ : state) benchmark::DoNotOptimize(expm_action(a, 0.3, x));
}
BENCHMARK(BM_ExpmAction)->Arg(8)->Arg(32)->Arg(128);

static void BM_ApplyQ(benchmark::State& state) {
    const auto family = shift_family(build_rotating_family(4, 0.75, 0.5), 10.0);
    const auto grid = TimeGrid::uniform(1.0, static_cast<int>(state.range(0)));
    const VolterraSystem system(family, grid);
    const auto g = GridFunction::sample_midpoints(grid, 4, [](double t) { return Vec(Vec::Constant(4, std::sin(t))); });
    system.apply_Q(g);  // weight cache
    for (auto _ : state) benchmark::DoNotOptimize(system.apply_Q(g));
}
BENCHMARK(BM_ApplyQ)->Arg(64)->Arg(256)->Arg(1024);

static void BM_ApplyT(benchmark::State& state) {
    const FieldGrid grid{1, 8.0, static_cast<int>(state.range(0))};
    const auto symbol = mr_symbol(shift_family(build_rotating_family(4, 0.75, 0.5), 1.0));
    const auto f = SampledField::sample(grid, 4, [](const Point& x) { return Vec(Vec::Constant(4, std::exp(-x.squaredNorm()))); });
    for (auto _ : state) benchmark::DoNotOptimize(apply_T(symbol, f));
}
BENCHMARK(BM_ApplyT)->Arg(8)->Arg(10);
BENCHMARK_MAIN();
