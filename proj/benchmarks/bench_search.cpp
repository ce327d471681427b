#include <benchmark/benchmark.h>

#include "mixpath/cost.hpp"
#include "mixpath/nsga2.hpp"
#include "mixpath/ranking.hpp"
#include "mixpath/hash.hpp"
#include "mixpath/rng.hpp"

using namespace mixpath;

namespace {

void kendall(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(5);
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
        a.push_back(rng.normal());
        b.push_back(0.5 * a.back() + rng.normal());
    }
    for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(a, b));
}
BENCHMARK(kendall)->Arg(70)->Arg(200)->Arg(2000);

std::vector<Individual> random_pop(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Individual> pop(n);
    for (Individual& ind : pop) {
        ind.accuracy = rng.uniform();
        ind.flops = 1000 + rng.uniform_int(100000);
    }
    return pop;
}

void nds(benchmark::State& state) {
    auto pop = random_pop(static_cast<int>(state.range(0)), 7);
    for (auto _ : state) benchmark::DoNotOptimize(non_dominated_sort(pop));
}
BENCHMARK(nds)->Arg(20)->Arg(128)->Arg(512);

void crowding(benchmark::State& state) {
    auto pop = random_pop(128, 7);
    std::vector<int> front(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) front[i] = static_cast<int>(i);
    for (auto _ : state) {
        crowding_distance(pop, front, 1.0, 1.0);
        benchmark::DoNotOptimize(pop);
    }
}
BENCHMARK(crowding);

void hypervolume(benchmark::State& state) {
    const auto pop = random_pop(static_cast<int>(state.range(0)), 9);
    for (auto _ : state) benchmark::DoNotOptimize(hypervolume2d(pop, 0.0, 200000));
}
BENCHMARK(hypervolume)->Arg(20)->Arg(500);

void nsga2_table(benchmark::State& state) {
    const SearchSpaceSpec spec = make_space(4, {3, 5, 7}, 2);
    // synthetic oracle: deterministic pseudo-accuracy per mask
    BenchTable table;
    for (const ArchMask& mask : enumerate_space(spec)) {
        BenchRecord row;
        row.mask = mask;
        row.accuracy =
            static_cast<double>(fnv1a64(mask_to_string(mask)) % 10000) / 10000.0;
        row.flops = arch_cost(spec, mask).flops;
        table.rows.push_back(row);
    }
    SearchConfig cfg;
    cfg.generations = 8;
    cfg.population = 20;
    cfg.eval_cap = 100000;
    const Evaluator evaluate = table_evaluator(table);
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_nsga2(spec, cfg, evaluate, Rng(seed++)));
}
BENCHMARK(nsga2_table);

void arch_cost_eval(benchmark::State& state) {
    const SearchSpaceSpec spec = make_space(4, {3, 5, 7}, 2);
    Rng rng(11);
    const ArchMask mask = sample_mask(spec, 0.5, rng);
    for (auto _ : state) benchmark::DoNotOptimize(arch_cost(spec, mask));
}
BENCHMARK(arch_cost_eval);

void space_enumeration(benchmark::State& state) {
    const SearchSpaceSpec spec = make_space(4, {3, 5, 7}, 2);
    for (auto _ : state) benchmark::DoNotOptimize(enumerate_space(spec));
}
BENCHMARK(space_enumeration);

} // namespace

BENCHMARK_MAIN();
