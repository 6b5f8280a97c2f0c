#include "frailty/average_rank.hpp"
#include "frailty/linext_sampler.hpp"
#include "frailty/poset.hpp"
#include "frailty/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

// Cohorts shaped like real marker data: a handful of ordinal columns, many
// duplicated profiles.
std::vector<frailty::Profile> synth_profiles(std::size_t n_subjects, int n_markers,
                                             std::uint64_t seed) {
    frailty::Rng rng(seed);
    std::vector<frailty::Profile> out(n_subjects);
    for (auto& p : out) {
        p.resize(n_markers);
        for (auto& level : p) {
            const double u = rng.uniform();
            level = u < 0.6 ? 0 : (u < 0.9 ? 1 : 2);
        }
    }
    return out;
}

void bench_build_poset(benchmark::State& state) {
    auto profiles = synth_profiles(static_cast<std::size_t>(state.range(0)), 8, 11);
    for (auto _ : state) {
        auto poset = frailty::build_poset(profiles);
        benchmark::DoNotOptimize(poset.total_weight);
    }
}
BENCHMARK(bench_build_poset)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void bench_sample_ordering(benchmark::State& state) {
    auto profiles = synth_profiles(static_cast<std::size_t>(state.range(0)), 8, 12);
    auto poset = frailty::build_poset(profiles);
    frailty::LinextSampler sampler(poset);
    sampler.initialize(7);
    std::vector<std::uint32_t> order;
    std::uint64_t s = 0;
    for (auto _ : state) {
        sampler.step(frailty::derive_seed(7, ++s), order);
        benchmark::DoNotOptimize(order.data());
    }
    state.counters["profiles"] = static_cast<double>(poset.size());
}
BENCHMARK(bench_sample_ordering)->Arg(20000)->Arg(200000)->Unit(benchmark::kMillisecond);

void bench_rank_methods(benchmark::State& state) {
    auto profiles = synth_profiles(50000, 8, 13);
    auto poset = frailty::build_poset(profiles);
    frailty::RankOptions opt;
    opt.method = static_cast<frailty::RankMethod>(state.range(0));
    opt.samples = 200;
    opt.seed = 5;
    for (auto _ : state) {
        auto est = frailty::average_ranks(poset, opt);
        benchmark::DoNotOptimize(est.average_rank.data());
    }
}
BENCHMARK(bench_rank_methods)
    ->Arg(static_cast<int>(frailty::RankMethod::MonteCarlo))
    ->Arg(static_cast<int>(frailty::RankMethod::Lpom))
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
