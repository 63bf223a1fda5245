#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include <sqkd/adversary.hpp>
#include <sqkd/protocol.hpp>

using namespace sqkd;

static void BM_SimulateRound(benchmark::State& state) {
    const OpticalParams phys;
    const RoundConfig cfg;
    const RoutingTable routing = make_routing_table(phys, nullptr);
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_round(i++, 1, cfg, phys.source, phys.detector, routing));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SimulateRound);

static void BM_RunSession(benchmark::State& state) {
    const OpticalParams phys;
    SessionOptions opts;
    opts.shards = static_cast<unsigned>(state.range(1));
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_session(n, RoundConfig{}, phys, nullptr, 1, opts).raw_key.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunSession)->Args({1'000'000, 1})->Args({1'000'000, 4})->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_AssessNamedAttack(benchmark::State& state) {
    const AttackModel a = named_attack(NamedAttack::BothZInterceptResend, 4);
    for (auto _ : state) benchmark::DoNotOptimize(assess(a));
}
BENCHMARK(BM_AssessNamedAttack);

static void BM_AttackFromParams(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 gen(1);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> theta(2 * generator_size(d));
    for (double& t : theta) t = n(gen);
    for (auto _ : state) benchmark::DoNotOptimize(attack_from_params(theta, d));
}
BENCHMARK(BM_AttackFromParams)->Arg(2)->Arg(4)->Arg(8);

static void BM_VerifyConstraints(benchmark::State& state) {
    const AttackModel a = no_error_attack(4, 1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(verify_no_error_constraints(a, 1e-9).within_tol);
}
BENCHMARK(BM_VerifyConstraints);

BENCHMARK_MAIN();
