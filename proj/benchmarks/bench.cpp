#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "vrftlab/experiment.hpp"
#include "vrftlab/metrics.hpp"
#include "vrftlab/plant.hpp"
#include "vrftlab/poison.hpp"
#include "vrftlab/vrft.hpp"

using namespace vrftlab;

namespace {

const ReferenceModel& model() {
    static const ReferenceModel mr = make_reference_model(0.002, kSamplePeriod);
    return mr;
}

IoDataset record(std::size_t n) {
    const ThermalPlantConfig cfg;
    const auto u = generate_excitation(scenario_a_excitation(n, 1));
    const auto w = generate_weather(n, 2);
    const ExogenousTraces tr{w, SignalSeries(std::vector<double>(n, 0.0), cfg.ts)};
    return run_open_loop(cfg, u, tr, steady_state(cfg, 0.5, w[0], 0.0));
}

void BM_Prefilter(benchmark::State& state) {
    const IoDataset ds = record(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(prefilter(ds, model()));
}
BENCHMARK(BM_Prefilter)->Arg(100)->Arg(1000);

void BM_Synthesize(benchmark::State& state) {
    const IoDataset ds = record(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(synthesize(ds, model()));
}
BENCHMARK(BM_Synthesize)->Arg(100)->Arg(1000);

void BM_GradOuter(benchmark::State& state) {
    const AttackProblem p = make_attack_problem(prefilter(record(static_cast<std::size_t>(state.range(0))), model()),
                                                model());
    const Eigen::VectorXd a_u = Eigen::VectorXd::Constant(p.input_dim, 1e-3);
    const Eigen::VectorXd a_y = Eigen::VectorXd::Constant(p.output_dim, 1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(grad_outer(p, a_u, a_y));
}
BENCHMARK(BM_GradOuter)->Arg(100)->Arg(1000);

void BM_Attack(benchmark::State& state) {
    const IoDataset ds = prefilter(record(100), model());
    const AttackBudget b = make_budget(0.1, 0.2, ds);
    for (auto _ : state) benchmark::DoNotOptimize(run_attack(ds, model(), b));
}
BENCHMARK(BM_Attack)->Unit(benchmark::kMillisecond);

void BM_Validation(benchmark::State& state) {
    const ExperimentConfig cfg;
    const auto traces = validation_traces(cfg, Scenario::A, 100, 0);
    const auto params = synthesize(generate_training_dataset(cfg, Scenario::A, 100, 0), model()).params;
    for (auto _ : state) benchmark::DoNotOptimize(validate_controller(cfg, params, traces));
}
BENCHMARK(BM_Validation)->Unit(benchmark::kMillisecond);

void BM_Welch(benchmark::State& state) {
    std::mt19937 rng(1);
    std::normal_distribution<double> g(21.0, 0.1);
    std::vector<double> x(2240);
    for (double& v : x) v = g(rng);
    const SignalSeries s(x, kSamplePeriod);
    for (auto _ : state) benchmark::DoNotOptimize(avg_psd(s));
}
BENCHMARK(BM_Welch);

}  // namespace

BENCHMARK_MAIN();
