#include <benchmark/benchmark.h>

#include <random>

#include "acecode/metrics.hpp"
#include "acecode/ppo.hpp"
#include "acecode/rewarder.hpp"
#include "acecode/synth_env.hpp"

namespace {

using namespace acecode;

void BM_RewardFromOutcome(benchmark::State& state) {
  RewardConfig cfg;
  cfg.k = 1.5;
  double cand = 1.0;
  for (auto _ : state) {
    cand = cand > 3.0 ? 0.5 : cand + 1e-3;
    benchmark::DoNotOptimize(reward_from_outcome(Status::Pass, FloatNanos(1e6), FloatNanos(cand * 1e6), cfg));
  }
}
BENCHMARK(BM_RewardFromOutcome);

void BM_BuildReport(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> t(0.01, 3.0);
  std::vector<TaskResult> tuned, base;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = "t" + std::to_string(i);
    tuned.push_back(i % 5 ? TaskResult::passed(id, t(rng), 10) : TaskResult::failed(id, Status::TestFailure));
    base.push_back(i % 7 ? TaskResult::passed(id, t(rng), 10) : TaskResult::failed(id, Status::CompileError));
  }
  for (auto _ : state) benchmark::DoNotOptimize(build_report(tuned, std::span<const TaskResult>(base)));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_BuildReport)->Arg(100)->Arg(10000);

void BM_ObjectiveGradient(benchmark::State& state) {
  const synth::SynthEnv env(synth::SynthSpec{}, RewardConfig{});
  ppo::PolicyParams actor{env.vocabulary_size(), {}};
  ppo::ValueParams critic;
  std::mt19937_64 rng(3);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<ppo::Trajectory> trajs;
  for (int i = 0; i < state.range(0); ++i) trajs.push_back(ppo::sample_trajectory(env, 0, actor, critic, 1.0, uniform));
  const ppo::PPOConfig cfg;
  const auto batch = ppo::make_batch(trajs, actor, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(ppo::objective_gradient(batch, actor, critic, cfg));
}
BENCHMARK(BM_ObjectiveGradient)->Arg(5)->Arg(64);

void BM_TrainToyEpoch(benchmark::State& state) {
  const synth::SynthEnv env(synth::SynthSpec{}, RewardConfig{});
  ppo::PPOConfig cfg;
  cfg.epochs = 1;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    ppo::PolicyParams actor{env.vocabulary_size(), {}};
    ppo::ValueParams critic;
    benchmark::DoNotOptimize(ppo::train(env, actor, critic, cfg, seed++));
  }
}
BENCHMARK(BM_TrainToyEpoch);

}  // namespace
BENCHMARK_MAIN();
