#include <benchmark/benchmark.h>

#include "fatigue/detector.hpp"
#include "fatigue/policy.hpp"
#include "fatigue/simulator.hpp"

using namespace fatigue;

namespace {

WindowFeatures sample_window(std::uint64_t seed) {
  const Scenario sc = builtin_scenario("short");
  StaticController c;
  const auto trace = run_episode(sc, c, seed);
  Window w;
  w.frames.assign(trace.frames.begin(), trace.frames.begin() + static_cast<std::ptrdiff_t>(sc.window));
  return extract_features(w);
}

void BM_HrEncoderForward(benchmark::State& state) {
  Rng rng(1);
  HrEncoder enc;
  enc.params().fill_uniform(rng, -0.1, 0.1);
  const auto f = sample_window(1);
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(f.hr));
}
BENCHMARK(BM_HrEncoderForward);

void BM_SeqEncoderForwardBackward(benchmark::State& state) {
  Rng rng(2);
  SeqEncoder enc(3);
  enc.params().fill_uniform(rng, -0.1, 0.1);
  const auto f = sample_window(2);
  ParamSet grads = enc.params().zeros_like();
  const std::vector<double> d_out(kEmbeddingDim, 1.0);
  for (auto _ : state) {
    SeqEncoder::Cache cache;
    benchmark::DoNotOptimize(enc.encode(f.eye, &cache));
    enc.backward(cache, d_out, grads);
  }
}
BENCHMARK(BM_SeqEncoderForwardBackward);

void BM_CtxEncoderForward(benchmark::State& state) {
  Rng rng(3);
  CtxEncoder enc;
  enc.params().fill_uniform(rng, -0.1, 0.1);
  const auto in = make_context(30.0, Device::ar_glasses, 250.0, -1.0);
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(in));
}
BENCHMARK(BM_CtxEncoderForward);

void BM_DetectorLossAndGrad(benchmark::State& state) {
  Rng rng(4);
  const Detector d(DetectorOptions{}, rng);
  const auto f = sample_window(4);
  auto grads = d.zero_gradients();
  for (auto _ : state) benchmark::DoNotOptimize(d.loss_and_grad(f, 1, &grads));
}
BENCHMARK(BM_DetectorLossAndGrad);

void BM_QUpdate(benchmark::State& state) {
  QTable q;
  Rng rng(5);
  for (auto _ : state) {
    const StateId s{rng.index(kNumStates)}, n{rng.index(kNumStates)};
    benchmark::DoNotOptimize(q_update(q, s, kKeep, rng.uniform(), n));
  }
}
BENCHMARK(BM_QUpdate);

void BM_SelectAction(benchmark::State& state) {
  QTable q;
  Rng rng(6);
  const StateId s = encode_state(1, InterfaceConfig::uniform(1));
  for (auto _ : state) benchmark::DoNotOptimize(select_action(q, s, 0.1, rng));
}
BENCHMARK(BM_SelectAction);

void BM_StepUser(benchmark::State& state) {
  const Scenario sc = builtin_scenario("default");
  Rng rng(7);
  SimUserState user = initial_state(sc, rng);
  for (auto _ : state) {
    auto [next, out] = step_user(user, InterfaceConfig::uniform(1), sc, 0, rng);
    benchmark::DoNotOptimize(out.tlx);
    user.fatigue = next.fatigue > 0.9 ? 0.0 : next.fatigue;
  }
}
BENCHMARK(BM_StepUser);

}  // namespace
BENCHMARK_MAIN();
