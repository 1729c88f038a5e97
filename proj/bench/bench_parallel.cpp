#include <benchmark/benchmark.h>

#include <vector>

#include "saint/harness.hpp"
#include "saint/qnetwork.hpp"
#include "saint/rng.hpp"

using namespace saint;

namespace {

QNetwork make_net() {
  QNetwork net(13, 30, 1, 25);
  Rng rng(7);
  net.init_random_normal(rng, 0.05);
  return net;
}

std::vector<double> make_batch(std::size_t n) {
  std::vector<double> x(n * 13);
  Rng rng(11);
  for (auto& v : x) v = rng.uniform();
  return x;
}

void BM_ForwardBatchSerial(benchmark::State& st) {
  const QNetwork net = make_net();
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto x = make_batch(n);
  std::vector<double> out(n * 25);
  for (auto _ : st) {
    net.forward_batch_serial(x, n, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_ForwardBatchParallel(benchmark::State& st) {
  const QNetwork net = make_net();
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto x = make_batch(n);
  std::vector<double> out(n * 25);
  for (auto _ : st) {
    net.forward_batch(x, n, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

Scenario short_scenario() {
  Scenario s;
  s.run.episode_duration = 120.0;
  s.run.warmup = 30.0;
  return s;
}

void run_sweep_bench(benchmark::State& st, bool parallel) {
  const Scenario s = short_scenario();
  SweepSpec spec;
  spec.variable = SweepVariable::kTtcStarFixed;
  spec.values = {2.0, 6.0};
  spec.episodes_per_point = 2;
  spec.systems = {System::kScripted, System::kBase};
  for (auto _ : st) {
    auto recs = run_sweep(s, spec, {}, parallel);
    benchmark::DoNotOptimize(recs.data());
  }
}

void BM_SweepSerial(benchmark::State& st) { run_sweep_bench(st, false); }
void BM_SweepParallel(benchmark::State& st) { run_sweep_bench(st, true); }

}  // namespace

BENCHMARK(BM_ForwardBatchSerial)->Arg(64)->Arg(1024)->Arg(8192);
BENCHMARK(BM_ForwardBatchParallel)->Arg(64)->Arg(1024)->Arg(8192);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
