#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "tokgossip/analysis.hpp"
#include "tokgossip/protocols.hpp"

using namespace tokgossip;

namespace {

std::vector<FusionValue> ones(std::size_t n) { return std::vector<FusionValue>(n, SumValue{1}); }

void BM_CrwTorus(benchmark::State& st) {
  const Graph g = generate(GraphSpec::torus(static_cast<std::size_t>(st.range(0)), 2));
  const FusionSpec fusion(FusionKind::Sum);
  std::uint64_t trial = 0, msgs = 0;
  for (auto _ : st) {
    auto s = SimState::init(ProtocolKind::Crw, g, ones(g.size()), fusion, {}, 7, trial++);
    const Trace tr = run(s, UntilTermination{});
    msgs += tr.total_messages;
    benchmark::DoNotOptimize(tr.tau);
  }
  st.counters["msgs/s"] = benchmark::Counter(static_cast<double>(msgs), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_CrwTorus)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SrwRing(benchmark::State& st) {
  const Graph g = generate(GraphSpec::ring(static_cast<std::size_t>(st.range(0))));
  const FusionSpec fusion(FusionKind::Sum);
  std::uint64_t trial = 0;
  for (auto _ : st) {
    auto s = SimState::init(ProtocolKind::Srw, g, ones(g.size()), fusion, {}, 7, trial++);
    benchmark::DoNotOptimize(run(s, UntilTermination{}).tau);
  }
}
BENCHMARK(BM_SrwRing)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_FloodGrid(benchmark::State& st) {
  const Graph g = generate(GraphSpec::grid2d(static_cast<std::size_t>(st.range(0))));
  const FusionSpec fusion(FusionKind::Sum);
  RngStream rng(7, 0);
  for (auto _ : st) {
    const auto r = cfld_run(g, {{0, {SumValue{1}, g.size()}}}, fusion, ContinuousClock{}, rng);
    benchmark::DoNotOptimize(r.transmissions);
  }
}
BENCHMARK(BM_FloodGrid)->Arg(32)->Arg(64);

void BM_Gossip(benchmark::State& st) {
  const Graph g = generate(GraphSpec::torus(static_cast<std::size_t>(st.range(0)), 2));
  const auto p = GossipMatrix::uniform(g);
  const auto z0 = slowest_mode(p);
  std::uint64_t trial = 0;
  for (auto _ : st) {
    GossipState s(g, z0, 7, trial++);
    GossipOptions opt;
    opt.eps = 0.01;
    benchmark::DoNotOptimize(run(s, p, opt).total_messages);
  }
}
BENCHMARK(BM_Gossip)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Hitting(benchmark::State& st) {
  const Graph g = generate(GraphSpec::torus(static_cast<std::size_t>(st.range(0)), 2));
  for (auto _ : st) benchmark::DoNotOptimize(analysis::worst_case_hitting(g));
}
BENCHMARK(BM_Hitting)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
