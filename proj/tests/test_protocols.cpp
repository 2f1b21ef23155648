#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tokgossip/protocols.hpp"

using namespace tokgossip;

namespace {

std::vector<FusionValue> ints(const FusionSpec& f, std::vector<std::int64_t> xs) {
  std::vector<FusionValue> out;
  for (auto x : xs) out.push_back(f.from_integer(x));
  return out;
}

std::vector<FusionValue> iota_values(const FusionSpec& f, std::size_t n) {
  std::vector<std::int64_t> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<std::int64_t>((i * 37) % 101) - 20;
  return ints(f, xs);
}

ProtocolParams discrete(double lazy = 0.5) {
  ProtocolParams p;
  p.mode = SynchronousDiscrete{lazy};
  return p;
}

}  // namespace

TEST(Init, Examples) {
  const Graph ring = generate(GraphSpec::ring(4));
  const FusionSpec sum(FusionKind::Sum);
  auto crw = SimState::init(ProtocolKind::Crw, ring, iota_values(sum, 4), sum, {}, 1);
  EXPECT_EQ(crw.active().size(), 4u);
  std::uint64_t counts = 0;
  for (const auto& s : crw.nodes()) counts += s.count;
  EXPECT_EQ(counts, 4u);
  EXPECT_FALSE(crw.detect_termination());

  ProtocolParams p;
  p.srw_origin = 2;
  auto srw = SimState::init(ProtocolKind::Srw, ring, iota_values(sum, 4), sum, p, 1);
  EXPECT_EQ(srw.active(), std::vector<NodeId>{2});

  const Graph k2 = generate(GraphSpec::clique(2));
  GossipState g(k2, {0.0, 2.0}, 1);
  EXPECT_EQ(g.z(), (std::vector<double>{0.0, 2.0}));
}

TEST(Init, Rejections) {
  const Graph ring = generate(GraphSpec::ring(4));
  const FusionSpec sum(FusionKind::Sum);
  EXPECT_THROW(SimState::init(ProtocolKind::Crw, ring, iota_values(sum, 3), sum, {}, 1), UsageError);
  EXPECT_THROW(SimState::init(ProtocolKind::Crw, ring, iota_values(FusionSpec(FusionKind::Max), 4), sum, {}, 1),
               UsageError);
  EXPECT_THROW(SimState::init(ProtocolKind::Gossip, ring, iota_values(sum, 4), sum, {}, 1), UsageError);
  EXPECT_THROW(SimState::init(ProtocolKind::Crw, ring, iota_values(sum, 4), sum, discrete(1.0), 1), UsageError);
  ProtocolParams p;
  p.srw_origin = 9;
  EXPECT_THROW(SimState::init(ProtocolKind::Srw, ring, iota_values(sum, 4), sum, p, 1), UsageError);
}

TEST(HandleSend, SrwRing3HandExecution) {
  const Graph ring = generate(GraphSpec::ring(3));
  const FusionSpec sum(FusionKind::Sum);
  ProtocolParams p;
  p.srw_origin = 0;
  auto s = SimState::init(ProtocolKind::Srw, ring, ints(sum, {1, 1, 1}), sum, p, 1);
  s.send_to(0, 1);
  EXPECT_EQ(s.nodes()[1].value, FusionValue(SumValue{2}));
  EXPECT_EQ(s.nodes()[1].count, 2u);
  EXPECT_TRUE(s.nodes()[1].active);
  EXPECT_EQ(s.nodes()[0].value, FusionValue(SumValue{0}));
  EXPECT_EQ(s.nodes()[0].count, 0u);
  EXPECT_FALSE(s.nodes()[0].active);
  // Node 0 already sent; receiving gives it exactly the incoming payload.
  s.send_to(1, 0);
  EXPECT_EQ(s.nodes()[0].value, FusionValue(SumValue{2}));
  EXPECT_EQ(s.nodes()[0].count, 2u);
  s.send_to(0, 2);
  EXPECT_EQ(s.detect_termination(), std::optional<NodeId>(2));
  EXPECT_EQ(s.nodes()[2].value, FusionValue(SumValue{3}));
  EXPECT_THROW(s.send_to(0, 1), SimulationError);   // inactive sender
  EXPECT_THROW(s.send_to(2, 2), SimulationError);   // not a neighbor
}

TEST(HandleSend, CrwMergeDropsActiveCount) {
  const Graph ring = generate(GraphSpec::ring(4));
  const FusionSpec max(FusionKind::Max);
  auto s = SimState::init(ProtocolKind::Crw, ring, ints(max, {3, 8, 1, 5}), max, {}, 1);
  s.send_to(0, 1);
  EXPECT_EQ(s.active().size(), 3u);
  EXPECT_EQ(s.nodes()[1].value, FusionValue(MaxValue{8}));
  EXPECT_EQ(s.nodes()[1].count, 2u);
  EXPECT_EQ(s.messages(), 1u);
}

TEST(DetectTermination, SingleNode) {
  const Graph g(1, {});
  const FusionSpec sum(FusionKind::Sum);
  auto s = SimState::init(ProtocolKind::Crw, g, ints(sum, {4}), sum, {}, 1);
  EXPECT_EQ(s.detect_termination(), std::optional<NodeId>(0));
  const Trace tr = run(s, UntilTermination{});
  EXPECT_EQ(tr.tau, 0.0);
  EXPECT_EQ(tr.total_messages, 0u);
}

TEST(Run, CrwK2MeanIsHalf) {
  const Graph k2 = generate(GraphSpec::clique(2));
  const FusionSpec sum(FusionKind::Sum);
  double total = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto s = SimState::init(ProtocolKind::Crw, k2, ints(sum, {1, 1}), sum, {}, 5, t);
    total += run(s, UntilTermination{}).tau;
  }
  EXPECT_NEAR(total / trials, 0.5, 0.025);
}

TEST(Run, CrwClique3DeathChain) {
  // Rates k(k-1)/(n-1): 3 for k = 3 and 1 for k = 2, so E[tau] = 1/3 + 1.
  const Graph k3 = generate(GraphSpec::clique(3));
  const FusionSpec sum(FusionKind::Sum);
  double total = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto s = SimState::init(ProtocolKind::Crw, k3, ints(sum, {1, 1, 1}), sum, {}, 6, t);
    total += run(s, UntilTermination{}).tau;
  }
  EXPECT_NEAR(total / trials, 4.0 / 3.0, 0.05 * 4.0 / 3.0);
}

TEST(Run, SrwRing3AlwaysExact) {
  const Graph ring = generate(GraphSpec::ring(3));
  const FusionSpec sum(FusionKind::Sum);
  for (int t = 0; t < 200; ++t) {
    auto s = SimState::init(ProtocolKind::Srw, ring, ints(sum, {1, 1, 1}), sum, {}, 8, t);
    const Trace tr = run(s, UntilTermination{});
    ASSERT_TRUE(tr.terminated);
    ASSERT_EQ(tr.final_payload->value, FusionValue(SumValue{3}));
    ASSERT_EQ(tr.final_payload->count, 3u);
  }
}

TEST(Run, ExactAcrossModesAndKinds) {
  for (const auto& spec : {GraphSpec::torus(4, 2), GraphSpec::rgg(40, 3), GraphSpec::grid2d(5)}) {
    const Graph g = generate(spec);
    for (auto kind : {FusionKind::Sum, FusionKind::Max}) {
      const FusionSpec f(kind);
      const auto x = iota_values(f, g.size());
      const FusionValue want = f.fold(x);
      for (auto pk : {ProtocolKind::Srw, ProtocolKind::Crw}) {
        for (const ProtocolParams& params : {ProtocolParams{}, discrete(), discrete(0.0)}) {
          // Non-lazy synchronous CRW never merges tokens of opposite parity
          // on a bipartite graph.
          if (pk == ProtocolKind::Crw && !is_continuous(params.mode) && lazy_prob(params.mode) == 0.0) {
            continue;
          }
          auto s = SimState::init(pk, g, x, f, params, 3, 1);
          const Trace tr = run(s, UntilTermination{});
          ASSERT_TRUE(tr.complete);
          EXPECT_EQ(tr.final_payload->value, want) << spec.describe();
          EXPECT_EQ(tr.final_payload->count, g.size());
        }
      }
    }
  }
}

TEST(Run, ConservationAtEveryEvent) {
  const Graph g = generate(GraphSpec::torus(5, 2));
  const FusionSpec sum(FusionKind::Sum);
  const auto x = iota_values(sum, g.size());
  const auto total = std::get<SumValue>(sum.fold(x)).value;
  for (auto pk : {ProtocolKind::Srw, ProtocolKind::Crw}) {
    std::size_t checked = 0;
    RunOptions options;
    options.observer = [&](const SimState& s) {
      std::int64_t v = 0;
      std::uint64_t c = 0;
      for (const auto& node : s.nodes()) {
        v += std::get<SumValue>(node.value).value;
        c += node.count;
      }
      ASSERT_EQ(v, total);
      ASSERT_EQ(c, s.graph().size());
      ++checked;
    };
    auto s = SimState::init(pk, g, x, sum, {}, 2, 0);
    const Trace tr = run(s, UntilTermination{}, options);
    EXPECT_EQ(checked, tr.total_messages);
  }
}

TEST(Run, SigmaAndPoints) {
  const Graph g = generate(GraphSpec::clique(8));
  const FusionSpec sum(FusionKind::Sum);
  auto s = SimState::init(ProtocolKind::Crw, g, iota_values(sum, 8), sum, {}, 4, 2);
  const Trace tr = run(s, UntilTermination{});
  EXPECT_EQ(tr.sigma[8], 0.0);
  EXPECT_EQ(tr.sigma[1], tr.tau);
  for (std::size_t k = 1; k < 8; ++k) EXPECT_LE(tr.sigma[k + 1], tr.sigma[k]);
  EXPECT_EQ(tr.points.front().active, 8u);
  EXPECT_EQ(tr.points.back().active, 1u);
  EXPECT_EQ(tr.points.back().t, tr.tau);
  for (std::size_t i = 1; i < tr.points.size(); ++i) {
    EXPECT_GE(tr.points[i].t, tr.points[i - 1].t);
    EXPECT_GE(tr.points[i].messages, tr.points[i - 1].messages);
  }
  EXPECT_EQ(std::accumulate(tr.sends.begin(), tr.sends.end(), std::uint64_t{0}), tr.total_messages);
  EXPECT_EQ(std::accumulate(tr.receives.begin(), tr.receives.end(), std::uint64_t{0}), tr.total_messages);
}

TEST(Run, DeterministicAndMaxTime) {
  const Graph g = generate(GraphSpec::ring(32));
  const FusionSpec sum(FusionKind::Sum);
  auto a = SimState::init(ProtocolKind::Crw, g, iota_values(sum, 32), sum, {}, 10, 3);
  auto b = SimState::init(ProtocolKind::Crw, g, iota_values(sum, 32), sum, {}, 10, 3);
  const Trace ta = run(a, UntilTermination{}), tb = run(b, UntilTermination{});
  EXPECT_EQ(ta.tau, tb.tau);
  EXPECT_EQ(ta.sends, tb.sends);
  auto c = SimState::init(ProtocolKind::Crw, g, iota_values(sum, 32), sum, {}, 10, 3);
  RunOptions options;
  options.max_time = 1.0;
  const Trace tc = run(c, UntilTermination{}, options);
  EXPECT_FALSE(tc.complete);
  EXPECT_FALSE(tc.terminated);
}

TEST(SynchronousRound, Ring4Neighbors) {
  const Graph g = generate(GraphSpec::ring(4));
  const FusionSpec sum(FusionKind::Sum);
  ProtocolParams p = discrete(0.0);
  p.srw_origin = 0;
  int at1 = 0, at3 = 0;
  for (int t = 0; t < 4000; ++t) {
    auto s = SimState::init(ProtocolKind::Srw, g, iota_values(sum, 4), sum, p, 12, t);
    s.synchronous_round();
    ASSERT_EQ(s.active().size(), 1u);
    const NodeId pos = s.active()[0];
    ASSERT_TRUE(pos == 1 || pos == 3);
    (pos == 1 ? at1 : at3)++;
    EXPECT_EQ(s.now(), 1.0);
  }
  EXPECT_NEAR(at1 / 4000.0, 0.5, 0.03);
}

TEST(SynchronousRound, CrossingTokensDoNotMeet) {
  const Graph k2 = generate(GraphSpec::clique(2));
  const FusionSpec sum(FusionKind::Sum);
  auto s = SimState::init(ProtocolKind::Crw, k2, ints(sum, {1, 2}), sum, discrete(0.0), 1);
  s.synchronous_round();
  EXPECT_EQ(s.active().size(), 2u);
  EXPECT_EQ(s.nodes()[0].value, FusionValue(SumValue{2}));
  EXPECT_EQ(s.nodes()[1].value, FusionValue(SumValue{1}));
  EXPECT_THROW(SimState::init(ProtocolKind::Crw, k2, ints(sum, {1, 2}), sum, {}, 1).synchronous_round(),
               SimulationError);
}

TEST(Gossip, StepAndConservation) {
  const Graph k2 = generate(GraphSpec::clique(2));
  GossipState s(k2, {0.0, 2.0}, 1);
  gossip_step(s, GossipMatrix::uniform(k2));
  EXPECT_EQ(s.z(), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(s.messages(), 2u);

  const Graph g = generate(GraphSpec::torus(4, 2));
  std::vector<double> z0(16);
  for (std::size_t i = 0; i < 16; ++i) z0[i] = static_cast<double>(i * i);
  GossipState t(g, z0, 2);
  const double before = std::accumulate(z0.begin(), z0.end(), 0.0);
  double err = t.relative_error();
  for (int i = 0; i < 500; ++i) {
    t.step(GossipMatrix::uniform(g));
    EXPECT_NEAR(std::accumulate(t.z().begin(), t.z().end(), 0.0), before, 1e-9);
    EXPECT_LE(t.relative_error(), err + 1e-12);
    err = t.relative_error();
  }
}

TEST(Gossip, Ring4Converges) {
  const Graph g = generate(GraphSpec::ring(4));
  GossipState s(g, {4, 0, 0, 0}, 3);
  GossipOptions options;
  options.eps = 1e-6;
  const Trace tr = run(s, GossipMatrix::uniform(g), options);
  ASSERT_TRUE(tr.complete);
  for (double z : s.z()) EXPECT_NEAR(z, 1.0, 1e-5);
  EXPECT_EQ(*tr.messages_to_eps, s.messages());
}

TEST(Gossip, MatrixValidation) {
  const Graph g = generate(GraphSpec::ring(4));
  EXPECT_THROW(GossipMatrix::from_rows(g, {{0.5, 0.5}, {1.0}, {0.5, 0.5}, {0.5, 0.5}}), UsageError);
  EXPECT_THROW(GossipMatrix::from_rows(g, {{0.7, 0.7}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}), UsageError);
  const auto p = GossipMatrix::from_rows(g, {{1.0, 0.0}, {0.5, 0.5}, {0.5, 0.5}, {0.25, 0.75}});
  EXPECT_DOUBLE_EQ(p.probability(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(p.probability(3, 2), 0.75);
  EXPECT_DOUBLE_EQ(p.probability(0, 2), 0.0);
  RngStream rng(1, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(p.sample(0, rng), 1u);
}

TEST(Gossip, SingleMessageAccounting) {
  const Graph g = generate(GraphSpec::ring(8));
  GossipState a(g, {8, 0, 0, 0, 0, 0, 0, 0}, 4), b(g, {8, 0, 0, 0, 0, 0, 0, 0}, 4);
  GossipOptions two, one;
  one.messages_per_exchange = 1;
  const Trace ta = run(a, GossipMatrix::uniform(g), two);
  const Trace tb = run(b, GossipMatrix::uniform(g), one);
  EXPECT_EQ(ta.total_messages, 2 * tb.total_messages);
}

namespace {

// Transmissions of a synchronous single-origin flood: every reached node
// forwards to all neighbors except those that delivered its first copy,
// i.e. its BFS parents.
std::uint64_t flood_transmissions_oracle(const Graph& g, NodeId origin) {
  const auto d = bfs_distances(g, origin);
  std::uint64_t total = 0;
  for (NodeId u = 0; u < g.size(); ++u) {
    for (NodeId w : g.neighbors(u)) {
      if (d[w] + 1 != d[u]) ++total;
    }
  }
  return total;
}

}  // namespace

TEST(Cfld, Ring6HandOracle) {
  const Graph g = generate(GraphSpec::ring(6));
  const FusionSpec sum(FusionKind::Sum);
  RngStream rng(1, 0);
  const auto r = cfld_run(g, {{0, {SumValue{6}, 6}}}, sum, SynchronousDiscrete{0.0}, rng);
  EXPECT_EQ(r.transmissions, 6u);
  EXPECT_EQ(r.completion_time, 3.0);
  EXPECT_TRUE(r.complete);
  for (const auto& p : r.node_payload) EXPECT_EQ(p, (TokenPayload{SumValue{6}, 6}));
}

TEST(Cfld, SynchronousMatchesOracle) {
  for (const auto& spec : {GraphSpec::torus(5, 2), GraphSpec::grid2d(6), GraphSpec::rgg(60, 4),
                           GraphSpec::clique(7), GraphSpec::ring(9)}) {
    const Graph g = generate(spec);
    const FusionSpec sum(FusionKind::Sum);
    for (NodeId origin : {NodeId{0}, static_cast<NodeId>(g.size() / 2)}) {
      RngStream rng(1, 0);
      const auto r = cfld_run(g, {{origin, {SumValue{1}, g.size()}}}, sum, SynchronousDiscrete{}, rng);
      EXPECT_EQ(r.transmissions, flood_transmissions_oracle(g, origin)) << spec.describe();
      EXPECT_LE(r.transmissions, g.total_degree());
      EXPECT_EQ(r.completion_time, static_cast<double>(eccentricity(g, origin)));
      EXPECT_TRUE(r.complete);
    }
  }
}

TEST(Cfld, ContinuousMultiOrigin) {
  const Graph g = generate(GraphSpec::torus(6, 2));
  const FusionSpec sum(FusionKind::Sum);
  RngStream rng(2, 0);
  const auto r = cfld_run(g, {{3, {SumValue{10}, 20}}, {17, {SumValue{5}, 16}}}, sum, ContinuousClock{}, rng, 2.5);
  EXPECT_TRUE(r.complete);
  for (auto t : r.per_origin_transmissions) EXPECT_LE(t, g.total_degree());
  for (const auto& p : r.node_payload) EXPECT_EQ(p, (TokenPayload{SumValue{15}, 36}));
  EXPECT_GE(r.completion_time, 2.5);
  EXPECT_LE(r.completion_time, r.duration);
}

TEST(Cfld, Rejections) {
  const Graph g = generate(GraphSpec::ring(5));
  const FusionSpec sum(FusionKind::Sum);
  RngStream rng(1, 0);
  EXPECT_THROW(cfld_run(g, {}, sum, ContinuousClock{}, rng), UsageError);
  EXPECT_THROW(cfld_run(g, {{0, {SumValue{1}, 3}}}, sum, ContinuousClock{}, rng), SimulationError);
}

TEST(TwoPhase, SwitchAtZeroIsPureFlooding) {
  const Graph g = generate(GraphSpec::grid2d(5));
  const FusionSpec sum(FusionKind::Sum);
  const auto x = iota_values(sum, g.size());
  const Trace tr = two_phase_run(g, x, sum, TargetGamma{static_cast<double>(g.size())}, ContinuousClock{}, 1);
  EXPECT_EQ(tr.switch_time, 0.0);
  EXPECT_EQ(tr.phase1_messages, 0u);
  EXPECT_LE(tr.total_messages, g.size() * g.total_degree());
  EXPECT_TRUE(tr.consensus);
}

TEST(TwoPhase, ConsensusEveryTrial) {
  const Graph g = generate(GraphSpec::torus(6, 2));
  for (auto kind : {FusionKind::Sum, FusionKind::Max}) {
    const FusionSpec f(kind);
    const auto x = iota_values(f, g.size());
    for (const ClockMode& mode : {ClockMode{ContinuousClock{}}, ClockMode{SynchronousDiscrete{}}}) {
      for (int t = 0; t < 20; ++t) {
        const Trace tr = two_phase_run(g, x, f, ExplicitTime{5.0}, mode, 9, t);
        ASSERT_TRUE(tr.consensus);
        ASSERT_TRUE(tr.complete);
        EXPECT_EQ(tr.total_messages, tr.phase1_messages + tr.phase2_messages);
        EXPECT_EQ(tr.final_payload->value, f.fold(x));
        EXPECT_LE(tr.switch_time, 5.0);
      }
    }
  }
}

TEST(TwoPhase, Clique16PassageToFourTokens) {
  // Mean first time at most 4 tokens remain: sum_{k=5}^{16} 15 / (k (k - 1)).
  double oracle = 0;
  for (int k = 5; k <= 16; ++k) oracle += 15.0 / (k * (k - 1.0));
  EXPECT_NEAR(oracle, 2.8125, 1e-12);
  const Graph g = generate(GraphSpec::clique(16));
  const FusionSpec sum(FusionKind::Sum);
  double total = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto s = SimState::init(ProtocolKind::Crw, g, iota_values(sum, 16), sum, {}, 21, t);
    total += run(s, UntilTime{100.0, true}).sigma[4];
  }
  EXPECT_NEAR(total / trials, oracle, 0.1 * oracle);
}

TEST(Hybrid, KOneIsSrw) {
  const Graph g = generate(GraphSpec::torus(4, 2));
  const FusionSpec avg(FusionKind::WeightedAvg);
  const auto x = iota_values(avg, g.size());
  const Trace h = hybrid_k_run(g, x, 1, 30.0, 5, 2);
  ProtocolParams p;
  auto s = SimState::init(ProtocolKind::Srw, g, x, avg, p, 5, 2);
  const Trace srw = run(s, UntilTime{30.0, false});
  EXPECT_EQ(h.total_messages, srw.total_messages);
  EXPECT_EQ(h.sends, srw.sends);
  EXPECT_EQ(h.receives, srw.receives);
}

TEST(Hybrid, KNIsPairwiseAveraging) {
  const Graph g = generate(GraphSpec::ring(8));
  const FusionSpec avg(FusionKind::WeightedAvg);
  const auto x = iota_values(avg, 8);
  const double mean = std::get<AvgValue>(avg.fold(x)).estimate;
  RunOptions options;
  std::size_t events = 0;
  options.observer = [&](const SimState& s) {
    ASSERT_EQ(s.active().size(), 8u);
    double total = 0;
    for (const auto& node : s.nodes()) {
      const auto& v = std::get<AvgValue>(node.value);
      ASSERT_DOUBLE_EQ(v.weight, 1.0);
      total += v.estimate;
    }
    ASSERT_NEAR(total / 8, mean, 1e-9);
    ++events;
  };
  const Trace tr = hybrid_k_run(g, x, 8, 50.0, 3, 0, options);
  EXPECT_GT(events, 0u);
  EXPECT_EQ(tr.total_messages, 2 * events);
  EXPECT_LT(tr.max_error, 1.0);
}

TEST(Hybrid, ActiveCountStaysK) {
  const Graph g = generate(GraphSpec::torus(5, 2));
  const FusionSpec avg(FusionKind::WeightedAvg);
  RunOptions options;
  options.observer = [](const SimState& s) { ASSERT_EQ(s.active().size(), 3u); };
  const Trace tr = hybrid_k_run(g, iota_values(avg, 25), 3, 40.0, 8, 1, options);
  EXPECT_EQ(tr.points.back().active, 3u);
  std::size_t finite = 0;
  for (double e : tr.node_error) finite += std::isfinite(e) ? 1 : 0;
  EXPECT_EQ(finite, 3u);
  EXPECT_THROW(hybrid_k_run(g, iota_values(FusionSpec(FusionKind::Sum), 25), 3, 1.0, 1), UsageError);
  EXPECT_THROW(hybrid_k_run(g, iota_values(avg, 25), 26, 1.0, 1), UsageError);
}

TEST(TraceFiles, Formats) {
  const Graph g = generate(GraphSpec::ring(5));
  const FusionSpec sum(FusionKind::Sum);
  auto s = SimState::init(ProtocolKind::Crw, g, iota_values(sum, 5), sum, {}, 1, 0);
  const Trace tr = run(s, UntilTermination{});
  std::ostringstream csv, nodes, js;
  write_trace_csv(csv, tr);
  write_node_csv(nodes, tr);
  write_trace_json(js, tr);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "t,active_count,total_messages");
  EXPECT_EQ(nodes.str().substr(0, nodes.str().find('\n')), "node,sends,receives,final_count");
  std::size_t lines = 0;
  for (char c : csv.str()) lines += c == '\n';
  EXPECT_EQ(lines, tr.points.size() + 1);
  EXPECT_NE(js.str().find("\"protocol\""), std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "tokgossip_trace_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  save_trace(dir.string(), "trial0", tr);
  EXPECT_TRUE(std::filesystem::exists(dir / "trial0.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "trial0.nodes.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "trial0.json"));
  std::filesystem::remove_all(dir);
}
