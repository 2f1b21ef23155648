#include <algorithm>
#include <cmath>
#include <queue>

#include "tokgossip/protocols.hpp"

namespace tokgossip {

namespace {

void validate_origins(const Graph& g, const std::vector<FloodOrigin>& origins,
                      const FusionSpec& fusion) {
  if (origins.empty()) throw UsageError("cfld: no origins");
  std::uint64_t total = 0;
  std::vector<char> seen(g.size(), 0);
  for (const auto& o : origins) {
    if (o.node >= g.size()) throw UsageError("cfld: origin out of range");
    if (seen[o.node]) throw SimulationError("cfld: two origins on one node");
    seen[o.node] = 1;
    if (kind_of(o.payload.value) != fusion.kind()) throw UsageError("cfld: payload kind mismatch");
    total += o.payload.count;
  }
  if (total != g.size()) {
    throw SimulationError("cfld: origin counts sum to " + std::to_string(total) + ", expected " +
                          std::to_string(g.size()));
  }
}

FloodResult empty_result(const Graph& g, const std::vector<FloodOrigin>& origins,
                         const FusionSpec& fusion) {
  FloodResult r;
  r.per_origin_transmissions.assign(origins.size(), 0);
  r.sends.assign(g.size(), 0);
  r.receives.assign(g.size(), 0);
  r.node_payload.assign(g.size(), TokenPayload{fusion.identity(), 0});
  return r;
}

// Synchronous rounds; each origin's flood is independent of the others.
void flood_synchronous(const Graph& g, const std::vector<FloodOrigin>& origins,
                       const FusionSpec& fusion, FloodResult& r) {
  const std::size_t n = g.size();
  std::vector<std::int64_t> first(n);
  std::vector<std::vector<NodeId>> senders(n);
  std::size_t reached_all = 0;
  for (std::size_t o = 0; o < origins.size(); ++o) {
    std::fill(first.begin(), first.end(), -1);
    for (auto& s : senders) s.clear();
    const NodeId src = origins[o].node;
    first[src] = 0;
    r.node_payload[src] = fuse_payload(fusion, r.node_payload[src], origins[o].payload);
    std::size_t reached = 1;
    std::vector<NodeId> frontier{src}, next;
    std::int64_t round = 0;
    while (!frontier.empty()) {
      ++round;
      next.clear();
      bool transmitted = false;
      for (NodeId u : frontier) {
        const auto& excluded = senders[u];
        for (NodeId w : g.neighbors(u)) {
          if (std::find(excluded.begin(), excluded.end(), w) != excluded.end()) continue;
          transmitted = true;
          ++r.transmissions;
          ++r.per_origin_transmissions[o];
          ++r.sends[u];
          ++r.receives[w];
          if (first[w] < 0) {
            first[w] = round;
            senders[w] = {u};
            next.push_back(w);
            r.node_payload[w] = fuse_payload(fusion, r.node_payload[w], origins[o].payload);
            ++reached;
            r.completion_time = std::max(r.completion_time, static_cast<double>(round));
          } else if (first[w] == round) {
            senders[w].push_back(u);
          }
        }
      }
      if (transmitted) r.duration = std::max(r.duration, static_cast<double>(round));
      frontier.swap(next);
    }
    if (reached == n) ++reached_all;
  }
  r.complete = reached_all == origins.size();
}

// Continuous time: a node forwards every pending flood at its next tick.
void flood_continuous(const Graph& g, const std::vector<FloodOrigin>& origins,
                      const FusionSpec& fusion, RngStream& rng, double start, FloodResult& r) {
  const std::size_t n = g.size(), m = origins.size();
  // received[o * n + v]: sender of the first receipt (n = origin itself), or -1.
  std::vector<std::int64_t> received(m * n, -1);
  std::vector<std::vector<std::size_t>> pending(n);
  std::vector<char> scheduled(n, 0);
  using Tick = std::pair<double, NodeId>;
  std::priority_queue<Tick, std::vector<Tick>, std::greater<>> ticks;

  auto schedule = [&](NodeId v, double now) {
    if (!scheduled[v]) {
      scheduled[v] = 1;
      ticks.emplace(now + rng.exponential(1.0), v);
    }
  };
  for (std::size_t o = 0; o < m; ++o) {
    const NodeId src = origins[o].node;
    received[o * n + src] = static_cast<std::int64_t>(n);
    r.node_payload[src] = fuse_payload(fusion, r.node_payload[src], origins[o].payload);
    pending[src].push_back(o);
    schedule(src, start);
  }
  std::size_t deliveries = m;
  r.completion_time = start;
  r.duration = start;
  while (!ticks.empty()) {
    const auto [t, u] = ticks.top();
    ticks.pop();
    scheduled[u] = 0;
    r.duration = std::max(r.duration, t);
    auto work = std::move(pending[u]);
    pending[u].clear();
    for (std::size_t o : work) {
      const std::int64_t from = received[o * n + u];
      for (NodeId w : g.neighbors(u)) {
        if (static_cast<std::int64_t>(w) == from) continue;
        ++r.transmissions;
        ++r.per_origin_transmissions[o];
        ++r.sends[u];
        ++r.receives[w];
        if (received[o * n + w] < 0) {
          received[o * n + w] = u;
          r.node_payload[w] = fuse_payload(fusion, r.node_payload[w], origins[o].payload);
          pending[w].push_back(o);
          schedule(w, t);
          ++deliveries;
          r.completion_time = std::max(r.completion_time, t);
        }
      }
    }
  }
  r.complete = deliveries == m * n;
}

}  // namespace

FloodResult cfld_run(const Graph& g, const std::vector<FloodOrigin>& origins,
                     const FusionSpec& fusion, const ClockMode& mode, RngStream& rng,
                     double start_time) {
  validate(mode);
  validate_origins(g, origins, fusion);
  FloodResult r = empty_result(g, origins, fusion);
  if (is_continuous(mode)) {
    flood_continuous(g, origins, fusion, rng, start_time, r);
  } else {
    flood_synchronous(g, origins, fusion, r);
  }
  return r;
}

}  // namespace tokgossip
