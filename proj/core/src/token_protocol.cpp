#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tokgossip/protocols.hpp"

namespace tokgossip {

std::string_view to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::Srw:
      return "srw";
    case ProtocolKind::Crw:
      return "crw";
    case ProtocolKind::Gossip:
      return "gossip";
    case ProtocolKind::TwoPhase:
      return "two_phase";
    case ProtocolKind::HybridK:
      return "hybrid_k";
  }
  return "crw";
}

ProtocolKind parse_protocol_kind(std::string_view name) {
  if (name == "srw") return ProtocolKind::Srw;
  if (name == "crw") return ProtocolKind::Crw;
  if (name == "gossip" || name == "gossip_ave") return ProtocolKind::Gossip;
  if (name == "two_phase" || name == "two-phase") return ProtocolKind::TwoPhase;
  if (name == "hybrid_k" || name == "hybrid") return ProtocolKind::HybridK;
  throw UsageError("unknown protocol '" + std::string(name) + "'");
}

SimState SimState::init(ProtocolKind kind, const Graph& g, std::vector<FusionValue> x,
                        FusionSpec fusion, ProtocolParams params, std::uint64_t master_seed,
                        std::uint64_t trial) {
  const std::size_t n = g.size();
  if (n == 0) throw UsageError("init: empty graph");
  if (x.size() != n) {
    throw UsageError("init: " + std::to_string(x.size()) + " initial values for " +
                     std::to_string(n) + " nodes");
  }
  for (const auto& v : x) {
    if (kind_of(v) != fusion.kind()) throw UsageError("init: value kind does not match fusion");
  }
  validate(params.mode);
  if (kind == ProtocolKind::Gossip) {
    throw UsageError("init: gossip averaging runs on GossipState");
  }

  SimState s(g, fusion, RngStream(master_seed, trial));
  s.kind_ = kind;
  s.params_ = params;
  s.x_ = std::move(x);
  s.nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.nodes_[i] = {s.x_[i], 1, false};
  s.active_pos_.assign(n, -1);
  s.sends_.assign(n, 0);
  s.receives_.assign(n, 0);

  switch (kind) {
    case ProtocolKind::Srw: {
      NodeId origin = 0;
      if (params.srw_origin) {
        origin = *params.srw_origin;
        if (origin >= n) throw UsageError("init: SRW origin out of range");
      } else {
        origin = static_cast<NodeId>(s.rng_.uniform_index(n));
      }
      s.activate(origin);
      break;
    }
    case ProtocolKind::Crw:
    case ProtocolKind::TwoPhase:
      for (NodeId v = 0; v < n; ++v) s.activate(v);
      break;
    case ProtocolKind::HybridK: {
      if (fusion.kind() != FusionKind::WeightedAvg) {
        throw UsageError("init: hybrid-k requires weighted-average fusion");
      }
      if (!is_continuous(params.mode)) throw UsageError("init: hybrid-k runs in continuous time");
      if (params.hybrid_k < 1 || params.hybrid_k > n) {
        throw UsageError("init: hybrid k must lie in [1, n]");
      }
      std::vector<NodeId> order(n);
      std::iota(order.begin(), order.end(), NodeId{0});
      for (std::size_t i = 0; i < params.hybrid_k; ++i) {
        const auto j = i + static_cast<std::size_t>(s.rng_.uniform_index(n - i));
        std::swap(order[i], order[j]);
        s.activate(order[i]);
      }
      break;
    }
    case ProtocolKind::Gossip:
      break;
  }
  if (n == 1) s.holder_ = 0;
  return s;
}

void SimState::activate(NodeId v) {
  if (active_pos_[v] >= 0) return;
  active_pos_[v] = static_cast<std::int64_t>(active_.size());
  active_.push_back(v);
  nodes_[v].active = true;
}

void SimState::deactivate(NodeId v) {
  const std::int64_t p = active_pos_[v];
  if (p < 0) return;
  const NodeId last = active_.back();
  active_[static_cast<std::size_t>(p)] = last;
  active_pos_[last] = p;
  active_.pop_back();
  active_pos_[v] = -1;
  nodes_[v].active = false;
}

void SimState::handle_send(NodeId i) {
  if (i >= nodes_.size() || !nodes_[i].active) {
    throw SimulationError("handle_send: node " + std::to_string(i) + " is not active");
  }
  send_to(i, pick_uniform(graph_->neighbors(i), rng_));
}

void SimState::send_to(NodeId i, NodeId j) {
  if (i >= nodes_.size() || !nodes_[i].active) {
    throw SimulationError("send: node " + std::to_string(i) + " is not active");
  }
  if (j >= nodes_.size() || !graph_->has_edge(i, j)) {
    throw SimulationError("send: " + std::to_string(j) + " is not a neighbor of " + std::to_string(i));
  }
  if (kind_ == ProtocolKind::HybridK && nodes_[j].active) {
    relax_pair(i, j);
    return;
  }
  const TokenPayload payload{nodes_[i].value, nodes_[i].count};
  nodes_[i].value = fusion_.identity();
  nodes_[i].count = 0;
  deactivate(i);
  if (holder_ == i) holder_.reset();
  ++messages_;
  ++sends_[i];
  handle_receive(j, payload);
}

void SimState::handle_receive(NodeId j, const TokenPayload& payload) {
  NodeState& node = nodes_[j];
  const TokenPayload merged = fuse_payload(fusion_, {node.value, node.count}, payload);
  node.value = merged.value;
  node.count = merged.count;
  ++receives_[j];
  activate(j);
  if (node.count == nodes_.size()) holder_ = j;
}

// Both tokens relax to the pair's weighted mean and split the weight evenly,
// so the total weight and the weighted sum are conserved.
void SimState::relax_pair(NodeId i, NodeId j) {
  const auto merged = std::get<AvgValue>(fusion_.fuse(nodes_[i].value, nodes_[j].value));
  const AvgValue half{merged.estimate, merged.weight / 2.0};
  nodes_[i].value = half;
  nodes_[j].value = half;
  messages_ += 2;
  ++sends_[i];
  ++sends_[j];
  ++receives_[i];
  ++receives_[j];
}

std::optional<NodeId> SimState::detect_termination() const { return holder_; }

void SimState::synchronous_round() {
  if (is_continuous(params_.mode)) {
    throw SimulationError("synchronous_round called in continuous mode");
  }
  const double lazy = lazy_prob(params_.mode);
  struct Move {
    NodeId to;
    TokenPayload payload;
  };
  std::vector<Move> moves;
  moves.reserve(active_.size());
  const std::vector<NodeId> tokens = active_;
  for (NodeId i : tokens) {
    if (lazy > 0.0 && rng_.bernoulli(lazy)) continue;
    moves.push_back({pick_uniform(graph_->neighbors(i), rng_), {nodes_[i].value, nodes_[i].count}});
    nodes_[i].value = fusion_.identity();
    nodes_[i].count = 0;
    deactivate(i);
    if (holder_ == i) holder_.reset();
    ++messages_;
    ++sends_[i];
  }
  // Deliveries after every departure, so crossing tokens never meet.
  for (const Move& m : moves) handle_receive(m.to, m.payload);
  clock_.advance(1.0);
}

bool SimState::continuous_event(double deadline) {
  if (!is_continuous(params_.mode)) throw SimulationError("continuous_event called in discrete mode");
  const double dt = next_firing(active_.size(), rng_);
  if (clock_.now() + dt > deadline) return false;
  clock_.advance(dt);
  const auto i = active_[static_cast<std::size_t>(rng_.uniform_index(active_.size()))];
  handle_send(i);
  return true;
}

namespace {

TraceMetadata metadata_for(const SimState& s) {
  TraceMetadata m;
  m.protocol = std::string(to_string(s.kind()));
  m.clock_mode = describe(s.params().mode);
  m.lazy_prob = lazy_prob(s.params().mode);
  m.graph_tag = s.graph().topology().tag();
  m.n = s.graph().size();
  m.fusion = std::string(to_string(s.fusion().kind()));
  return m;
}

}  // namespace

Trace run(SimState& state, const StopCondition& stop, const RunOptions& options) {
  Trace tr;
  tr.meta = metadata_for(state);
  tr.meta.master_seed = state.rng().master_seed();
  tr.meta.trial = state.rng().stream_id();
  const std::size_t n = state.graph().size();
  const bool continuous = is_continuous(state.params().mode);
  const auto* until = std::get_if<UntilTime>(&stop);
  const bool stop_on_termination = until == nullptr || until->stop_on_termination;
  const double deadline = until ? until->t : options.max_time;
  if (until && !(until->t >= state.now())) throw UsageError("run: stop time is in the past");

  tr.sigma.assign(n + 1, std::numeric_limits<double>::quiet_NaN());
  auto active_count = static_cast<std::uint32_t>(state.active().size());
  for (std::size_t k = active_count; k <= n; ++k) tr.sigma[k] = state.now();
  tr.points.push_back({state.now(), active_count, state.messages()});

  std::uint64_t events = 0;
  bool hit_limit = false;
  for (;;) {
    if (stop_on_termination && state.detect_termination()) {
      tr.terminated = true;
      break;
    }
    if (events >= options.max_events) {
      hit_limit = true;
      break;
    }
    bool fired = false;
    if (continuous) {
      fired = state.continuous_event(deadline);
    } else if (state.now() + 1.0 <= deadline) {
      state.synchronous_round();
      fired = true;
    }
    if (!fired) {
      if (until) {
        state.clock().set(until->t);
      } else {
        hit_limit = true;
      }
      break;
    }
    ++events;
    const auto now_active = static_cast<std::uint32_t>(state.active().size());
    for (std::size_t k = now_active; k < active_count; ++k) tr.sigma[k] = state.now();
    if (options.record_every_event || now_active != active_count) {
      tr.points.push_back({state.now(), now_active, state.messages()});
    }
    active_count = now_active;
    if (options.observer) options.observer(state);
  }
  if (!tr.terminated && state.detect_termination()) tr.terminated = true;
  tr.complete = !hit_limit;
  tr.tau = state.now();
  tr.total_messages = state.messages();
  if (tr.points.back().t != tr.tau || tr.points.back().messages != tr.total_messages) {
    tr.points.push_back({tr.tau, active_count, tr.total_messages});
  }
  tr.sends = state.sends();
  tr.receives = state.receives();
  tr.final_count.resize(n);
  for (std::size_t i = 0; i < n; ++i) tr.final_count[i] = state.nodes()[i].count;
  if (const auto h = state.detect_termination()) {
    tr.holders = {*h};
    tr.final_payload = TokenPayload{state.nodes()[*h].value, state.nodes()[*h].count};
  }
  return tr;
}

}  // namespace tokgossip
