#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "tokgossip/engine.hpp"
#include "tokgossip/fusion.hpp"
#include "tokgossip/graph.hpp"

namespace tokgossip {

enum class ProtocolKind { Srw, Crw, Gossip, TwoPhase, HybridK };

std::string_view to_string(ProtocolKind k);
ProtocolKind parse_protocol_kind(std::string_view name);

struct NodeState {
  FusionValue value;
  std::uint64_t count = 0;
  bool active = false;
};

struct ProtocolParams {
  ClockMode mode = ContinuousClock{};
  std::optional<NodeId> srw_origin;  ///< default: uniform random node
  std::size_t hybrid_k = 2;
};

struct TracePoint {
  double t = 0;
  std::uint32_t active = 0;
  std::uint64_t messages = 0;
};

struct TraceMetadata {
  std::string protocol;
  std::string rng_algorithm{RngStream::kAlgorithm};
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;
  std::string clock_mode;
  double lazy_prob = 0;
  std::string graph_tag;
  std::size_t n = 0;
  std::string fusion;
};

/// Everything measured in one run.
struct Trace {
  TraceMetadata meta;
  bool complete = false;    ///< stop condition met without hitting a safety limit
  bool terminated = false;  ///< a node certified count = n (or consensus for floods)
  double tau = 0;           ///< stop time
  std::uint64_t total_messages = 0;

  /// Token-count step function; always includes t = 0 and the final state.
  std::vector<TracePoint> points;
  /// sigma[k]: first time at most k tokens are active (NaN if never).
  std::vector<double> sigma;

  std::vector<std::uint64_t> sends;
  std::vector<std::uint64_t> receives;
  std::vector<std::uint64_t> final_count;

  std::optional<TokenPayload> final_payload;
  std::vector<NodeId> holders;

  // Two-phase runs.
  double switch_time = 0;
  std::uint64_t phase1_messages = 0;
  std::uint64_t phase2_messages = 0;
  double flood_duration = 0;
  bool consensus = false;

  // Gossip runs: (messages so far, ||z - mean|| / ||z(0)||).
  std::vector<std::pair<std::uint64_t, double>> error_trajectory;
  std::optional<std::uint64_t> messages_to_eps;

  // Hybrid runs: |y_i - true mean| at nodes holding a token, NaN elsewhere.
  std::vector<double> node_error;
  double max_error = 0;
};

/// Receives the state after every event (continuous) or round (discrete).
class SimState;
using EventObserver = std::function<void(const SimState&)>;

struct RunOptions {
  double max_time = std::numeric_limits<double>::infinity();
  std::uint64_t max_events = std::numeric_limits<std::uint64_t>::max();
  bool record_every_event = false;
  EventObserver observer;
};

struct UntilTermination {};
struct UntilTime {
  double t = 0;
  bool stop_on_termination = true;
};
using StopCondition = std::variant<UntilTermination, UntilTime>;

/// Node automata of the token protocols (SRW, CRW and the fixed-k hybrid)
/// plus the global clock and random stream. The graph must outlive the state.
class SimState {
 public:
  static SimState init(ProtocolKind kind, const Graph& g, std::vector<FusionValue> x,
                       FusionSpec fusion, ProtocolParams params, std::uint64_t master_seed,
                       std::uint64_t trial = 0);

  ProtocolKind kind() const noexcept { return kind_; }
  const Graph& graph() const noexcept { return *graph_; }
  const FusionSpec& fusion() const noexcept { return fusion_; }
  const ProtocolParams& params() const noexcept { return params_; }
  const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
  const std::vector<FusionValue>& initial_values() const noexcept { return x_; }
  const std::vector<NodeId>& active() const noexcept { return active_; }
  double now() const noexcept { return clock_.now(); }
  std::uint64_t messages() const noexcept { return messages_; }
  const std::vector<std::uint64_t>& sends() const noexcept { return sends_; }
  const std::vector<std::uint64_t>& receives() const noexcept { return receives_; }
  RngStream& rng() noexcept { return rng_; }
  SimClock& clock() noexcept { return clock_; }

  /// Active node i sends its token to a uniform neighbor.
  void handle_send(NodeId i);
  /// Same with an explicit recipient (must be a neighbor).
  void send_to(NodeId i, NodeId j);
  /// Figure-style receive: fuse, add counts, become active.
  void handle_receive(NodeId j, const TokenPayload& payload);
  /// The unique node with count = n, if any.
  std::optional<NodeId> detect_termination() const;

  /// One synchronous round (discrete mode only).
  void synchronous_round();

  /// One continuous-time event: advance the clock by Exp(active) and fire a
  /// uniformly chosen active token. Returns false, without changing the
  /// state, if the next event would occur after `deadline`.
  bool continuous_event(double deadline = std::numeric_limits<double>::infinity());

 private:
  SimState(const Graph& g, FusionSpec fusion, RngStream rng) : graph_(&g), fusion_(fusion), rng_(rng) {}
  void activate(NodeId v);
  void deactivate(NodeId v);
  void relax_pair(NodeId i, NodeId j);

  std::optional<NodeId> holder_;

  ProtocolKind kind_ = ProtocolKind::Crw;
  const Graph* graph_;
  FusionSpec fusion_;
  ProtocolParams params_;
  std::vector<FusionValue> x_;
  std::vector<NodeState> nodes_;
  std::vector<NodeId> active_;
  std::vector<std::int64_t> active_pos_;
  SimClock clock_;
  RngStream rng_;
  std::uint64_t messages_ = 0;
  std::vector<std::uint64_t> sends_;
  std::vector<std::uint64_t> receives_;
};

/// Event loop for SRW, CRW and hybrid states.
Trace run(SimState& state, const StopCondition& stop, const RunOptions& options = {});

// ---- randomized gossip averaging -------------------------------------------

/// Admissible stochastic matrix stored row-wise on the adjacency structure.
class GossipMatrix {
 public:
  /// P_ij = 1 / deg(i).
  static GossipMatrix uniform(const Graph& g);
  /// Explicit rows: probs[i][k] is the probability of the k-th neighbor of i.
  static GossipMatrix from_rows(const Graph& g, std::vector<std::vector<double>> probs);

  NodeId sample(NodeId i, RngStream& rng) const;
  double probability(NodeId i, NodeId j) const;
  const Graph& graph() const noexcept { return *graph_; }

 private:
  const Graph* graph_ = nullptr;
  std::vector<std::vector<double>> cumulative_;
};

struct GossipOptions {
  double eps = 0.01;
  std::uint64_t max_messages = std::numeric_limits<std::uint64_t>::max();
  unsigned messages_per_exchange = 2;
  bool record_error = false;
};

class GossipState {
 public:
  GossipState(const Graph& g, std::vector<double> z0, std::uint64_t master_seed,
              std::uint64_t trial = 0);

  const std::vector<double>& z() const noexcept { return z_; }
  double mean() const noexcept { return mean_; }
  double now() const noexcept { return clock_.now(); }
  std::uint64_t messages() const noexcept { return messages_; }
  /// ||z - mean 1||_2 / ||z(0)||_2 (0 when z(0) = 0).
  double relative_error() const;
  RngStream& rng() noexcept { return rng_; }
  const Graph& graph() const noexcept { return *graph_; }
  const std::vector<std::uint64_t>& sends() const noexcept { return sends_; }
  const std::vector<std::uint64_t>& receives() const noexcept { return receives_; }

  /// One exchange: a uniform clock owner i draws j from P and both average.
  void step(const GossipMatrix& p, unsigned messages_per_exchange = 2);
  /// Deterministic exchange between neighbors i and j.
  void exchange(NodeId i, NodeId j, unsigned messages_per_exchange = 2);

 private:
  const Graph* graph_;
  std::vector<double> z_;
  double mean_ = 0;
  double z0_norm_ = 0;
  double err2_ = 0;
  std::uint64_t since_refresh_ = 0;
  SimClock clock_;
  RngStream rng_;
  std::uint64_t messages_ = 0;
  std::vector<std::uint64_t> sends_;
  std::vector<std::uint64_t> receives_;
};

void gossip_step(GossipState& state, const GossipMatrix& p);

/// Unit, mean-zero eigenvector of E[W] = I - L_w / (2n), w_ij = P_ij + P_ji,
/// for its largest eigenvalue below 1. Pairwise averaging has W^T W = W, so
/// this start vector decays slowest in mean square: it realizes the sup
/// over z(0) in K(eps, P). Dense; n <= 2500.
std::vector<double> slowest_mode(const GossipMatrix& p);

/// Runs until the relative error drops below eps (or max_messages).
Trace run(GossipState& state, const GossipMatrix& p, const GossipOptions& options);

// ---- controlled flooding -------------------------------------------------

struct FloodOrigin {
  NodeId node = 0;
  TokenPayload payload;
};

struct FloodResult {
  std::uint64_t transmissions = 0;
  std::vector<std::uint64_t> per_origin_transmissions;
  std::vector<std::uint64_t> sends;
  std::vector<std::uint64_t> receives;
  std::vector<TokenPayload> node_payload;  ///< fused combination held by each node
  double completion_time = 0;              ///< last first receipt (rounds or time)
  double duration = 0;                     ///< last transmission
  bool complete = false;                   ///< every node received every origin
};

/// Floods every origin's payload. Synchronous mode forwards in the round
/// after the first receipt, excluding every sender of that receipt; in
/// continuous mode a node forwards at its next unit-rate tick. Continuous
/// times are offset by `start_time`.
FloodResult cfld_run(const Graph& g, const std::vector<FloodOrigin>& origins,
                     const FusionSpec& fusion, const ClockMode& mode, RngStream& rng,
                     double start_time = 0.0);

// ---- two-phase CRW -> CFLD -----------------------------------------------

struct ExplicitTime {
  double t = 0;
};
struct TargetGamma {
  double gamma = 2;
  std::size_t pilot_trials = 200;
  std::uint64_t pilot_seed = 0x7a4e7;
};
using SwitchSpec = std::variant<ExplicitTime, TargetGamma>;

/// Switch time: the explicit value, or the estimated first time the mean
/// token count drops to gamma (CRW pilot runs, geometric grid).
double resolve_switch_time(const Graph& g, const SwitchSpec& spec, const ClockMode& mode);

Trace two_phase_run(const Graph& g, std::vector<FusionValue> x, const FusionSpec& fusion,
                    const SwitchSpec& spec, const ClockMode& mode, std::uint64_t master_seed,
                    std::uint64_t trial = 0);

// ---- fixed-k hybrid -------------------------------------------------------

Trace hybrid_k_run(const Graph& g, std::vector<FusionValue> x, std::size_t k, double horizon,
                   std::uint64_t master_seed, std::uint64_t trial = 0,
                   const RunOptions& options = {});

// ---- trace files ----------------------------------------------------------

/// `t,active_count,total_messages`
void write_trace_csv(std::ostream& out, const Trace& trace);
/// `node,sends,receives,final_count`
void write_node_csv(std::ostream& out, const Trace& trace);
/// Metadata and scalar results.
void write_trace_json(std::ostream& out, const Trace& trace);
/// Writes <dir>/<stem>.csv, <stem>.nodes.csv and <stem>.json.
void save_trace(const std::string& dir, const std::string& stem, const Trace& trace);

}  // namespace tokgossip
