#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tokgossip/protocols.hpp"

namespace tokgossip {

GossipMatrix GossipMatrix::uniform(const Graph& g) {
  std::vector<std::vector<double>> rows(g.size());
  for (NodeId i = 0; i < g.size(); ++i) {
    rows[i].assign(g.degree(i), 1.0 / static_cast<double>(g.degree(i)));
  }
  return from_rows(g, std::move(rows));
}

GossipMatrix GossipMatrix::from_rows(const Graph& g, std::vector<std::vector<double>> probs) {
  if (probs.size() != g.size()) throw UsageError("GossipMatrix: one row per node required");
  GossipMatrix m;
  m.graph_ = &g;
  m.cumulative_.resize(g.size());
  for (NodeId i = 0; i < g.size(); ++i) {
    auto& row = probs[i];
    if (row.size() != g.degree(i)) {
      throw UsageError("GossipMatrix: row " + std::to_string(i) + " must match the node degree");
    }
    double total = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw UsageError("GossipMatrix: negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw UsageError("GossipMatrix: row " + std::to_string(i) + " does not sum to 1");
    }
    auto& cum = m.cumulative_[i];
    cum.resize(row.size());
    std::partial_sum(row.begin(), row.end(), cum.begin());
    if (!cum.empty()) cum.back() = 1.0;
  }
  return m;
}

NodeId GossipMatrix::sample(NodeId i, RngStream& rng) const {
  const auto& cum = cumulative_[i];
  if (cum.empty()) throw SimulationError("GossipMatrix: isolated node");
  const double u = rng.uniform01();
  const auto k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
  return graph_->neighbors(i)[std::min(k, cum.size() - 1)];
}

double GossipMatrix::probability(NodeId i, NodeId j) const {
  const auto nb = graph_->neighbors(i);
  const auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) return 0.0;
  const auto k = static_cast<std::size_t>(it - nb.begin());
  return cumulative_[i][k] - (k == 0 ? 0.0 : cumulative_[i][k - 1]);
}

GossipState::GossipState(const Graph& g, std::vector<double> z0, std::uint64_t master_seed,
                         std::uint64_t trial)
    : graph_(&g), z_(std::move(z0)), rng_(master_seed, trial) {
  if (z_.size() != g.size()) throw UsageError("GossipState: one value per node required");
  if (z_.empty()) throw UsageError("GossipState: empty graph");
  mean_ = std::accumulate(z_.begin(), z_.end(), 0.0) / static_cast<double>(z_.size());
  double n2 = 0.0;
  for (double v : z_) n2 += v * v;
  z0_norm_ = std::sqrt(n2);
  for (double v : z_) err2_ += (v - mean_) * (v - mean_);
  sends_.assign(z_.size(), 0);
  receives_.assign(z_.size(), 0);
}

double GossipState::relative_error() const {
  if (z0_norm_ == 0.0) return 0.0;
  return std::sqrt(std::max(0.0, err2_)) / z0_norm_;
}

void GossipState::exchange(NodeId i, NodeId j, unsigned messages_per_exchange) {
  const double a = z_[i], b = z_[j];
  const double avg = 0.5 * (a + b);
  err2_ += 2 * (avg - mean_) * (avg - mean_) - (a - mean_) * (a - mean_) - (b - mean_) * (b - mean_);
  z_[i] = z_[j] = avg;
  messages_ += messages_per_exchange;
  ++sends_[i];
  ++receives_[j];
  if (messages_per_exchange >= 2) {
    ++sends_[j];
    ++receives_[i];
  }
  // The running squared error drifts slightly; refresh it exactly every n exchanges.
  if (++since_refresh_ >= z_.size()) {
    since_refresh_ = 0;
    err2_ = 0.0;
    for (double v : z_) err2_ += (v - mean_) * (v - mean_);
  }
}

void GossipState::step(const GossipMatrix& p, unsigned messages_per_exchange) {
  clock_.advance(next_firing(z_.size(), rng_));
  const auto i = static_cast<NodeId>(rng_.uniform_index(z_.size()));
  exchange(i, p.sample(i, rng_), messages_per_exchange);
}

void gossip_step(GossipState& state, const GossipMatrix& p) { state.step(p); }

std::vector<double> slowest_mode(const GossipMatrix& p) {
  const Graph& g = p.graph();
  const std::size_t n = g.size();
  if (n < 2) throw UsageError("slowest_mode: needs at least two nodes");
  if (n > 2500) throw UsageError("slowest_mode: dense eigensolve limited to 2500 nodes");
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nn, nn);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j : g.neighbors(i)) {
      if (j < i) continue;
      const double w = p.probability(i, j) + p.probability(j, i);
      lap(i, j) -= w;
      lap(j, i) -= w;
      lap(i, i) += w;
      lap(j, j) += w;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success) throw SimulationError("slowest_mode: eigensolver failed");
  // Ascending; column 0 is the constant vector for a connected graph.
  const Eigen::VectorXd v = eig.eigenvectors().col(1);
  std::vector<double> out(v.data(), v.data() + nn);
  // Fix the sign so the vector does not depend on solver conventions.
  const auto big = std::max_element(out.begin(), out.end(),
                                    [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (*big < 0) {
    for (double& x : out) x = -x;
  }
  return out;
}

Trace run(GossipState& state, const GossipMatrix& p, const GossipOptions& options) {
  if (!(options.eps > 0.0 && options.eps < 1.0)) throw UsageError("gossip: eps must lie in (0, 1)");
  if (options.messages_per_exchange < 1 || options.messages_per_exchange > 2) {
    throw UsageError("gossip: messages per exchange must be 1 or 2");
  }
  const auto& g = state.graph();
  Trace tr;
  tr.meta.protocol = "gossip";
  tr.meta.master_seed = state.rng().master_seed();
  tr.meta.trial = state.rng().stream_id();
  tr.meta.clock_mode = describe(ClockMode{ContinuousClock{}});
  tr.meta.graph_tag = g.topology().tag();
  tr.meta.n = g.size();
  tr.meta.fusion = "wavg";
  const auto n = static_cast<std::uint32_t>(g.size());
  tr.points.push_back({state.now(), n, state.messages()});
  if (options.record_error) tr.error_trajectory.emplace_back(state.messages(), state.relative_error());

  while (state.relative_error() >= options.eps) {
    if (state.messages() >= options.max_messages) break;
    state.step(p, options.messages_per_exchange);
    if (options.record_error) tr.error_trajectory.emplace_back(state.messages(), state.relative_error());
  }
  tr.complete = state.relative_error() < options.eps;
  tr.terminated = tr.complete;
  if (tr.complete) tr.messages_to_eps = state.messages();
  tr.tau = state.now();
  tr.total_messages = state.messages();
  if (tr.points.back().messages != tr.total_messages) tr.points.push_back({tr.tau, n, tr.total_messages});
  tr.sends = state.sends();
  tr.receives = state.receives();
  tr.final_count.assign(g.size(), 1);
  tr.sigma.assign(g.size() + 1, std::numeric_limits<double>::quiet_NaN());
  return tr;
}

}  // namespace tokgossip
