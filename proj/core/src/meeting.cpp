#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "linalg.hpp"
#include "tokgossip/analysis.hpp"

namespace tokgossip::analysis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Product chain on ordered pairs x != y. Multiplying the mean-time equation
// of state (x,y) by 2 d_x d_y gives a symmetric, diagonally dominant system:
//   2 d_x d_y m(x,y) - d_y sum_{x'~x} m(x',y) - d_x sum_{y'~y} m(x,y') = d_x d_y
void exact_meeting(const Graph& g, MeetingTable& out) {
  const std::size_t n = g.size();
  std::vector<long> index(n * n, -1);
  long states = 0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      if (x != y) index[x * n + y] = states++;
    }
  }
  std::vector<Eigen::Triplet<double>> entries;
  Eigen::VectorXd rhs(states);
  for (NodeId x = 0; x < n; ++x) {
    const double dx = static_cast<double>(g.degree(x));
    for (NodeId y = 0; y < n; ++y) {
      const long row = index[x * n + y];
      if (row < 0) continue;
      const double dy = static_cast<double>(g.degree(y));
      entries.emplace_back(row, row, 2 * dx * dy);
      rhs(row) = dx * dy;
      for (NodeId x2 : g.neighbors(x)) {
        if (const long c = index[x2 * n + y]; c >= 0) entries.emplace_back(row, c, -dy);
      }
      for (NodeId y2 : g.neighbors(y)) {
        if (const long c = index[x * n + y2]; c >= 0) entries.emplace_back(row, c, -dx);
      }
    }
  }
  detail::SparseMatrix a(states, states);
  a.setFromTriplets(entries.begin(), entries.end());
  const Eigen::VectorXd m = detail::solve_spd(a, rhs, std::numeric_limits<std::size_t>::max(),
                                              1e-9, "mean_meeting_times");
  out.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n * n; ++i) {
    if (index[i] >= 0) out.values[i] = m(index[i]);
  }
  out.relative_residual = detail::relative_residual(a, m, rhs);
}

void monte_carlo_meeting(const Graph& g, MeetingTable& out, const MeetingOptions& options) {
  const std::size_t n = g.size();
  out.values.assign(n * n, 0.0);
  out.exact = false;
  std::uint64_t pair = 0;
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId w = v + 1; w < n; ++w, ++pair) {
      RngStream rng(options.seed, pair);
      double acc = 0.0;
      for (std::size_t t = 0; t < options.mc_trials; ++t) {
        acc += sample_meeting_time(g, v, w, kInf, rng);
      }
      const double mean = acc / static_cast<double>(std::max<std::size_t>(1, options.mc_trials));
      out.values[v * n + w] = mean;
      out.values[w * n + v] = mean;
    }
  }
}

struct PairList {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  bool subsampled = false;
};

PairList select_pairs(const Graph& g, std::span<const NodeId> set, const AlphaOptions& options) {
  std::vector<NodeId> nodes(set.begin(), set.end());
  for (NodeId v : nodes) detail::require_node(g, v, "estimate_alpha");
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (nodes.size() < 2) throw UsageError("estimate_alpha: set needs at least two distinct nodes");
  PairList out;
  const std::size_t k = nodes.size();
  const std::size_t total = k * (k - 1) / 2;
  if (total <= options.pair_limit) {
    out.pairs.reserve(total);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) out.pairs.emplace_back(nodes[i], nodes[j]);
    }
    return out;
  }
  out.subsampled = true;
  RngStream rng(options.seed, 0x9a125);
  out.pairs.reserve(options.pair_limit);
  while (out.pairs.size() < options.pair_limit) {
    const auto i = rng.uniform_index(k), j = rng.uniform_index(k);
    if (i != j) out.pairs.emplace_back(nodes[std::min(i, j)], nodes[std::max(i, j)]);
  }
  return out;
}

}  // namespace

MeetingTable mean_meeting_times(const Graph& g, MeetingOptions options) {
  detail::require_connected(g, "mean_meeting_times");
  MeetingTable out;
  out.n = g.size();
  if (out.n == 1) {
    out.values.assign(1, 0.0);
    return out;
  }
  if (out.n * out.n <= options.state_limit) {
    exact_meeting(g, out);
  } else if (options.allow_monte_carlo) {
    monte_carlo_meeting(g, out, options);
  } else {
    throw AnalysisError("mean_meeting_times: " + std::to_string(out.n * out.n) +
                        " product states exceed the exact limit and Monte Carlo is disabled");
  }
  return out;
}

double worst_case_meeting(const MeetingTable& table) { return table.max(); }

double sample_meeting_time(const Graph& g, NodeId v, NodeId w, double horizon, RngStream& rng) {
  if (v == w) return 0.0;
  double t = 0.0;
  for (;;) {
    t += rng.exponential(2.0);
    if (t > horizon) return kInf;
    NodeId& mover = rng.bernoulli(0.5) ? v : w;
    mover = pick_uniform(g.neighbors(mover), rng);
    if (v == w) return t;
  }
}

std::vector<MeetingEstimate> estimate_alpha_curve(const Graph& g, std::span<const NodeId> set,
                                                  std::span<const double> s_values,
                                                  AlphaOptions options) {
  if (s_values.empty()) return {};
  for (double s : s_values) {
    if (!(s >= 0.0)) throw UsageError("estimate_alpha: s must be nonnegative");
  }
  if (options.trials == 0) throw UsageError("estimate_alpha: trials must be positive");
  const PairList pl = select_pairs(g, set, options);
  const double horizon = *std::max_element(s_values.begin(), s_values.end());

  std::vector<MeetingEstimate> out(s_values.size());
  std::vector<std::size_t> best(s_values.size(), std::numeric_limits<std::size_t>::max());
  std::vector<double> times(options.trials);
  for (std::size_t p = 0; p < pl.pairs.size(); ++p) {
    const auto [v, w] = pl.pairs[p];
    RngStream rng(options.seed, p);
    for (auto& t : times) t = sample_meeting_time(g, v, w, horizon, rng);
    std::sort(times.begin(), times.end());
    for (std::size_t i = 0; i < s_values.size(); ++i) {
      const auto hits = static_cast<std::size_t>(
          std::upper_bound(times.begin(), times.end(), s_values[i]) - times.begin());
      if (hits < best[i]) {
        best[i] = hits;
        out[i].argmin_v = v;
        out[i].argmin_w = w;
      }
    }
  }
  for (std::size_t i = 0; i < s_values.size(); ++i) {
    auto& e = out[i];
    e.s = s_values[i];
    e.trials = options.trials;
    e.pairs_evaluated = pl.pairs.size();
    e.subsampled = pl.subsampled;
    e.alpha = static_cast<double>(best[i]) / static_cast<double>(options.trials);
    e.interval = stats::wilson_interval(best[i], options.trials);
    e.half_width = 0.5 * (e.interval.high - e.interval.low);
  }
  return out;
}

MeetingEstimate estimate_alpha(const Graph& g, std::span<const NodeId> set, double s,
                               AlphaOptions options) {
  const double one[] = {s};
  return estimate_alpha_curve(g, set, one, options).front();
}

MeanEstimate estimate_cover_time(const Graph& g, NodeId start, std::size_t trials,
                                 const ClockMode& mode, std::uint64_t seed) {
  detail::require_node(g, start, "estimate_cover_time");
  detail::require_connected(g, "estimate_cover_time");
  validate(mode);
  if (trials == 0) throw UsageError("estimate_cover_time: trials must be positive");
  const std::size_t n = g.size();
  const bool continuous = is_continuous(mode);
  const double lazy = lazy_prob(mode);
  std::vector<double> samples(trials);
  std::vector<std::uint32_t> seen(n, 0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RngStream rng(seed, trial);
    const auto stamp = static_cast<std::uint32_t>(trial + 1);
    NodeId at = start;
    seen[at] = stamp;
    std::size_t visited = 1;
    double t = 0.0;
    while (visited < n) {
      if (continuous) {
        t += rng.exponential(1.0);
      } else {
        t += 1.0;
        if (lazy > 0.0 && rng.bernoulli(lazy)) continue;
      }
      at = pick_uniform(g.neighbors(at), rng);
      if (seen[at] != stamp) {
        seen[at] = stamp;
        ++visited;
      }
    }
    samples[trial] = t;
  }
  return {stats::mean(samples), stats::standard_error(samples), trials};
}

}  // namespace tokgossip::analysis
