#include <algorithm>
#include <cmath>
#include <limits>

#include "linalg.hpp"
#include "tokgossip/analysis.hpp"

namespace tokgossip::analysis {

namespace {

detail::SparseMatrix lazy_walk_matrix(const Graph& g, double lazy) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(g.total_degree() + g.size());
  for (NodeId u = 0; u < g.size(); ++u) {
    if (lazy > 0.0) entries.emplace_back(u, u, lazy);
    const double p = (1.0 - lazy) / static_cast<double>(g.degree(u));
    for (NodeId w : g.neighbors(u)) entries.emplace_back(u, w, p);
  }
  detail::SparseMatrix m(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

void check_lazy(double lazy) {
  if (!(lazy >= 0.0 && lazy < 1.0)) throw UsageError("lazy probability must lie in [0, 1)");
}

}  // namespace

TransitionPowers::TransitionPowers(const Graph& g, double lazy_prob, std::size_t t_max)
    : n_(g.size()) {
  check_lazy(lazy_prob);
  if (n_ > kGaussianNodeLimit) throw AnalysisError("TransitionPowers: graph too large");
  const auto n = static_cast<Eigen::Index>(n_);
  const auto p = lazy_walk_matrix(g, lazy_prob);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  powers_.reserve(t_max + 1);
  for (std::size_t t = 0;; ++t) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    powers_.emplace_back(rm.data(), rm.data() + rm.size());
    if (t == t_max) break;
    m = m * p;
  }
}

GaussianBoundReport check_gaussian_bound(const Graph& g, std::size_t t_max, double lazy_prob) {
  check_lazy(lazy_prob);
  detail::require_connected(g, "check_gaussian_bound");
  if (g.size() > kGaussianNodeLimit) {
    throw UsageError("check_gaussian_bound: dense powers limited to " +
                     std::to_string(kGaussianNodeLimit) + " nodes");
  }
  if (t_max == 0) throw UsageError("check_gaussian_bound: t_max must be positive");
  const std::size_t n = g.size();
  std::vector<std::vector<std::uint32_t>> dist(n);
  std::uint32_t diam = 0;
  for (NodeId u = 0; u < n; ++u) {
    dist[u] = bfs_distances(g, u);
    diam = std::max(diam, *std::max_element(dist[u].begin(), dist[u].end()));
  }

  GaussianBoundReport r;
  r.t_max = t_max;
  r.lazy_prob = lazy_prob;
  // min_p[t][d]: smallest P_t(u,v) over pairs at distance d (1 <= d <= t).
  const std::size_t dmax = std::min<std::size_t>(diam, t_max);
  std::vector<std::vector<double>> min_p(t_max + 1, std::vector<double>(dmax + 1, 1.0));
  constexpr std::size_t kMaxViolations = 100;

  const auto p = lazy_walk_matrix(g, lazy_prob);
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(nn, nn);
  for (std::size_t t = 1; t <= t_max; ++t) {
    m = m * p;
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = 0; v < n; ++v) {
        const std::uint32_t d = dist[u][v];
        if (d < 1 || d > t) continue;
        ++r.checked_triples;
        const double x = m(u, v);
        min_p[t][d] = std::min(min_p[t][d], x);
        if (!(x > 0.0) && r.violations.size() < kMaxViolations) {
          r.violations.push_back({u, v, t, d});
        }
      }
    }
  }
  r.feasible = r.violations.empty();
  if (!r.feasible) return r;

  // For a fixed C4 the largest feasible C3 is min over (d, t) of
  // P_t * t * exp(d^2 / (C4 t)). Scan C4 geometrically.
  constexpr int kSteps = 96;
  double best_score = -1.0;
  for (int i = 0; i <= kSteps; ++i) {
    const double c4 = 0.05 * std::pow(10.0, 4.0 * i / kSteps);
    double c3 = std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t <= t_max; ++t) {
      for (std::size_t d = 1; d <= std::min(t, dmax); ++d) {
        const double td = static_cast<double>(t), dd = static_cast<double>(d);
        c3 = std::min(c3, min_p[t][d] * td * std::exp(dd * dd / (c4 * td)));
      }
    }
    r.frontier.push_back({c4, c3});
    // Reported pair: the strongest bound at the diffusive scale d = ceil(sqrt(t_max)).
    const double tm = static_cast<double>(t_max);
    const double ds = std::ceil(std::sqrt(tm));
    const double score = c3 / tm * std::exp(-ds * ds / (c4 * tm));
    if (score > best_score) {
      best_score = score;
      r.c3 = c3;
      r.c4 = c4;
    }
  }
  return r;
}

double collision_count(const TransitionPowers& powers, NodeId u, NodeId w, std::size_t t0) {
  if (t0 > powers.t_max()) throw UsageError("collision_count: T0 exceeds computed powers");
  if (u >= powers.size() || w >= powers.size()) throw UsageError("collision_count: node out of range");
  double total = 0.0;
  for (std::size_t t = 0; t <= t0; ++t) {
    for (NodeId v = 0; v < powers.size(); ++v) total += powers.at(t, u, v) * powers.at(t, w, v);
  }
  return total;
}

MeanEstimate simulate_collision_count(const Graph& g, NodeId u, NodeId w, std::size_t t0,
                                      double lazy_prob, std::size_t trials, std::uint64_t seed) {
  check_lazy(lazy_prob);
  detail::require_node(g, u, "simulate_collision_count");
  detail::require_node(g, w, "simulate_collision_count");
  if (trials == 0) throw UsageError("simulate_collision_count: trials must be positive");
  std::vector<double> samples(trials);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RngStream rng(seed, trial);
    NodeId x = u, y = w;
    std::size_t hits = x == y ? 1 : 0;
    for (std::size_t t = 1; t <= t0; ++t) {
      if (!(lazy_prob > 0.0 && rng.bernoulli(lazy_prob))) x = pick_uniform(g.neighbors(x), rng);
      if (!(lazy_prob > 0.0 && rng.bernoulli(lazy_prob))) y = pick_uniform(g.neighbors(y), rng);
      if (x == y) ++hits;
    }
    samples[trial] = static_cast<double>(hits);
  }
  return {stats::mean(samples), stats::standard_error(samples), trials};
}

RegularityReport regularity_report(const Graph& g, RegularityOptions options) {
  RegularityReport r;
  r.neighborhood = check_geometric_neighborhood(g, options.sampling);
  r.neighborhood_pass = r.neighborhood.pass;
  r.doubling = check_volume_doubling(g, options.sampling);
  if (ball(g, 0, options.iso_radius).size() >= 2) {
    r.isoperimetry = check_isoperimetry(g, 0, options.iso_radius);
  }
  if (g.size() <= kGaussianNodeLimit) {
    r.gaussian = check_gaussian_bound(g, options.t_max, options.lazy_prob);
    r.gaussian_pass = r.gaussian->feasible;
  }
  return r;
}

}  // namespace tokgossip::analysis
