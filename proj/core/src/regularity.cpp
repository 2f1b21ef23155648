#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "tokgossip/graph.hpp"

namespace tokgossip {

namespace {

// Nodes to use as ball centers, plus the radius range.
struct CenterPlan {
  std::vector<NodeId> centers;
  std::uint32_t diam = 0;
  bool sampled = false;
};

CenterPlan plan_centers(const Graph& g, const RegularitySampling& sampling) {
  require(g.size() >= 1, "empty graph");
  if (!is_connected(g)) throw AnalysisError("regularity check requires a connected graph");
  CenterPlan plan;
  if (g.size() <= sampling.exhaustive_limit) {
    plan.centers.resize(g.size());
    std::iota(plan.centers.begin(), plan.centers.end(), NodeId{0});
    plan.diam = diameter(g).value;
  } else {
    plan.sampled = true;
    RngStream rng(sampling.seed, 0);
    for (std::size_t i = 0; i < sampling.sample_nodes; ++i)
      plan.centers.push_back(static_cast<NodeId>(rng.uniform_index(g.size())));
    plan.diam = diameter(g).value;
  }
  return plan;
}

// ball_size[R] = |B(u,R)| and ball_vol[R] = Vol(u,R) for R = 0..max_r.
void ball_profile(const Graph& g, NodeId u, std::size_t max_r, std::vector<std::uint64_t>& size,
                  std::vector<std::uint64_t>& vol) {
  auto dist = bfs_distances(g, u);
  size.assign(max_r + 1, 0);
  vol.assign(max_r + 1, 0);
  for (std::size_t v = 0; v < g.size(); ++v) {
    const std::size_t d = dist[v];
    if (d + 1 <= max_r) {
      size[d + 1] += 1;
      vol[d + 1] += g.degree(static_cast<NodeId>(v));
    }
  }
  for (std::size_t r = 1; r <= max_r; ++r) {
    size[r] += size[r - 1];
    vol[r] += vol[r - 1];
  }
}

}  // namespace

GeometricNeighborhoodReport check_geometric_neighborhood(const Graph& g,
                                                         RegularitySampling sampling) {
  auto plan = plan_centers(g, sampling);
  GeometricNeighborhoodReport rep;
  rep.sampled = plan.sampled;
  rep.c0_best = std::numeric_limits<double>::infinity();
  rep.c1_best = 0.0;
  if (plan.diam == 0) {
    // A single node: every admissible radius range is empty.
    rep.c0_best = 1.0;
    rep.c0_radius = 1;
    rep.pass = true;
    return rep;
  }
  std::vector<std::uint64_t> size, vol;
  const std::size_t diam = plan.diam;
  for (NodeId u : plan.centers) {
    ball_profile(g, u, 2 * diam, size, vol);
    for (std::size_t r = 1; r <= diam; ++r) {
      const double c0 = static_cast<double>(size[r]) / static_cast<double>(r * r);
      if (c0 < rep.c0_best) {
        rep.c0_best = c0;
        rep.c0_node = u;
        rep.c0_radius = r;
      }
      for (std::size_t delta = 1; delta <= r; ++delta) {
        const double annulus = static_cast<double>(size[r + delta] - size[r]);
        const double c1 = annulus / static_cast<double>(delta * r);
        if (c1 > rep.c1_best) {
          rep.c1_best = c1;
          rep.c1_node = u;
          rep.c1_radius = r;
          rep.c1_delta = delta;
        }
      }
    }
  }
  rep.pass = std::isfinite(rep.c0_best) && std::isfinite(rep.c1_best) && rep.c0_best > 0.0;
  return rep;
}

VolumeDoublingReport check_volume_doubling(const Graph& g, RegularitySampling sampling) {
  auto plan = plan_centers(g, sampling);
  VolumeDoublingReport rep;
  rep.sampled = plan.sampled;
  std::vector<std::uint64_t> size, vol;
  const std::size_t diam = std::max<std::size_t>(plan.diam, 1);
  for (NodeId u : plan.centers) {
    ball_profile(g, u, 2 * diam, size, vol);
    for (std::size_t r = 1; r <= diam; ++r) {
      if (vol[r] == 0) continue;  // isolated single node
      const double ratio = static_cast<double>(vol[2 * r]) / static_cast<double>(vol[r]);
      if (ratio > rep.c5_best) {
        rep.c5_best = ratio;
        rep.node = u;
        rep.radius = r;
      }
    }
  }
  return rep;
}

IsoperimetryCertificate isoperimetry_certificate(const Graph& sub, std::size_t radius) {
  const std::size_t k = sub.size();
  if (k == 0) throw AnalysisError("isoperimetry: empty ball");
  if (k == 1) throw AnalysisError("isoperimetry: single-node ball has no 2-partition");
  IsoperimetryCertificate cert;
  cert.ball_size = k;
  const double scale = static_cast<double>(radius);
  if (!is_connected(sub)) {
    cert.connected = false;
    cert.exact = true;
    cert.value = 0.0;
    cert.label = "disconnected induced subgraph";
    return cert;
  }
  const auto edges = sub.edges();
  if (k <= kExactIsoperimetryLimit) {
    // S never contains the last node, so each unordered 2-partition is seen once.
    double best = std::numeric_limits<double>::infinity();
    const std::uint32_t limit = 1u << (k - 1);
    std::vector<std::uint64_t> deg(k);
    std::uint64_t total = 0;
    for (std::size_t v = 0; v < k; ++v) {
      deg[v] = sub.degree(static_cast<NodeId>(v));
      total += deg[v];
    }
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      std::uint64_t vol_s = 0;
      for (std::size_t v = 0; v + 1 < k; ++v)
        if (mask >> v & 1u) vol_s += deg[v];
      std::uint64_t cut = 0;
      for (const Edge& e : edges) {
        const bool a = e.u + 1 < k && (mask >> e.u & 1u);
        const bool b = e.v + 1 < k && (mask >> e.v & 1u);
        cut += (a != b);
      }
      const auto denom = std::min(vol_s, total - vol_s);
      best = std::min(best, static_cast<double>(cut) / static_cast<double>(denom));
    }
    cert.exact = true;
    cert.value = scale * best;
    cert.label = "exact minimum over all 2-partitions";
    return cert;
  }

  // Fiedler sweep of the normalized Laplacian.
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                  static_cast<Eigen::Index>(k));
  Eigen::VectorXd inv_sqrt_deg(static_cast<Eigen::Index>(k));
  for (std::size_t v = 0; v < k; ++v)
    inv_sqrt_deg[static_cast<Eigen::Index>(v)] =
        1.0 / std::sqrt(static_cast<double>(sub.degree(static_cast<NodeId>(v))));
  for (const Edge& e : edges) {
    const double w = inv_sqrt_deg[e.u] * inv_sqrt_deg[e.v];
    lap(e.u, e.v) -= w;
    lap(e.v, e.u) -= w;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success) throw AnalysisError("isoperimetry: eigen solve failed");
  Eigen::VectorXd fiedler = eig.eigenvectors().col(1).cwiseProduct(inv_sqrt_deg);
  std::vector<NodeId> order(k);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return fiedler[a] < fiedler[b] || (fiedler[a] == fiedler[b] && a < b);
  });
  std::vector<char> in_s(k, 0);
  std::uint64_t total = sub.total_degree(), vol_s = 0;
  std::int64_t cut = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const NodeId v = order[i];
    in_s[v] = 1;
    vol_s += sub.degree(v);
    for (NodeId w : sub.neighbors(v)) cut += in_s[w] ? -1 : 1;
    const auto denom = std::min(vol_s, total - vol_s);
    best = std::min(best, static_cast<double>(cut) / static_cast<double>(denom));
  }
  cert.exact = false;
  cert.value = scale * best;
  cert.label = "upper bound (Fiedler sweep): failure certifiable, success not";
  return cert;
}

IsoperimetryCertificate check_isoperimetry(const Graph& g, NodeId u, std::size_t radius) {
  auto nodes = ball(g, u, radius);
  if (nodes.empty()) throw AnalysisError("isoperimetry: empty ball");
  return isoperimetry_certificate(g.induced(nodes), radius);
}

BinOccupancyReport rgg_bin_occupancy(const Graph& g, double mu) {
  require(g.has_coords(), "bin occupancy needs node coordinates");
  require(mu >= 1.0, "mu must be >= 1");
  require(g.topology().radius > 0.0, "bin occupancy needs an rgg radius");
  BinOccupancyReport rep;
  const double r = g.topology().radius;
  rep.bins_per_side = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(mu) / r)));
  const std::size_t b = rep.bins_per_side;
  rep.bin_area = 1.0 / static_cast<double>(b * b);
  rep.expected_per_bin = static_cast<double>(g.size()) * rep.bin_area;
  std::vector<std::size_t> count(b * b, 0);
  auto cell = [&](double c) {
    return std::min(b - 1, static_cast<std::size_t>(c * static_cast<double>(b)));
  };
  for (const auto& p : g.coords()) ++count[cell(p.x) + b * cell(p.y)];
  rep.min_occupancy = *std::min_element(count.begin(), count.end());
  rep.max_occupancy = *std::max_element(count.begin(), count.end());
  rep.min_ratio = static_cast<double>(rep.min_occupancy) / rep.expected_per_bin;
  return rep;
}

}  // namespace tokgossip
