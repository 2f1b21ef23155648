#include <algorithm>
#include <cmath>

#include "linalg.hpp"
#include "tokgossip/analysis.hpp"

namespace tokgossip::analysis {

double NodePairTable::max() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

namespace {

// Max over (u != target) of |h(u) - 1 - mean_{w~u} h(w)|, relative to max h.
double hitting_residual(const Graph& g, const HittingTimeTable& t) {
  const std::size_t n = g.size();
  double worst = 0.0, scale = 1.0;
  for (double v : t.values) scale = std::max(scale, std::abs(v));
  for (NodeId u = 0; u < n; ++u) {
    const auto nb = g.neighbors(u);
    const double inv = 1.0 / static_cast<double>(nb.size());
    for (NodeId target = 0; target < n; ++target) {
      if (target == u) continue;
      double acc = 0.0;
      for (NodeId w : nb) acc += t.at(w, target);
      worst = std::max(worst, std::abs(t.at(u, target) - 1.0 - acc * inv));
    }
  }
  return worst / scale;
}

// Fundamental matrix Z = (I - P + 1 pi^T)^{-1}; E_u T_v = (Z_vv - Z_uv) / pi_v.
void dense_hitting(const Graph& g, HittingTimeTable& out) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const double two_m = static_cast<double>(g.total_degree());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd pi(n);
  for (Eigen::Index v = 0; v < n; ++v) pi(v) = static_cast<double>(g.degree(v)) / two_m;
  for (Eigen::Index u = 0; u < n; ++u) {
    const auto nb = g.neighbors(static_cast<NodeId>(u));
    const double p = 1.0 / static_cast<double>(nb.size());
    for (NodeId w : nb) a(u, w) -= p;
    a.row(u) += pi.transpose();
  }
  const Eigen::MatrixXd z = a.partialPivLu().inverse();
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) {
      out.values[u * n + v] = u == v ? 0.0 : (z(v, v) - z(u, v)) / pi(v);
    }
  }
}

// One grounded-Laplacian solve per target: L_{-v} h = degree vector.
void sparse_hitting(const Graph& g, HittingTimeTable& out, const SolverOptions& options) {
  const std::size_t n = g.size();
  for (NodeId target = 0; target < n; ++target) {
    const auto index = detail::grounded_index(n, target);
    const auto lap = detail::restricted_laplacian(g, index, static_cast<long>(n - 1));
    Eigen::VectorXd b(static_cast<Eigen::Index>(n - 1));
    for (NodeId u = 0; u < n; ++u) {
      if (index[u] >= 0) b(index[u]) = static_cast<double>(g.degree(u));
    }
    const Eigen::VectorXd h =
        detail::solve_spd(lap, b, 0, options.tolerance, "mean_hitting_times");
    for (NodeId u = 0; u < n; ++u) out.values[u * n + target] = index[u] < 0 ? 0.0 : h(index[u]);
  }
}

}  // namespace

HittingTimeTable mean_hitting_times(const Graph& g, SolverOptions options) {
  detail::require_connected(g, "mean_hitting_times");
  HittingTimeTable out;
  out.n = g.size();
  out.values.assign(out.n * out.n, 0.0);
  if (out.n == 1) return out;
  out.dense = out.n <= options.dense_limit;
  if (out.dense) {
    dense_hitting(g, out);
  } else {
    sparse_hitting(g, out, options);
  }
  out.relative_residual = hitting_residual(g, out);
  if (!(out.relative_residual <= options.tolerance)) {
    throw AnalysisError("mean_hitting_times: relative residual " +
                        std::to_string(out.relative_residual) + " exceeds tolerance");
  }
  return out;
}

double worst_case_hitting(const HittingTimeTable& table) { return table.max(); }

double worst_case_hitting(const Graph& g) { return mean_hitting_times(g).max(); }

}  // namespace tokgossip::analysis
