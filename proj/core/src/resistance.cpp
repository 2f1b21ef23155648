#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "linalg.hpp"
#include "tokgossip/analysis.hpp"

namespace tokgossip::analysis {

double effective_resistance(const Graph& g, NodeId u, NodeId v, SolverOptions options) {
  detail::require_node(g, u, "effective_resistance");
  detail::require_node(g, v, "effective_resistance");
  detail::require_connected(g, "effective_resistance");
  if (u == v) return 0.0;
  const auto index = detail::grounded_index(g.size(), v);
  const auto lap = detail::restricted_laplacian(g, index, static_cast<long>(g.size() - 1));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(lap.rows());
  b(index[u]) = 1.0;
  const Eigen::VectorXd phi =
      detail::solve_spd(lap, b, options.dense_limit, options.tolerance, "effective_resistance");
  return phi(index[u]);
}

ResistanceReport resistance_report(const Graph& g) {
  detail::require_connected(g, "resistance_report");
  const auto n = static_cast<Eigen::Index>(g.size());
  // L+ = (L + J/n)^{-1} - J/n; the shift makes L positive definite.
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  for (Eigen::Index u = 0; u < n; ++u) {
    a(u, u) += static_cast<double>(g.degree(static_cast<NodeId>(u)));
    for (NodeId w : g.neighbors(static_cast<NodeId>(u))) a(u, w) -= 1.0;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw AnalysisError("resistance_report: factorization failed");
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));

  ResistanceReport r;
  r.resistance.n = g.size();
  r.resistance.values.assign(g.size() * g.size(), 0.0);
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) {
      const double rho = u == v ? 0.0 : std::max(0.0, inv(u, u) + inv(v, v) - 2 * inv(u, v));
      r.resistance.values[u * n + v] = rho;
      if (rho > r.rho_star) {
        r.rho_star = rho;
        r.argmax_u = static_cast<NodeId>(u);
        r.argmax_v = static_cast<NodeId>(v);
      }
    }
  }
  r.hitting_bound = static_cast<double>(g.total_degree()) * r.rho_star;
  return r;
}

double max_resistance(const Graph& g) { return resistance_report(g).rho_star; }

double set_resistance(const Graph& g, std::span<const NodeId> a, std::span<const NodeId> b) {
  const std::size_t n = g.size();
  if (a.empty()) throw UsageError("set_resistance: A is empty");
  // 0 = outside B (grounded), 1 = B \ A (interior), 2 = A (potential 1).
  std::vector<int> role(n, 0);
  for (NodeId v : b) {
    detail::require_node(g, v, "set_resistance");
    role[v] = 1;
  }
  for (NodeId v : a) {
    detail::require_node(g, v, "set_resistance");
    if (role[v] == 0) throw UsageError("set_resistance: A is not contained in B");
    role[v] = 2;
  }
  if (std::count(role.begin(), role.end(), 0) == 0) {
    throw UsageError("set_resistance: complement of B is empty");
  }
  detail::require_connected(g, "set_resistance");

  std::vector<long> index(n, -1);
  long interior = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (role[v] == 1) index[v] = interior++;
  }
  std::vector<double> phi(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    if (role[v] == 2) phi[v] = 1.0;
  }
  if (interior > 0) {
    const auto lap = detail::restricted_laplacian(g, index, interior);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(interior);
    for (NodeId v = 0; v < n; ++v) {
      if (index[v] < 0) continue;
      for (NodeId w : g.neighbors(v)) {
        if (role[w] == 2) rhs(index[v]) += 1.0;
      }
    }
    const Eigen::VectorXd x =
        detail::solve_spd(lap, rhs, std::numeric_limits<std::size_t>::max(), 1e-9,
                          "set_resistance");
    for (std::size_t v = 0; v < n; ++v) {
      if (index[v] >= 0) phi[v] = x(index[v]);
    }
  }
  double power = 0.0;
  for (const Edge& e : g.edges()) {
    const double d = phi[e.u] - phi[e.v];
    power += d * d;
  }
  if (power <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / power;
}

SpectralReport spectral_gap(const Graph& g) {
  detail::require_connected(g, "spectral_gap");
  const auto n = static_cast<Eigen::Index>(g.size());
  SpectralReport r;
  if (n == 1) return r;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index u = 0; u < n; ++u) {
    const double du = static_cast<double>(g.degree(static_cast<NodeId>(u)));
    for (NodeId w : g.neighbors(static_cast<NodeId>(u))) {
      s(u, w) = 1.0 / std::sqrt(du * static_cast<double>(g.degree(w)));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw AnalysisError("spectral_gap: eigensolver failed");
  const auto& ev = eig.eigenvalues();  // ascending
  r.lambda_min = ev(0);
  r.lambda2 = ev(n - 2);
  r.gap = 1.0 - r.lambda2;
  return r;
}

}  // namespace tokgossip::analysis
