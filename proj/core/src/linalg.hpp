#pragma once

// Internal helpers shared by the solver translation units.

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <string>
#include <vector>

#include "tokgossip/error.hpp"
#include "tokgossip/graph.hpp"

namespace tokgossip::detail {

using SparseMatrix = Eigen::SparseMatrix<double>;

inline void require_connected(const Graph& g, const std::string& what) {
  if (g.size() == 0) throw AnalysisError(what + ": empty graph");
  if (!is_connected(g)) throw AnalysisError(what + ": graph is disconnected");
}

inline void require_node(const Graph& g, NodeId v, const std::string& what) {
  if (v >= g.size()) throw UsageError(what + ": node " + std::to_string(v) + " out of range");
}

/// Combinatorial Laplacian restricted to the rows/columns with index[v] >= 0.
inline SparseMatrix restricted_laplacian(const Graph& g, const std::vector<long>& index,
                                         long size) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(g.total_degree() + g.size());
  for (NodeId u = 0; u < g.size(); ++u) {
    const long iu = index[u];
    if (iu < 0) continue;
    entries.emplace_back(iu, iu, static_cast<double>(g.degree(u)));
    for (NodeId w : g.neighbors(u)) {
      if (index[w] >= 0) entries.emplace_back(iu, index[w], -1.0);
    }
  }
  SparseMatrix m(size, size);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

/// Index map grounding a single node.
inline std::vector<long> grounded_index(std::size_t n, NodeId ground) {
  std::vector<long> index(n);
  long next = 0;
  for (std::size_t v = 0; v < n; ++v) index[v] = v == ground ? -1 : next++;
  return index;
}

inline double relative_residual(const SparseMatrix& a, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a * x - b).norm() / denom;
}

/// Solves a symmetric positive definite system: sparse Cholesky up to
/// `direct_limit` unknowns, diagonally preconditioned CG above. Throws
/// AnalysisError when the relative residual exceeds `tolerance`.
inline Eigen::VectorXd solve_spd(const SparseMatrix& a, const Eigen::VectorXd& b,
                                 std::size_t direct_limit, double tolerance,
                                 const std::string& what) {
  Eigen::VectorXd x;
  if (static_cast<std::size_t>(a.rows()) <= direct_limit) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw AnalysisError(what + ": factorization failed");
    x = ldlt.solve(b);
  } else {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg(a);
    cg.setTolerance(tolerance * 0.1);
    cg.setMaxIterations(std::max<Eigen::Index>(1000, 20 * a.rows()));
    x = cg.solve(b);
  }
  const double r = relative_residual(a, x, b);
  if (!(r <= tolerance)) {
    throw AnalysisError(what + ": solver did not converge (relative residual " +
                        std::to_string(r) + ")");
  }
  return x;
}

}  // namespace tokgossip::detail
