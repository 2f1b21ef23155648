#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokgossip/engine.hpp"

namespace tokgossip {

enum class Family { Clique, Ring, Path, Torus, Grid2d, Rgg, RandomRegular, Custom };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);

/// Generator tag with the parameters that determine the topology.
struct Topology {
  Family family = Family::Custom;
  std::size_t side = 0;    ///< torus / grid2d side length N
  std::size_t dim = 0;     ///< torus dimension d
  double radius = 0.0;     ///< rgg connection radius (resolved)
  std::size_t degree = 0;  ///< random_regular degree

  /// Single-token encoding used by the graph file header, e.g. `torus/5/2`.
  std::string tag() const;
  static Topology parse_tag(std::string_view tag);

  bool operator==(const Topology&) const = default;
};

/// sqrt(2 ln n / n), the connectivity-threshold radius for unit-square RGGs.
double default_rgg_radius(std::size_t n);

/// Parameters of a generator call.
struct GraphSpec {
  Family family = Family::Ring;
  std::size_t n = 0;                 ///< node count (clique, ring, path, rgg, random_regular)
  std::size_t side = 0;              ///< torus / grid2d
  std::size_t dim = 2;               ///< torus
  std::optional<double> radius;      ///< rgg; defaults to default_rgg_radius(n)
  std::size_t degree = 6;            ///< random_regular
  std::uint64_t seed = 0;
  std::size_t max_retries = 100;     ///< rgg / random_regular connectivity attempts

  static GraphSpec clique(std::size_t n);
  static GraphSpec ring(std::size_t n);
  static GraphSpec path(std::size_t n);
  static GraphSpec torus(std::size_t side, std::size_t dim);
  static GraphSpec grid2d(std::size_t side);
  static GraphSpec rgg(std::size_t n, std::uint64_t seed,
                       std::optional<double> radius = std::nullopt);
  static GraphSpec random_regular(std::size_t n, std::size_t degree, std::uint64_t seed);

  std::size_t node_count() const;
  void validate() const;
  std::string describe() const;
};

struct Edge {
  NodeId u;
  NodeId v;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

struct Point2 {
  double x;
  double y;
  bool operator==(const Point2&) const = default;
};

/// Immutable undirected simple graph in compressed adjacency form.
///
/// Neighbor lists are sorted; adjacency is symmetric with no self-edges and
/// no duplicates. Connectivity is not required by the constructor (analysis
/// code checks it where needed) but every generator guarantees it.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t n, std::vector<Edge> edges, Topology topology = {},
        std::uint64_t seed = 0, std::vector<Point2> coords = {});

  std::size_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return adj_.size() / 2; }
  /// Sum of degrees, i.e. 2|E|.
  std::size_t total_degree() const noexcept { return adj_.size(); }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::size_t max_degree() const;
  std::size_t min_degree() const;
  bool has_edge(NodeId u, NodeId v) const;

  const Topology& topology() const noexcept { return topology_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool has_coords() const noexcept { return !coords_.empty(); }
  const std::vector<Point2>& coords() const noexcept { return coords_; }

  /// Failed connectivity attempts before this graph was accepted.
  std::size_t generation_retries() const noexcept { return retries_; }
  void set_generation_retries(std::size_t r) noexcept { retries_ = r; }

  /// Edges with u < v in lexicographic order.
  std::vector<Edge> edges() const;

  Graph without_edge(Edge e) const;

  /// Subgraph induced by `nodes`; node i of the result is nodes[i].
  Graph induced(std::span<const NodeId> nodes) const;

  bool operator==(const Graph& other) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adj_;
  Topology topology_;
  std::uint64_t seed_ = 0;
  std::vector<Point2> coords_;
  std::size_t retries_ = 0;
};

/// Deterministic in the GraphSpec (including seed). Throws UsageError on invalid
/// parameters and GenerationError when a connected graph is not found
/// within `max_retries` attempts.
Graph generate(const GraphSpec& spec);

/// Node id of a torus / grid lattice point (mixed radix, coordinate 0 fastest).
NodeId lattice_node(std::span<const std::size_t> coords, std::size_t side);

// ---- traversal -----------------------------------------------------------

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

std::vector<std::uint32_t> bfs_distances(const Graph& g, NodeId source);
std::uint32_t graph_distance(const Graph& g, NodeId u, NodeId v);

/// B(u, R) = { v : d(u, v) < R }, sorted. Strict inequality: R = 0 is empty.
std::vector<NodeId> ball(const Graph& g, NodeId u, std::size_t radius);

/// Sum of degrees over `nodes`.
std::uint64_t volume(const Graph& g, std::span<const NodeId> nodes);

bool is_connected(const Graph& g);
std::uint32_t eccentricity(const Graph& g, NodeId u);

struct DiameterResult {
  std::uint32_t value = 0;
  bool estimate = false;  ///< double-sweep lower bound rather than exact
};

/// Exact all-pairs BFS up to `exact_limit` nodes, double sweep above.
DiameterResult diameter(const Graph& g, std::size_t exact_limit = 10000);

// ---- regularity checks ---------------------------------------------------

struct GeometricNeighborhoodReport {
  double c0_best = 0.0;       ///< min |B(u,R)| / R^2
  NodeId c0_node = 0;
  std::size_t c0_radius = 0;
  double c1_best = 0.0;       ///< max |B(u,R+D) \ B(u,R)| / (D R)
  NodeId c1_node = 0;
  std::size_t c1_radius = 0;
  std::size_t c1_delta = 0;
  bool sampled = false;
  bool pass = false;
};

struct RegularitySampling {
  std::size_t exhaustive_limit = 2000;  ///< above this many nodes, sample centers
  std::size_t sample_nodes = 64;
  std::uint64_t seed = 0;
};

/// Growth constants over 1 <= R <= diam and 0 < D <= R.
GeometricNeighborhoodReport check_geometric_neighborhood(const Graph& g,
                                                         RegularitySampling sampling = {});

struct VolumeDoublingReport {
  double c5_best = 0.0;  ///< max Vol(u,2R) / Vol(u,R)
  NodeId node = 0;
  std::size_t radius = 0;
  bool sampled = false;
};

/// Doubling constant over 1 <= R <= diam.
VolumeDoublingReport check_volume_doubling(const Graph& g, RegularitySampling sampling = {});

struct IsoperimetryCertificate {
  double value = 0.0;  ///< R * Cut(S, S^c) / min(Vol S, Vol S^c)
  bool exact = false;
  bool connected = true;
  std::size_t ball_size = 0;
  std::string label;
};

inline constexpr std::size_t kExactIsoperimetryLimit = 16;

/// Certificate for the subgraph induced by B(u, R). Exact (all 2-partitions)
/// when the ball has at most 16 nodes; otherwise a Fiedler sweep-cut value,
/// which upper-bounds the true minimum. Volumes use induced degrees.
IsoperimetryCertificate check_isoperimetry(const Graph& g, NodeId u, std::size_t radius);

/// Same certificate computed directly on `subgraph` with scale `radius`.
IsoperimetryCertificate isoperimetry_certificate(const Graph& subgraph, std::size_t radius);

struct BinOccupancyReport {
  std::size_t bins_per_side = 0;
  double bin_area = 0.0;
  double expected_per_bin = 0.0;  ///< n * area
  std::size_t min_occupancy = 0;
  std::size_t max_occupancy = 0;
  /// Smallest observed occupancy divided by n * area.
  double min_ratio = 0.0;
};

/// Occupancy of square bins of area >= r^2 / mu on an RGG's coordinates.
BinOccupancyReport rgg_bin_occupancy(const Graph& g, double mu = 1.0);

// ---- file format ---------------------------------------------------------

/// Text edge list: `n m tag seed`, m lines `u v` (u < v), then for RGGs
/// one `c x y` line per node. Floating values use shortest round-trip form.
void write_graph(std::ostream& out, const Graph& g);
Graph read_graph(std::istream& in);
void save_graph(const std::string& path, const Graph& g);
Graph load_graph(const std::string& path);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double x);
double parse_double(std::string_view text);

}  // namespace tokgossip
