#include "tokgossip/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace tokgossip {

namespace {

constexpr struct {
  Family family;
  std::string_view name;
} kFamilyNames[] = {
    {Family::Clique, "clique"}, {Family::Ring, "ring"},
    {Family::Path, "path"},     {Family::Torus, "torus"},
    {Family::Grid2d, "grid2d"}, {Family::Rgg, "rgg"},
    {Family::RandomRegular, "random_regular"}, {Family::Custom, "custom"},
};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::size_t parse_size(std::string_view s) {
  std::size_t value = 0;
  if (s.empty()) throw UsageError("expected an integer");
  for (char c : s) {
    if (c < '0' || c > '9') throw UsageError("expected an integer, got '" + std::string(s) + "'");
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return value;
}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > std::numeric_limits<std::size_t>::max() / base) {
      throw UsageError("lattice too large");
    }
    r *= base;
  }
  return r;
}

void add_edge(std::vector<Edge>& edges, std::size_t a, std::size_t b) {
  if (a == b) return;
  auto u = static_cast<NodeId>(std::min(a, b));
  auto v = static_cast<NodeId>(std::max(a, b));
  edges.push_back({u, v});
}

void dedupe(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

Topology topology_of(const GraphSpec& spec) {
  Topology t;
  t.family = spec.family;
  switch (spec.family) {
    case Family::Torus:
      t.side = spec.side;
      t.dim = spec.dim;
      break;
    case Family::Grid2d:
      t.side = spec.side;
      t.dim = 2;
      break;
    case Family::Rgg:
      t.radius = spec.radius.value_or(default_rgg_radius(spec.n));
      break;
    case Family::RandomRegular:
      t.degree = spec.degree;
      break;
    default:
      break;
  }
  return t;
}

Graph make_clique(const GraphSpec& spec) {
  std::vector<Edge> edges;
  edges.reserve(spec.n * (spec.n - 1) / 2);
  for (std::size_t u = 0; u < spec.n; ++u)
    for (std::size_t v = u + 1; v < spec.n; ++v) add_edge(edges, u, v);
  return Graph(spec.n, std::move(edges), topology_of(spec), spec.seed);
}

Graph make_ring(const GraphSpec& spec) {
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < spec.n; ++u) add_edge(edges, u, (u + 1) % spec.n);
  dedupe(edges);
  return Graph(spec.n, std::move(edges), topology_of(spec), spec.seed);
}

Graph make_path(const GraphSpec& spec) {
  std::vector<Edge> edges;
  for (std::size_t u = 0; u + 1 < spec.n; ++u) add_edge(edges, u, u + 1);
  return Graph(spec.n, std::move(edges), topology_of(spec), spec.seed);
}

Graph make_torus(const GraphSpec& spec) {
  const std::size_t n = spec.node_count();
  std::vector<Edge> edges;
  edges.reserve(n * spec.dim);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < spec.dim; ++k) {
    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t coord = (v / stride) % spec.side;
      const std::size_t next = (coord + 1) % spec.side;
      add_edge(edges, v, v - coord * stride + next * stride);
    }
    stride *= spec.side;
  }
  dedupe(edges);
  return Graph(n, std::move(edges), topology_of(spec), spec.seed);
}

Graph make_grid2d(const GraphSpec& spec) {
  const std::size_t side = spec.side;
  std::vector<Edge> edges;
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const std::size_t v = x + side * y;
      if (x + 1 < side) add_edge(edges, v, v + 1);
      if (y + 1 < side) add_edge(edges, v, v + side);
    }
  }
  dedupe(edges);
  return Graph(side * side, std::move(edges), topology_of(spec), spec.seed);
}

Graph rgg_attempt(const GraphSpec& spec, double radius, std::uint64_t attempt) {
  RngStream rng(spec.seed, attempt);
  const std::size_t n = spec.n;
  std::vector<Point2> pts(n);
  for (auto& p : pts) {
    p.x = rng.uniform01();
    p.y = rng.uniform01();
  }
  // Bucket by cells of side >= radius so only neighboring cells are scanned.
  const auto cells = static_cast<std::size_t>(std::max(1.0, std::floor(1.0 / radius)));
  auto cell_of = [&](double c) {
    return std::min(cells - 1, static_cast<std::size_t>(c * static_cast<double>(cells)));
  };
  std::vector<std::vector<NodeId>> bucket(cells * cells);
  for (std::size_t i = 0; i < n; ++i) {
    bucket[cell_of(pts[i].x) + cells * cell_of(pts[i].y)].push_back(static_cast<NodeId>(i));
  }
  const double r2 = radius * radius;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cx = cell_of(pts[i].x), cy = cell_of(pts[i].y);
    for (std::size_t yy = (cy == 0 ? 0 : cy - 1); yy <= std::min(cells - 1, cy + 1); ++yy) {
      for (std::size_t xx = (cx == 0 ? 0 : cx - 1); xx <= std::min(cells - 1, cx + 1); ++xx) {
        for (NodeId j : bucket[xx + cells * yy]) {
          if (j <= i) continue;
          const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
          if (dx * dx + dy * dy <= r2) add_edge(edges, i, j);
        }
      }
    }
  }
  dedupe(edges);
  return Graph(n, std::move(edges), topology_of(spec), spec.seed, std::move(pts));
}

// Pairing model with incremental rejection: random point pairs that would
// create a loop or a multi-edge are redrawn; an attempt that gets stuck is
// abandoned.
std::optional<Graph> random_regular_attempt(const GraphSpec& spec, std::uint64_t attempt) {
  RngStream rng(spec.seed, attempt);
  const std::size_t n = spec.n, d = spec.degree;
  std::vector<NodeId> points;
  points.reserve(n * d);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t k = 0; k < d; ++k) points.push_back(static_cast<NodeId>(v));
  std::vector<std::vector<NodeId>> nbr(n);
  auto suitable = [&](NodeId a, NodeId b) {
    return a != b && std::find(nbr[a].begin(), nbr[a].end(), b) == nbr[a].end();
  };
  auto take = [&](std::size_t i, std::size_t j) {
    const NodeId a = points[i], b = points[j];
    nbr[a].push_back(b);
    nbr[b].push_back(a);
    if (i < j) std::swap(i, j);
    std::swap(points[i], points.back());
    points.pop_back();
    std::swap(points[j], points.back());
    points.pop_back();
  };
  while (!points.empty()) {
    bool placed = false;
    for (int tries = 0; tries < 64 && !placed; ++tries) {
      const auto i = static_cast<std::size_t>(rng.uniform_index(points.size()));
      const auto j = static_cast<std::size_t>(rng.uniform_index(points.size()));
      if (i != j && suitable(points[i], points[j])) {
        take(i, j);
        placed = true;
      }
    }
    if (placed) continue;
    std::vector<std::pair<std::size_t, std::size_t>> options;
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j)
        if (suitable(points[i], points[j])) options.emplace_back(i, j);
    if (options.empty()) return std::nullopt;
    const auto& [i, j] = options[static_cast<std::size_t>(rng.uniform_index(options.size()))];
    take(i, j);
  }
  std::vector<Edge> edges;
  for (std::size_t v = 0; v < n; ++v)
    for (NodeId w : nbr[v])
      if (v < w) add_edge(edges, v, w);
  std::sort(edges.begin(), edges.end());
  return Graph(n, std::move(edges), topology_of(spec), spec.seed);
}

}  // namespace

std::string_view to_string(Family f) {
  for (const auto& e : kFamilyNames)
    if (e.family == f) return e.name;
  return "custom";
}

Family parse_family(std::string_view name) {
  for (const auto& e : kFamilyNames)
    if (e.name == name) return e.family;
  throw UsageError("unknown graph kind '" + std::string(name) + "'");
}

std::string Topology::tag() const {
  std::string s(to_string(family));
  switch (family) {
    case Family::Torus:
      s += "/" + std::to_string(side) + "/" + std::to_string(dim);
      break;
    case Family::Grid2d:
      s += "/" + std::to_string(side);
      break;
    case Family::Rgg:
      s += "/" + format_double(radius);
      break;
    case Family::RandomRegular:
      s += "/" + std::to_string(degree);
      break;
    default:
      break;
  }
  return s;
}

Topology Topology::parse_tag(std::string_view tag) {
  auto parts = split(tag, '/');
  Topology t;
  t.family = parse_family(parts[0]);
  auto expect = [&](std::size_t count) {
    if (parts.size() != count) throw UsageError("malformed topology tag '" + std::string(tag) + "'");
  };
  switch (t.family) {
    case Family::Torus:
      expect(3);
      t.side = parse_size(parts[1]);
      t.dim = parse_size(parts[2]);
      break;
    case Family::Grid2d:
      expect(2);
      t.side = parse_size(parts[1]);
      t.dim = 2;
      break;
    case Family::Rgg:
      expect(2);
      t.radius = parse_double(parts[1]);
      break;
    case Family::RandomRegular:
      expect(2);
      t.degree = parse_size(parts[1]);
      break;
    default:
      expect(1);
      break;
  }
  return t;
}

double default_rgg_radius(std::size_t n) {
  if (n < 2) return 1.5;  // any radius >= sqrt(2) connects the unit square
  const double dn = static_cast<double>(n);
  return std::sqrt(2.0 * std::log(dn) / dn);
}

namespace {

GraphSpec make_spec(Family f) {
  GraphSpec s;
  s.family = f;
  return s;
}

}  // namespace

GraphSpec GraphSpec::clique(std::size_t n) {
  auto s = make_spec(Family::Clique);
  s.n = n;
  return s;
}
GraphSpec GraphSpec::ring(std::size_t n) {
  auto s = make_spec(Family::Ring);
  s.n = n;
  return s;
}
GraphSpec GraphSpec::path(std::size_t n) {
  auto s = make_spec(Family::Path);
  s.n = n;
  return s;
}
GraphSpec GraphSpec::torus(std::size_t side, std::size_t dim) {
  auto s = make_spec(Family::Torus);
  s.side = side;
  s.dim = dim;
  return s;
}
GraphSpec GraphSpec::grid2d(std::size_t side) {
  auto s = make_spec(Family::Grid2d);
  s.side = side;
  s.dim = 2;
  return s;
}
GraphSpec GraphSpec::rgg(std::size_t n, std::uint64_t seed, std::optional<double> radius) {
  auto s = make_spec(Family::Rgg);
  s.n = n;
  s.radius = radius;
  s.seed = seed;
  return s;
}
GraphSpec GraphSpec::random_regular(std::size_t n, std::size_t degree, std::uint64_t seed) {
  auto s = make_spec(Family::RandomRegular);
  s.n = n;
  s.degree = degree;
  s.seed = seed;
  return s;
}

std::size_t GraphSpec::node_count() const {
  switch (family) {
    case Family::Torus:
      return ipow(side, dim);
    case Family::Grid2d:
      return side * side;
    default:
      return n;
  }
}

void GraphSpec::validate() const {
  switch (family) {
    case Family::Torus:
      require(dim >= 1, "torus dimension must be positive");
      require(side >= 3, "torus side must be >= 3 (smaller sides create duplicate edges)");
      break;
    case Family::Grid2d:
      require(side >= 1, "grid2d side must be positive");
      break;
    case Family::Rgg:
      require(n >= 1, "rgg needs at least one node");
      require(!radius || *radius > 0.0, "rgg radius must be positive");
      break;
    case Family::RandomRegular:
      require(n >= 2, "random_regular needs at least two nodes");
      require(degree >= 1 && degree < n, "random_regular degree must lie in [1, n)");
      require((n * degree) % 2 == 0, "random_regular needs n * degree even");
      break;
    case Family::Ring:
      require(n >= 3, "ring needs at least three nodes");
      break;
    case Family::Custom:
      throw UsageError("custom graphs cannot be generated");
    default:
      require(n >= 1, "graph needs at least one node");
      break;
  }
  require(max_retries >= 1, "max_retries must be positive");
  require(node_count() <= std::numeric_limits<NodeId>::max(), "graph too large");
}

std::string GraphSpec::describe() const {
  std::ostringstream os;
  os << to_string(family);
  switch (family) {
    case Family::Torus:
      os << "(N=" << side << ",d=" << dim << ")";
      break;
    case Family::Grid2d:
      os << "(N=" << side << ")";
      break;
    case Family::Rgg:
      os << "(n=" << n << ",seed=" << seed << ")";
      break;
    case Family::RandomRegular:
      os << "(n=" << n << ",d=" << degree << ",seed=" << seed << ")";
      break;
    default:
      os << "(" << n << ")";
      break;
  }
  return os.str();
}

Graph::Graph(std::size_t n, std::vector<Edge> edges, Topology topology, std::uint64_t seed,
             std::vector<Point2> coords)
    : n_(n), topology_(topology), seed_(seed), coords_(std::move(coords)) {
  require(coords_.empty() || coords_.size() == n, "coordinate count must equal node count");
  std::vector<std::size_t> deg(n + 1, 0);
  for (const Edge& e : edges) {
    require(e.u < n && e.v < n, "edge endpoint out of range");
    require(e.u != e.v, "self-edges are not allowed");
    ++deg[e.u];
    ++deg[e.v];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
  adj_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges) {
    adj_[fill[e.u]++] = e.v;
    adj_[fill[e.v]++] = e.u;
  }
  for (std::size_t v = 0; v < n; ++v) {
    auto first = adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]);
    auto last = adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]);
    std::sort(first, last);
    require(std::adjacent_find(first, last) == last, "duplicate edges are not allowed");
  }
}

std::size_t Graph::max_degree() const {
  std::size_t m = 0;
  for (std::size_t v = 0; v < n_; ++v) m = std::max(m, degree(static_cast<NodeId>(v)));
  return m;
}

std::size_t Graph::min_degree() const {
  if (n_ == 0) return 0;
  std::size_t m = std::numeric_limits<std::size_t>::max();
  for (std::size_t v = 0; v < n_; ++v) m = std::min(m, degree(static_cast<NodeId>(v)));
  return m;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (std::size_t u = 0; u < n_; ++u)
    for (NodeId v : neighbors(static_cast<NodeId>(u)))
      if (u < v) out.push_back({static_cast<NodeId>(u), v});
  return out;
}

Graph Graph::without_edge(Edge e) const {
  if (e.u > e.v) std::swap(e.u, e.v);
  auto all = edges();
  auto it = std::find(all.begin(), all.end(), e);
  require(it != all.end(), "without_edge: edge not present");
  all.erase(it);
  Topology t;
  t.family = Family::Custom;
  return Graph(n_, std::move(all), t, seed_, coords_);
}

Graph Graph::induced(std::span<const NodeId> nodes) const {
  std::vector<std::int64_t> index(n_, -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    require(nodes[i] < n_, "induced: node out of range");
    require(index[nodes[i]] < 0, "induced: duplicate node");
    index[nodes[i]] = static_cast<std::int64_t>(i);
  }
  std::vector<Edge> sub;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (NodeId w : neighbors(nodes[i]))
      if (index[w] > static_cast<std::int64_t>(i)) add_edge(sub, i, static_cast<std::size_t>(index[w]));
  std::sort(sub.begin(), sub.end());
  return Graph(nodes.size(), std::move(sub));
}

bool Graph::operator==(const Graph& other) const {
  return n_ == other.n_ && offsets_ == other.offsets_ && adj_ == other.adj_ &&
         topology_ == other.topology_ && seed_ == other.seed_ && coords_ == other.coords_;
}

NodeId lattice_node(std::span<const std::size_t> coords, std::size_t side) {
  std::size_t id = 0, stride = 1;
  for (std::size_t c : coords) {
    id += (c % side) * stride;
    stride *= side;
  }
  return static_cast<NodeId>(id);
}

Graph generate(const GraphSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::Clique:
      return make_clique(spec);
    case Family::Ring:
      return make_ring(spec);
    case Family::Path:
      return make_path(spec);
    case Family::Torus:
      return make_torus(spec);
    case Family::Grid2d:
      return make_grid2d(spec);
    case Family::Rgg: {
      const double radius = spec.radius.value_or(default_rgg_radius(spec.n));
      for (std::size_t attempt = 0; attempt < spec.max_retries; ++attempt) {
        Graph g = rgg_attempt(spec, radius, attempt);
        if (is_connected(g)) {
          g.set_generation_retries(attempt);
          return g;
        }
      }
      throw GenerationError("rgg: no connected graph in " + std::to_string(spec.max_retries) +
                            " attempts for " + spec.describe());
    }
    case Family::RandomRegular: {
      for (std::size_t attempt = 0; attempt < spec.max_retries; ++attempt) {
        auto g = random_regular_attempt(spec, attempt);
        if (g && is_connected(*g)) {
          g->set_generation_retries(attempt);
          return std::move(*g);
        }
      }
      throw GenerationError("random_regular: no connected simple graph in " +
                            std::to_string(spec.max_retries) + " attempts for " + spec.describe());
    }
    case Family::Custom:
      break;
  }
  throw UsageError("custom graphs cannot be generated");
}

// ---- traversal -------------------------------------------------------------

std::vector<std::uint32_t> bfs_distances(const Graph& g, NodeId source) {
  require(source < g.size(), "node out of range");
  std::vector<std::uint32_t> dist(g.size(), kUnreachable);
  std::vector<NodeId> frontier{source};
  dist[source] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const NodeId v = frontier[head];
    for (NodeId w : g.neighbors(v)) {
      if (dist[w] == kUnreachable) {
        dist[w] = dist[v] + 1;
        frontier.push_back(w);
      }
    }
  }
  return dist;
}

std::uint32_t graph_distance(const Graph& g, NodeId u, NodeId v) {
  require(v < g.size(), "node out of range");
  if (u == v) return 0;
  return bfs_distances(g, u)[v];
}

std::vector<NodeId> ball(const Graph& g, NodeId u, std::size_t radius) {
  std::vector<NodeId> out;
  if (radius == 0) return out;
  auto dist = bfs_distances(g, u);
  for (std::size_t v = 0; v < g.size(); ++v)
    if (dist[v] != kUnreachable && dist[v] < radius) out.push_back(static_cast<NodeId>(v));
  return out;
}

std::uint64_t volume(const Graph& g, std::span<const NodeId> nodes) {
  std::uint64_t vol = 0;
  for (NodeId v : nodes) {
    require(v < g.size(), "node out of range");
    vol += g.degree(v);
  }
  return vol;
}

bool is_connected(const Graph& g) {
  if (g.size() <= 1) return true;
  auto dist = bfs_distances(g, 0);
  return std::none_of(dist.begin(), dist.end(), [](auto d) { return d == kUnreachable; });
}

std::uint32_t eccentricity(const Graph& g, NodeId u) {
  auto dist = bfs_distances(g, u);
  std::uint32_t ecc = 0;
  for (auto d : dist) {
    if (d == kUnreachable) throw AnalysisError("eccentricity: graph is disconnected");
    ecc = std::max(ecc, d);
  }
  return ecc;
}

DiameterResult diameter(const Graph& g, std::size_t exact_limit) {
  DiameterResult r;
  if (g.size() <= 1) return r;
  if (g.size() <= exact_limit) {
    for (std::size_t u = 0; u < g.size(); ++u)
      r.value = std::max(r.value, eccentricity(g, static_cast<NodeId>(u)));
    return r;
  }
  auto d0 = bfs_distances(g, 0);
  auto far = static_cast<NodeId>(std::max_element(d0.begin(), d0.end()) - d0.begin());
  r.value = eccentricity(g, far);
  r.estimate = true;
  return r;
}

}  // namespace tokgossip
