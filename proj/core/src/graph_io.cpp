#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tokgossip/graph.hpp"

namespace tokgossip {

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw UsageError("format_double: conversion failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError("malformed number '" + std::string(text) + "'");
  }
  return value;
}

void write_graph(std::ostream& out, const Graph& g) {
  out << g.size() << ' ' << g.edge_count() << ' ' << g.topology().tag() << ' ' << g.seed()
      << '\n';
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
  for (const Point2& p : g.coords())
    out << "c " << format_double(p.x) << ' ' << format_double(p.y) << '\n';
}

Graph read_graph(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw UsageError("graph file: missing header");
  std::istringstream header(line);
  std::size_t n = 0, m = 0;
  std::string tag;
  std::uint64_t seed = 0;
  if (!(header >> n >> m >> tag >> seed)) throw UsageError("graph file: malformed header");
  Topology topology = Topology::parse_tag(tag);

  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::getline(in, line)) throw UsageError("graph file: truncated edge list");
    std::istringstream row(line);
    std::uint64_t u = 0, v = 0;
    if (!(row >> u >> v)) throw UsageError("graph file: malformed edge line '" + line + "'");
    require(u < v, "graph file: edges must be written with u < v");
    require(v < n, "graph file: edge endpoint out of range");
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  std::vector<Point2> coords;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string c, xs, ys;
    if (!(row >> c >> xs >> ys) || c != "c") {
      throw UsageError("graph file: malformed coordinate line '" + line + "'");
    }
    coords.push_back({parse_double(xs), parse_double(ys)});
  }
  require(coords.empty() || coords.size() == n, "graph file: coordinate count must equal n");
  return Graph(n, std::move(edges), topology, seed, std::move(coords));
}

void save_graph(const std::string& path, const Graph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  write_graph(out, g);
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open graph file '" + path + "'");
  return read_graph(in);
}

}  // namespace tokgossip
