#include "taburpl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "taburpl/rng.hpp"

namespace taburpl {

double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

NodeField deploy_uniform(std::size_t n, Area area, std::uint64_t seed,
                         std::optional<Point> sink_position) {
  if (n == 0) throw InvalidArgument("deploy_uniform: node count must be at least 1");
  if (!(area.width > 0.0) || !(area.height > 0.0))
    throw InvalidArgument("deploy_uniform: area dimensions must be positive");

  const Point sink = sink_position.value_or(Point{area.width / 2.0, area.height / 2.0});
  if (sink.x < 0.0 || sink.x > area.width || sink.y < 0.0 || sink.y > area.height)
    throw InvalidArgument("deploy_uniform: sink position lies outside the area");

  NodeField field;
  field.area = area;
  field.seed = seed;
  field.sink = 0;
  field.nodes.reserve(n);
  field.nodes.push_back(sink);

  Rng rng(derive_seed(seed, 0));
  for (std::size_t i = 1; i < n; ++i) {
    const double x = rng.uniform() * area.width;
    const double y = rng.uniform() * area.height;
    field.nodes.push_back({x, y});
  }
  return field;
}

double RadioModel::delivery_probability(double effective_distance) const noexcept {
  const double ratio = std::clamp(effective_distance / range, 0.0, 1.0);
  return 1.0 - (1.0 - delivery_at_range) * ratio;
}

void RadioModel::validate() const {
  if (!(range > 0.0)) throw InvalidArgument("radio range must be positive");
  if (shadowing_sigma < 0.0) throw InvalidArgument("shadowing sigma must be non-negative");
  if (!(path_loss_exponent > 0.0)) throw InvalidArgument("path-loss exponent must be positive");
  if (!(delivery_at_range > 0.0) || delivery_at_range > 1.0)
    throw InvalidArgument("delivery probability at range must lie in (0, 1]");
}

LinkGraph::LinkGraph(std::size_t node_count, std::vector<Edge> edges)
    : edges_(std::move(edges)), out_(node_count), in_(node_count) {
  for (std::uint32_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.from >= node_count || e.to >= node_count)
      throw InvalidArgument("edge references an unknown node");
    if (e.from == e.to) throw InvalidArgument("self-loop on node " + std::to_string(e.from));
    if (!(e.delivery > 0.0) || e.delivery > 1.0)
      throw InvalidArgument("edge delivery probability must lie in (0, 1]");
    out_[e.from].push_back(i);
    in_[e.to].push_back(i);
  }
}

std::optional<std::uint32_t> LinkGraph::find_edge(NodeId from, NodeId to) const {
  for (std::uint32_t idx : out_.at(from))
    if (edges_[idx].to == to) return idx;
  return std::nullopt;
}

double LinkGraph::mean_degree() const noexcept {
  if (out_.empty()) return 0.0;
  return static_cast<double>(edges_.size()) / static_cast<double>(out_.size());
}

LinkGraph build_links(const NodeField& field, const RadioModel& radio, std::uint64_t seed,
                      Connectivity connectivity) {
  if (field.nodes.empty()) throw InvalidArgument("build_links: empty node field");
  radio.validate();

  Rng rng(derive_seed(seed, 1));
  std::vector<Edge> edges;
  const std::size_t n = field.size();
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double d = distance(field.nodes[u], field.nodes[v]);
      double effective = d;
      if (radio.kind == RadioKind::LogNormalShadowing) {
        // Link budget relative to the median range: the pair connects when
        // the path-loss excess over the range is covered by the fade draw.
        const double fade_db = rng.normal(0.0, radio.shadowing_sigma);
        effective = d * std::pow(10.0, -fade_db / (10.0 * radio.path_loss_exponent));
      }
      if (effective > radio.range) continue;
      const double p = radio.delivery_probability(effective);
      edges.push_back({u, v, d, p});
      edges.push_back({v, u, d, p});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });

  LinkGraph graph(n, std::move(edges));
  if (connectivity == Connectivity::Require) {
    auto lost = orphans(graph, field.sink);
    if (!lost.empty()) {
      std::ostringstream msg;
      msg << "topology is disconnected: " << lost.size() << " node(s) cannot reach sink "
          << field.sink;
      throw ConnectivityError(msg.str(), std::move(lost));
    }
  }
  return graph;
}

std::vector<std::uint32_t> reachable_hop_counts(const LinkGraph& graph, NodeId sink) {
  std::vector<std::uint32_t> hops(graph.node_count(), kUnreachable);
  if (sink >= graph.node_count()) throw InvalidArgument("sink is not a node of the graph");
  // Walk incoming edges outward from the sink.
  std::deque<NodeId> frontier{sink};
  hops[sink] = 0;
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop_front();
    for (std::uint32_t idx : graph.in_edges(v)) {
      const NodeId u = graph.edge(idx).from;
      if (hops[u] == kUnreachable) {
        hops[u] = hops[v] + 1;
        frontier.push_back(u);
      }
    }
  }
  return hops;
}

std::vector<NodeId> orphans(const LinkGraph& graph, NodeId sink) {
  const auto hops = reachable_hop_counts(graph, sink);
  std::vector<NodeId> lost;
  for (NodeId v = 0; v < hops.size(); ++v)
    if (hops[v] == kUnreachable) lost.push_back(v);
  return lost;
}

std::vector<std::uint32_t> hop_counts(const LinkGraph& graph, NodeId sink) {
  auto hops = reachable_hop_counts(graph, sink);
  std::vector<NodeId> lost;
  for (NodeId v = 0; v < hops.size(); ++v)
    if (hops[v] == kUnreachable) lost.push_back(v);
  if (!lost.empty())
    throw ConnectivityError("hop_counts: " + std::to_string(lost.size()) + " unreachable node(s)",
                            std::move(lost));
  return hops;
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("pearson_correlation: length mismatch");
  if (xs.size() < 2) throw InvalidArgument("pearson_correlation: need at least two samples");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw UndefinedCorrelation("pearson_correlation: a series has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

void write_edge_list(std::ostream& out, const LinkGraph& graph, NodeId sink, std::uint64_t seed) {
  out << "# nodes=" << graph.node_count() << " sink=" << sink << " seed=" << seed << '\n';
  out << std::setprecision(17);
  for (const Edge& e : graph.edges())
    out << e.from << ' ' << e.to << ' ' << e.distance << ' ' << e.delivery << '\n';
}

TopologyFile read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> nodes;
  TopologyFile file;
  std::vector<Edge> edges;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (nodes) continue;
      std::istringstream header(line.substr(1));
      std::string token;
      while (header >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "malformed header token '" + token + "'");
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        try {
          if (key == "nodes") nodes = std::stoull(value);
          else if (key == "sink") file.sink = static_cast<NodeId>(std::stoul(value));
          else if (key == "seed") file.seed = std::stoull(value);
        } catch (const std::exception&) {
          throw ParseError(line_no, "bad value for '" + key + "'");
        }
      }
      if (!nodes) throw ParseError(line_no, "header lacks nodes=<n>");
      continue;
    }
    if (!nodes) throw ParseError(line_no, "edge line before header");
    std::istringstream fields(line);
    Edge e;
    if (!(fields >> e.from >> e.to >> e.distance >> e.delivery))
      throw ParseError(line_no, "expected 'u v d_meters p_delivery'");
    std::string rest;
    if (fields >> rest) throw ParseError(line_no, "trailing data '" + rest + "'");
    edges.push_back(e);
  }
  if (!nodes) throw ParseError(line_no, "missing header");
  try {
    file.graph = LinkGraph(*nodes, std::move(edges));
  } catch (const InvalidArgument& err) {
    throw ParseError(line_no, err.what());
  }
  if (file.sink >= *nodes) throw ParseError(1, "sink id out of range");
  return file;
}

}  // namespace taburpl
