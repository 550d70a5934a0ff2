#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "taburpl/error.hpp"

namespace taburpl {

inline constexpr std::uint32_t kUnreachable = 0xffffffffu;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b) noexcept;

struct Area {
  double width = 1000.0;
  double height = 1000.0;
};

/// Static node deployment. Node ids are positions in `nodes`.
struct NodeField {
  std::vector<Point> nodes;
  NodeId sink = 0;
  Area area;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return nodes.size(); }
  double distance_to_sink(NodeId v) const { return distance(nodes.at(v), nodes.at(sink)); }
};

/// Places the sink (node 0) at `sink_position` (default: area center) and
/// draws the remaining n - 1 nodes uniformly over the area.
NodeField deploy_uniform(std::size_t n, Area area, std::uint64_t seed,
                         std::optional<Point> sink_position = std::nullopt);

enum class RadioKind { UnitDisc, LogNormalShadowing };

struct RadioModel {
  RadioKind kind = RadioKind::UnitDisc;
  double range = 250.0;            // metres; the median range under shadowing
  double shadowing_sigma = 4.0;    // dB
  double path_loss_exponent = 3.0;
  double delivery_at_range = 0.7;  // delivery probability at d == range

  /// Linear falloff from 1.0 at d = 0 to delivery_at_range at d = range.
  double delivery_probability(double effective_distance) const noexcept;
  void validate() const;
};

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  double distance = 0.0;
  double delivery = 1.0;  // per-attempt delivery probability, (0, 1]
};

/// Directed radio graph with adjacency in both directions.
class LinkGraph {
 public:
  LinkGraph() = default;
  LinkGraph(std::size_t node_count, std::vector<Edge> edges);

  std::size_t node_count() const noexcept { return out_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t index) const { return edges_.at(index); }

  /// Indices into edges() of the edges leaving / entering `v`.
  std::span<const std::uint32_t> out_edges(NodeId v) const { return out_.at(v); }
  std::span<const std::uint32_t> in_edges(NodeId v) const { return in_.at(v); }

  std::optional<std::uint32_t> find_edge(NodeId from, NodeId to) const;
  std::size_t degree(NodeId v) const { return out_.at(v).size(); }
  double mean_degree() const noexcept;

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<std::uint32_t>> out_;
  std::vector<std::vector<std::uint32_t>> in_;
};

enum class Connectivity { Require, Allow };

/// Builds the radio graph. Under shadowing a Gaussian draw is frozen per
/// unordered node pair, so links are symmetric and static.
LinkGraph build_links(const NodeField& field, const RadioModel& radio, std::uint64_t seed,
                      Connectivity connectivity = Connectivity::Require);

/// Breadth-first hop distance to the sink; throws ConnectivityError naming
/// every unreachable node.
std::vector<std::uint32_t> hop_counts(const LinkGraph& graph, NodeId sink);

/// Like hop_counts() but marks unreachable nodes with kUnreachable.
std::vector<std::uint32_t> reachable_hop_counts(const LinkGraph& graph, NodeId sink);

/// Nodes with no directed path to the sink.
std::vector<NodeId> orphans(const LinkGraph& graph, NodeId sink);

double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

/// Plain-text edge list: a `# nodes=<n> sink=<id> seed=<s>` header then one
/// `u v d_meters p_delivery` line per directed edge.
struct TopologyFile {
  LinkGraph graph;
  NodeId sink = 0;
  std::uint64_t seed = 0;
};

void write_edge_list(std::ostream& out, const LinkGraph& graph, NodeId sink, std::uint64_t seed);
TopologyFile read_edge_list(std::istream& in);

}  // namespace taburpl
