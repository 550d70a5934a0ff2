#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "taburpl/error.hpp"
#include "taburpl/topology.hpp"

namespace taburpl {

/// The six cost features, in weight order.
enum class Feature : std::size_t {
  ResidualEnergy = 0,
  TxEnergy = 1,
  Distance = 2,
  HopCount = 3,
  Etx = 4,
  LinkStability = 5,
};

inline constexpr std::size_t kFeatureCount = 6;
using FeatureVector = std::array<double, kFeatureCount>;

const char* feature_name(Feature f) noexcept;

/// Non-negative weights summing to one.
class WeightVector {
 public:
  static constexpr double kTolerance = 1e-9;

  /// Throws InvalidArgument naming the violated constraint.
  explicit WeightVector(const FeatureVector& weights);

  /// (0.18, 0.22, 0.12, 0.08, 0.25, 0.15)
  static WeightVector balanced();

  double operator[](std::size_t i) const { return weights_.at(i); }
  double operator[](Feature f) const { return weights_[static_cast<std::size_t>(f)]; }
  const FeatureVector& values() const noexcept { return weights_; }

  /// Zeroes one weight and rescales the other five proportionally.
  WeightVector without(Feature f) const;

  std::string to_string() const;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  FeatureVector weights_;
};

/// Raw per-edge metrics.
struct EdgeMetrics {
  double residual_energy = 0.0;  // J, transmitter
  double tx_energy = 0.0;        // J per packet
  double distance = 0.0;         // m
  double hops = 1.0;
  double etx = 1.0;
  double ls = 1.0;               // in [0.05, 1]
};

/// f1 = 1/E_r_safe, f2 = E_t, f3 = d, f4 = h, f5 = ETX, f6 = 1/L_s.
FeatureVector cost_features(const EdgeMetrics& m) noexcept;

/// Per-feature min/max over one snapshot.
struct NormalizationContext {
  FeatureVector min{};
  FeatureVector max{};
  std::uint64_t snapshot_id = 0;

  static NormalizationContext over(std::span<const EdgeMetrics> metrics, std::uint64_t snapshot_id);
};

/// (value - min) / (max - min), 0 for a degenerate range. Values outside
/// [min, max] are clamped and counted in normalization_clamp_count().
double normalize(double value, double min, double max);
std::uint64_t normalization_clamp_count() noexcept;

double edge_cost_raw(const EdgeMetrics& m, const WeightVector& w) noexcept;
double edge_cost_norm(const EdgeMetrics& m, const NormalizationContext& ctx, const WeightVector& w);

enum class CostMode { Normalized, Raw };

inline constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();

/// One parent per non-sink node. parent[sink] and the parent of any node
/// outside the optimized set are kNoParent.
struct ParentAssignment {
  NodeId sink = 0;
  std::vector<NodeId> parent;

  friend bool operator==(const ParentAssignment&, const ParentAssignment&) = default;
};

/// True iff every node with a parent reaches the sink without revisiting a node.
bool check_acyclic(const ParentAssignment& a);

/// Node sequence from v to the sink. Throws InvalidAssignment on a cycle or
/// a dangling pointer.
std::vector<NodeId> path_to_sink(const ParentAssignment& a, NodeId v);

/// Frozen view of topology and link metrics at one instant.
class NetworkSnapshot {
 public:
  /// `metrics` is indexed like graph->edges(). An empty `active` mask means
  /// every node takes part and must reach the sink; otherwise only active
  /// nodes must.
  NetworkSnapshot(std::shared_ptr<const LinkGraph> graph, NodeId sink, std::vector<EdgeMetrics> metrics,
                  std::vector<double> residual, double timestamp, std::vector<bool> active = {});

  std::uint64_t id() const noexcept { return id_; }
  const LinkGraph& graph() const noexcept { return *graph_; }
  std::shared_ptr<const LinkGraph> graph_ptr() const noexcept { return graph_; }
  NodeId sink() const noexcept { return sink_; }
  std::size_t node_count() const noexcept { return graph_->node_count(); }
  const EdgeMetrics& metrics(std::size_t edge) const { return metrics_.at(edge); }
  std::span<const EdgeMetrics> all_metrics() const noexcept { return metrics_; }
  double residual(NodeId v) const { return residual_.at(v); }
  std::uint32_t hops(NodeId v) const { return hops_.at(v); }
  std::span<const std::uint32_t> all_hops() const noexcept { return hops_; }
  bool active(NodeId v) const { return active_.at(v); }
  const NormalizationContext& context() const noexcept { return context_; }
  double timestamp() const noexcept { return timestamp_; }

  /// Active nodes other than the sink, ascending.
  const std::vector<NodeId>& members() const noexcept { return members_; }

  /// True when the edge joins two active nodes.
  bool usable(std::size_t edge) const;

  /// Per-edge cost under the given mode; unusable edges get +infinity.
  std::vector<double> edge_costs(const WeightVector& w, CostMode mode) const;

 private:
  std::uint64_t id_;
  std::shared_ptr<const LinkGraph> graph_;
  NodeId sink_;
  std::vector<EdgeMetrics> metrics_;
  std::vector<double> residual_;
  std::vector<std::uint32_t> hops_;
  std::vector<bool> active_;
  std::vector<NodeId> members_;
  NormalizationContext context_;
  double timestamp_;
};

/// Normalized cost of one snapshot edge; throws ContextError when `ctx` was
/// built for a different snapshot.
double edge_cost_norm(const NetworkSnapshot& snap, std::size_t edge, const NormalizationContext& ctx,
                      const WeightVector& w);

/// Sum of edge costs along a node sequence ending at the sink.
double path_cost(const NetworkSnapshot& snap, std::span<const NodeId> path, const WeightVector& w,
                 CostMode mode = CostMode::Normalized);

/// Sum over member nodes of the cost of their path to the sink.
double assignment_cost(const ParentAssignment& a, const NetworkSnapshot& snap, const WeightVector& w,
                       CostMode mode = CostMode::Normalized);

/// Same total via precomputed edge costs (see NetworkSnapshot::edge_costs).
double assignment_cost(const ParentAssignment& a, const NetworkSnapshot& snap,
                       std::span<const double> edge_costs);

/// Alternative aggregation: sum over parent edges of (descendants + 1) * cost.
double assignment_cost_by_edge_load(const ParentAssignment& a, const NetworkSnapshot& snap,
                                    std::span<const double> edge_costs);

}  // namespace taburpl
