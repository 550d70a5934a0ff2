#include "taburpl/cost.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "taburpl/linkstats.hpp"

namespace taburpl {

namespace {

std::atomic<std::uint64_t> g_clamp_count{0};
std::atomic<std::uint64_t> g_next_snapshot_id{1};

std::uint32_t parent_edge(const LinkGraph& g, NodeId v, NodeId p) {
  const auto idx = g.find_edge(v, p);
  if (!idx)
    throw InvalidAssignment("parent " + std::to_string(p) + " of node " + std::to_string(v) +
                            " is not a radio neighbour");
  return *idx;
}

}  // namespace

const char* feature_name(Feature f) noexcept {
  switch (f) {
    case Feature::ResidualEnergy: return "residual_energy";
    case Feature::TxEnergy: return "tx_energy";
    case Feature::Distance: return "distance";
    case Feature::HopCount: return "hop_count";
    case Feature::Etx: return "etx";
    case Feature::LinkStability: return "link_stability";
  }
  return "unknown";
}

WeightVector::WeightVector(const FeatureVector& weights) : weights_(weights) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!std::isfinite(weights_[i]))
      throw InvalidArgument("weight " + std::to_string(i + 1) + " is not finite");
    if (weights_[i] < 0.0)
      throw InvalidArgument("weight " + std::to_string(i + 1) + " is negative (weights must be >= 0)");
    sum += weights_[i];
  }
  if (std::abs(sum - 1.0) > kTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "weights must sum to 1 within " << kTolerance << " (sum is " << sum << ")";
    throw InvalidArgument(msg.str());
  }
}

WeightVector WeightVector::balanced() { return WeightVector({0.18, 0.22, 0.12, 0.08, 0.25, 0.15}); }

WeightVector WeightVector::without(Feature f) const {
  const std::size_t drop = static_cast<std::size_t>(f);
  const double remaining = 1.0 - weights_[drop];
  if (!(remaining > 0.0))
    throw InvalidArgument(std::string("cannot drop ") + feature_name(f) + ": it carries all the weight");
  FeatureVector next{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) next[i] = i == drop ? 0.0 : weights_[i] / remaining;
  return WeightVector(next);
}

std::string WeightVector::to_string() const {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < kFeatureCount; ++i) out << (i ? "," : "") << weights_[i];
  return out.str();
}

FeatureVector cost_features(const EdgeMetrics& m) noexcept {
  return {1.0 / safe_residual(m.residual_energy),
          m.tx_energy,
          m.distance,
          m.hops,
          m.etx,
          1.0 / std::max(m.ls, kLsFloor)};
}

NormalizationContext NormalizationContext::over(std::span<const EdgeMetrics> metrics,
                                                std::uint64_t snapshot_id) {
  NormalizationContext ctx;
  ctx.snapshot_id = snapshot_id;
  if (metrics.empty()) return ctx;
  ctx.min = cost_features(metrics.front());
  ctx.max = ctx.min;
  for (const auto& m : metrics) {
    const auto f = cost_features(m);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      ctx.min[i] = std::min(ctx.min[i], f[i]);
      ctx.max[i] = std::max(ctx.max[i], f[i]);
    }
  }
  return ctx;
}

double normalize(double value, double min, double max) {
  if (min > max) throw InvalidArgument("normalize: min exceeds max");
  if (max == min) return 0.0;
  const double scaled = (value - min) / (max - min);
  if (scaled < 0.0 || scaled > 1.0) {
    g_clamp_count.fetch_add(1, std::memory_order_relaxed);
    return std::clamp(scaled, 0.0, 1.0);
  }
  return scaled;
}

std::uint64_t normalization_clamp_count() noexcept { return g_clamp_count.load(); }

double edge_cost_raw(const EdgeMetrics& m, const WeightVector& w) noexcept {
  const auto f = cost_features(m);
  double cost = 0.0;
  for (std::size_t i = 0; i < kFeatureCount; ++i) cost += w[i] * f[i];
  return cost;
}

double edge_cost_norm(const EdgeMetrics& m, const NormalizationContext& ctx, const WeightVector& w) {
  const auto f = cost_features(m);
  double cost = 0.0;
  for (std::size_t i = 0; i < kFeatureCount; ++i) cost += w[i] * normalize(f[i], ctx.min[i], ctx.max[i]);
  return cost;
}

bool check_acyclic(const ParentAssignment& a) {
  const std::size_t n = a.parent.size();
  if (a.sink >= n) return false;
  // 0 = unknown, 1 = on the current walk, 2 = known to reach the sink.
  std::vector<std::uint8_t> state(n, 0);
  state[a.sink] = 2;
  std::vector<NodeId> walk;
  for (NodeId start = 0; start < n; ++start) {
    if (state[start] == 2 || a.parent[start] == kNoParent) continue;
    walk.clear();
    NodeId v = start;
    while (state[v] == 0) {
      state[v] = 1;
      walk.push_back(v);
      const NodeId p = a.parent[v];
      if (p == kNoParent || p >= n) return false;
      v = p;
    }
    if (state[v] == 1) return false;
    for (NodeId u : walk) state[u] = 2;
  }
  return true;
}

std::vector<NodeId> path_to_sink(const ParentAssignment& a, NodeId v) {
  std::vector<NodeId> path{v};
  while (v != a.sink) {
    if (path.size() > a.parent.size()) throw InvalidAssignment("cycle in parent assignment");
    const NodeId p = a.parent.at(v);
    if (p == kNoParent || p >= a.parent.size())
      throw InvalidAssignment("node " + std::to_string(v) + " has no parent");
    path.push_back(p);
    v = p;
  }
  return path;
}

NetworkSnapshot::NetworkSnapshot(std::shared_ptr<const LinkGraph> graph, NodeId sink,
                                 std::vector<EdgeMetrics> metrics, std::vector<double> residual,
                                 double timestamp, std::vector<bool> active)
    : id_(g_next_snapshot_id.fetch_add(1)),
      graph_(std::move(graph)),
      sink_(sink),
      metrics_(std::move(metrics)),
      residual_(std::move(residual)),
      active_(std::move(active)),
      timestamp_(timestamp) {
  if (!graph_) throw InvalidArgument("snapshot needs a graph");
  const std::size_t n = graph_->node_count();
  if (sink_ >= n) throw InvalidArgument("snapshot sink is not a node");
  if (metrics_.size() != graph_->edge_count())
    throw InvalidArgument("snapshot needs metrics for every edge");
  if (residual_.empty()) residual_.assign(n, 0.0);
  if (residual_.size() != n) throw InvalidArgument("snapshot needs one residual energy per node");
  if (active_.empty()) active_.assign(n, true);
  if (active_.size() != n) throw InvalidArgument("active mask has the wrong length");
  if (!active_[sink_]) throw InvalidArgument("the sink must be active");

  // Breadth-first over usable edges only.
  hops_.assign(n, kUnreachable);
  hops_[sink_] = 0;
  std::deque<NodeId> frontier{sink_};
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop_front();
    for (std::uint32_t idx : graph_->in_edges(v)) {
      const NodeId u = graph_->edge(idx).from;
      if (active_[u] && hops_[u] == kUnreachable) {
        hops_[u] = hops_[v] + 1;
        frontier.push_back(u);
      }
    }
  }
  std::vector<NodeId> lost;
  for (NodeId v = 0; v < n; ++v) {
    if (!active_[v]) continue;
    if (hops_[v] == kUnreachable) lost.push_back(v);
    else if (v != sink_) members_.push_back(v);
  }
  if (!lost.empty())
    throw ConnectivityError("snapshot: " + std::to_string(lost.size()) + " active node(s) cannot reach the sink",
                            std::move(lost));

  std::vector<EdgeMetrics> live;
  live.reserve(metrics_.size());
  for (std::size_t e = 0; e < metrics_.size(); ++e)
    if (usable(e)) live.push_back(metrics_[e]);
  context_ = NormalizationContext::over(live, id_);
}

bool NetworkSnapshot::usable(std::size_t edge) const {
  const Edge& e = graph_->edge(edge);
  return active_[e.from] && active_[e.to];
}

std::vector<double> NetworkSnapshot::edge_costs(const WeightVector& w, CostMode mode) const {
  std::vector<double> costs(metrics_.size(), std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < metrics_.size(); ++e) {
    if (!usable(e)) continue;
    costs[e] = mode == CostMode::Normalized ? edge_cost_norm(metrics_[e], context_, w)
                                            : edge_cost_raw(metrics_[e], w);
  }
  return costs;
}

double edge_cost_norm(const NetworkSnapshot& snap, std::size_t edge, const NormalizationContext& ctx,
                      const WeightVector& w) {
  if (ctx.snapshot_id != snap.id())
    throw ContextError("normalization context belongs to snapshot " + std::to_string(ctx.snapshot_id) +
                       ", not " + std::to_string(snap.id()));
  return edge_cost_norm(snap.metrics(edge), ctx, w);
}

double path_cost(const NetworkSnapshot& snap, std::span<const NodeId> path, const WeightVector& w,
                 CostMode mode) {
  if (path.empty()) return 0.0;
  if (path.back() != snap.sink()) throw InvalidPath("path does not end at the sink");
  double cost = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto idx = snap.graph().find_edge(path[i], path[i + 1]);
    if (!idx)
      throw InvalidPath("no link from " + std::to_string(path[i]) + " to " + std::to_string(path[i + 1]));
    cost += mode == CostMode::Normalized ? edge_cost_norm(snap, *idx, snap.context(), w)
                                         : edge_cost_raw(snap.metrics(*idx), w);
  }
  return cost;
}

double assignment_cost(const ParentAssignment& a, const NetworkSnapshot& snap, const WeightVector& w,
                       CostMode mode) {
  const auto costs = snap.edge_costs(w, mode);
  return assignment_cost(a, snap, costs);
}

double assignment_cost(const ParentAssignment& a, const NetworkSnapshot& snap,
                       std::span<const double> edge_costs) {
  if (a.parent.size() != snap.node_count()) throw InvalidAssignment("assignment has the wrong size");
  const LinkGraph& g = snap.graph();
  std::vector<double> up(snap.node_count(), 0.0);
  for (NodeId v : snap.members()) {
    const NodeId p = a.parent[v];
    if (p == kNoParent) throw InvalidAssignment("node " + std::to_string(v) + " has no parent");
    up[v] = edge_costs[parent_edge(g, v, p)];
  }
  double total = 0.0;
  const std::size_t limit = snap.node_count();
  for (NodeId v : snap.members()) {
    NodeId u = v;
    std::size_t steps = 0;
    while (u != snap.sink()) {
      if (++steps > limit) throw InvalidAssignment("cycle detected in parent assignment");
      if (!snap.active(u)) throw InvalidAssignment("path runs through inactive node " + std::to_string(u));
      total += up[u];
      u = a.parent[u];
      if (u == kNoParent) throw InvalidAssignment("dangling parent pointer");
    }
  }
  return total;
}

double assignment_cost_by_edge_load(const ParentAssignment& a, const NetworkSnapshot& snap,
                                    std::span<const double> edge_costs) {
  if (!check_acyclic(a)) throw InvalidAssignment("cycle detected in parent assignment");
  const LinkGraph& g = snap.graph();
  const std::size_t n = snap.node_count();
  std::vector<std::uint32_t> depth(n, 0);
  for (NodeId v : snap.members()) depth[v] = static_cast<std::uint32_t>(path_to_sink(a, v).size() - 1);
  std::vector<NodeId> order = snap.members();
  std::stable_sort(order.begin(), order.end(), [&](NodeId x, NodeId y) { return depth[x] > depth[y]; });
  std::vector<double> load(n, 1.0);
  double total = 0.0;
  for (NodeId v : order) {
    const NodeId p = a.parent[v];
    total += load[v] * edge_costs[parent_edge(g, v, p)];
    if (p != snap.sink()) load[p] += load[v];
  }
  return total;
}

}  // namespace taburpl
