#include "taburpl/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace taburpl {

void TabuParams::validate() const {
  if (tenure == 0) throw InvalidArgument("tabu tenure must be positive");
  if (neighbourhood_cap == 0) throw InvalidArgument("neighbourhood cap must be positive");
  if (max_iterations == 0) throw InvalidArgument("max iterations must be positive");
  if (stall_limit == 0) throw InvalidArgument("stall limit must be positive");
  if (!(aspiration_factor > 0.0) || aspiration_factor > 1.0)
    throw InvalidArgument("aspiration factor must lie in (0, 1]");
}

void TabuList::add(Move move, std::size_t iteration) { entries_.push_back({move, iteration}); }

bool TabuList::is_tabu(Move move, std::size_t iteration) const {
  for (const auto& e : entries_)
    if (e.move == move && iteration > e.added && iteration <= e.added + tenure_) return true;
  return false;
}

void TabuList::expire(std::size_t iteration) {
  while (!entries_.empty() && entries_.front().added + tenure_ < iteration) entries_.pop_front();
}

const char* termination_name(Termination t) noexcept {
  switch (t) {
    case Termination::MaxIterations: return "max-iter";
    case Termination::Stall: return "stall";
    case Termination::Aspiration: return "aspiration";
    case Termination::EmptyNeighbourhood: return "empty-neighbourhood";
  }
  return "unknown";
}

void ConvergenceTrace::write(std::ostream& out) const {
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < best_cost.size(); ++i)
    out << (i + 1) << ' ' << best_cost[i] << ' ' << current_cost[i] << ' ' << tabu_length[i] << '\n';
  out.precision(old);
}

namespace {

/// Rooted-tree view of an assignment: parent edges, cumulative path costs,
/// subtree sizes and an Euler interval per node for O(1) descendant tests.
struct Tree {
  std::vector<std::uint32_t> parent_edge;
  std::vector<double> path_cost;
  std::vector<std::uint32_t> subtree;
  std::vector<std::uint32_t> enter;
  std::vector<std::uint32_t> leave;
  double total = 0.0;

  bool descends_from(NodeId q, NodeId v) const { return enter[v] <= enter[q] && enter[q] < leave[v]; }
};

Tree build_tree(const ParentAssignment& a, const NetworkSnapshot& snap, std::span<const double> costs) {
  const LinkGraph& g = snap.graph();
  const std::size_t n = snap.node_count();
  Tree t;
  t.parent_edge.assign(n, 0);
  t.path_cost.assign(n, 0.0);
  t.subtree.assign(n, 1);
  t.enter.assign(n, 0);
  t.leave.assign(n, 0);

  std::vector<std::vector<NodeId>> children(n);
  for (NodeId v : snap.members()) {
    const NodeId p = a.parent[v];
    const auto idx = p == kNoParent ? std::nullopt : g.find_edge(v, p);
    if (!idx) throw InvalidAssignment("node " + std::to_string(v) + " has no valid parent link");
    t.parent_edge[v] = *idx;
    children[p].push_back(v);
  }

  // Iterative DFS from the sink.
  std::uint32_t clock = 0;
  std::size_t visited = 0;
  std::vector<std::pair<NodeId, std::size_t>> stack{{snap.sink(), 0}};
  t.enter[snap.sink()] = clock++;
  std::vector<NodeId> preorder;
  while (!stack.empty()) {
    auto& [v, next] = stack.back();
    if (next < children[v].size()) {
      const NodeId c = children[v][next++];
      t.enter[c] = clock++;
      t.path_cost[c] = costs[t.parent_edge[c]] + t.path_cost[v];
      preorder.push_back(c);
      ++visited;
      stack.push_back({c, 0});
    } else {
      t.leave[v] = clock;
      stack.pop_back();
    }
  }
  if (visited != snap.members().size()) throw InvalidAssignment("assignment contains a cycle");
  for (auto it = preorder.rbegin(); it != preorder.rend(); ++it) {
    const NodeId p = a.parent[*it];
    if (p != snap.sink()) t.subtree[p] += t.subtree[*it];
  }
  for (NodeId v : snap.members()) t.total += t.path_cost[v];
  return t;
}

struct Neighbourhood {
  std::vector<Move> moves;
  std::vector<double> deltas;
};

Neighbourhood enumerate_moves(const ParentAssignment& a, const NetworkSnapshot& snap, const Tree& tree,
                              std::span<const double> costs, std::size_t cap, Rng& rng) {
  const LinkGraph& g = snap.graph();
  Neighbourhood hood;
  for (NodeId v : snap.members()) {
    const NodeId p = a.parent[v];
    const double old_up = costs[tree.parent_edge[v]] + tree.path_cost[p];
    for (std::uint32_t idx : g.out_edges(v)) {
      if (!snap.usable(idx)) continue;
      const NodeId q = g.edge(idx).to;
      if (q == p || tree.descends_from(q, v)) continue;
      hood.moves.push_back({v, q});
      hood.deltas.push_back(tree.subtree[v] * (costs[idx] + tree.path_cost[q] - old_up));
    }
  }
  if (hood.moves.size() > cap) {
    // Partial Fisher-Yates, then restore (node, parent) order.
    std::vector<std::size_t> pick(hood.moves.size());
    std::iota(pick.begin(), pick.end(), 0);
    for (std::size_t i = 0; i < cap; ++i) std::swap(pick[i], pick[i + rng.below(pick.size() - i)]);
    pick.resize(cap);
    std::sort(pick.begin(), pick.end());
    Neighbourhood sampled;
    sampled.moves.reserve(cap);
    sampled.deltas.reserve(cap);
    for (std::size_t i : pick) {
      sampled.moves.push_back(hood.moves[i]);
      sampled.deltas.push_back(hood.deltas[i]);
    }
    return sampled;
  }
  return hood;
}

void check_start(const ParentAssignment& a, const NetworkSnapshot& snap) {
  if (!is_feasible(a, snap)) throw InvalidAssignment("starting assignment is not a feasible sink-rooted tree");
}

}  // namespace

bool is_feasible(const ParentAssignment& a, const NetworkSnapshot& snap) {
  if (a.parent.size() != snap.node_count() || a.sink != snap.sink()) return false;
  for (NodeId v : snap.members()) {
    const NodeId p = a.parent[v];
    if (p == kNoParent || p >= snap.node_count()) return false;
    const auto idx = snap.graph().find_edge(v, p);
    if (!idx || !snap.usable(*idx)) return false;
  }
  return check_acyclic(a);
}

ParentAssignment initial_solution(const NetworkSnapshot& snap, std::span<const double> edge_costs) {
  const LinkGraph& g = snap.graph();
  ParentAssignment a{snap.sink(), std::vector<NodeId>(snap.node_count(), kNoParent)};
  for (NodeId v : snap.members()) {
    NodeId best = kNoParent;
    std::uint32_t best_hops = kUnreachable;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::uint32_t idx : g.out_edges(v)) {
      if (!snap.usable(idx)) continue;
      const NodeId q = g.edge(idx).to;
      const std::uint32_t h = snap.hops(q);
      const double c = edge_costs[idx];
      if (h < best_hops || (h == best_hops && (c < best_cost || (c == best_cost && q < best)))) {
        best = q;
        best_hops = h;
        best_cost = c;
      }
    }
    if (best == kNoParent)
      throw ConnectivityError("initial_solution: node " + std::to_string(v) + " has no usable parent", {v});
    a.parent[v] = best;
  }
  return a;
}

std::vector<Move> generate_moves(const ParentAssignment& current, const NetworkSnapshot& snap,
                                 std::size_t cap, Rng& rng) {
  const std::vector<double> zero(snap.graph().edge_count(), 0.0);
  const Tree tree = build_tree(current, snap, zero);
  return enumerate_moves(current, snap, tree, zero, cap, rng).moves;
}

std::vector<ParentAssignment> generate_neighbours(const ParentAssignment& current,
                                                  const NetworkSnapshot& snap, std::size_t cap, Rng& rng) {
  std::vector<ParentAssignment> out;
  for (const Move& m : generate_moves(current, snap, cap, rng)) {
    out.push_back(current);
    out.back().parent[m.node] = m.parent;
  }
  return out;
}

std::size_t select_best_non_tabu(std::span<const Move> moves, std::span<const double> costs,
                                 const TabuList& tabu, std::size_t iteration, double best_cost,
                                 double aspiration_factor) {
  if (moves.empty() || moves.size() != costs.size())
    throw InvalidArgument("select_best_non_tabu: need one cost per candidate and at least one candidate");
  const double threshold = aspiration_factor * best_cost;
  auto better = [&](std::size_t i, std::size_t j) {
    return costs[i] < costs[j] || (costs[i] == costs[j] && moves[i] < moves[j]);
  };
  std::optional<std::size_t> chosen;
  std::size_t overall = 0;
  for (std::size_t i = 0; i < moves.size(); ++i) {
    if (better(i, overall)) overall = i;
    const bool admissible = !tabu.is_tabu(moves[i], iteration) || costs[i] < threshold;
    if (admissible && (!chosen || better(i, *chosen))) chosen = i;
  }
  return chosen.value_or(overall);
}

TabuResult tabu_search(const NetworkSnapshot& snap, const WeightVector& w, const TabuParams& params,
                       CostMode mode, const std::optional<ParentAssignment>& start) {
  params.validate();
  const std::vector<double> costs = snap.edge_costs(w, mode);
  ParentAssignment current = start ? *start : initial_solution(snap, costs);
  check_start(current, snap);

  Rng rng(params.seed);
  TabuList tabu(params.tenure);
  Tree tree = build_tree(current, snap, costs);

  TabuResult result;
  result.best = current;
  result.best_cost = tree.total;
  result.trace.initial_cost = tree.total;
  result.trace.reason = Termination::MaxIterations;

  if (params.stop_below && result.best_cost < *params.stop_below) {
    result.trace.reason = Termination::Aspiration;
    return result;
  }

  std::size_t stall = 0;
  for (std::size_t k = 1; k <= params.max_iterations; ++k) {
    Neighbourhood hood = enumerate_moves(current, snap, tree, costs, params.neighbourhood_cap, rng);
    if (hood.moves.empty()) {
      result.trace.best_cost.push_back(result.best_cost);
      result.trace.current_cost.push_back(tree.total);
      result.trace.tabu_length.push_back(tabu.size());
      result.trace.reason = Termination::EmptyNeighbourhood;
      break;
    }
    std::vector<double> candidate(hood.deltas.size());
    for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] = tree.total + hood.deltas[i];

    tabu.expire(k);
    const std::size_t pick =
        select_best_non_tabu(hood.moves, candidate, tabu, k, result.best_cost, params.aspiration_factor);
    const Move move = hood.moves[pick];
    current.parent[move.node] = move.parent;
    tree = build_tree(current, snap, costs);

    if (tree.total < result.best_cost) {
      result.best = current;
      result.best_cost = tree.total;
      result.trace.last_improvement = k;
      stall = 0;
    } else {
      ++stall;
    }
    tabu.add(move, k);

    result.trace.best_cost.push_back(result.best_cost);
    result.trace.current_cost.push_back(tree.total);
    result.trace.tabu_length.push_back(tabu.size());

    if (params.stop_below && result.best_cost < *params.stop_below) {
      result.trace.reason = Termination::Aspiration;
      break;
    }
    if (stall >= params.stall_limit) {
      result.trace.reason = Termination::Stall;
      break;
    }
  }
  return result;
}

OptimalResult brute_force_optimal(const NetworkSnapshot& snap, const WeightVector& w, CostMode mode) {
  if (snap.node_count() > kBruteForceNodeLimit)
    throw SizeLimitError("brute_force_optimal: " + std::to_string(snap.node_count()) +
                         " nodes exceeds the limit of " + std::to_string(kBruteForceNodeLimit));
  const std::vector<double> costs = snap.edge_costs(w, mode);
  const LinkGraph& g = snap.graph();
  const auto& members = snap.members();

  std::vector<std::vector<NodeId>> options(members.size());
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::uint32_t idx : g.out_edges(members[i]))
      if (snap.usable(idx)) options[i].push_back(g.edge(idx).to);

  ParentAssignment work{snap.sink(), std::vector<NodeId>(snap.node_count(), kNoParent)};
  OptimalResult best;
  best.cost = std::numeric_limits<double>::infinity();

  // Depth-first over members; a choice is pruned when following already
  // assigned parents from it leads back to the node being assigned.
  auto closes_cycle = [&](NodeId v, NodeId q) {
    NodeId u = q;
    while (u != snap.sink() && u != kNoParent) {
      if (u == v) return true;
      u = work.parent[u];
    }
    return false;
  };
  auto recurse = [&](auto&& self, std::size_t i) -> void {
    if (i == members.size()) {
      ++best.assignments_visited;
      const double c = assignment_cost(work, snap, costs);
      if (c < best.cost) {
        best.cost = c;
        best.assignment = work;
      }
      return;
    }
    const NodeId v = members[i];
    for (NodeId q : options[i]) {
      if (closes_cycle(v, q)) continue;
      work.parent[v] = q;
      self(self, i + 1);
    }
    work.parent[v] = kNoParent;
  };
  recurse(recurse, 0);
  if (!std::isfinite(best.cost)) throw ConnectivityError("brute_force_optimal: no feasible assignment", {});
  return best;
}

}  // namespace taburpl
