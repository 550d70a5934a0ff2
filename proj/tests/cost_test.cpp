#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/testkit.hpp"
#include "taburpl/cost.hpp"

using namespace taburpl;

namespace {

WeightVector only(Feature f) {
  FeatureVector w{};
  w[static_cast<std::size_t>(f)] = 1.0;
  return WeightVector(w);
}

}  // namespace

TEST(Weights, BalancedDefault) {
  const auto w = WeightVector::balanced();
  EXPECT_DOUBLE_EQ(w[Feature::ResidualEnergy], 0.18);
  EXPECT_DOUBLE_EQ(w[Feature::TxEnergy], 0.22);
  EXPECT_DOUBLE_EQ(w[Feature::Distance], 0.12);
  EXPECT_DOUBLE_EQ(w[Feature::HopCount], 0.08);
  EXPECT_DOUBLE_EQ(w[Feature::Etx], 0.25);
  EXPECT_DOUBLE_EQ(w[Feature::LinkStability], 0.15);
}

TEST(Weights, RejectsInvalidVectors) {
  EXPECT_THROW(WeightVector(FeatureVector{0.5, 0.5, 0.1, 0, 0, 0}), InvalidArgument);
  EXPECT_THROW(WeightVector(FeatureVector{1.2, -0.2, 0, 0, 0, 0}), InvalidArgument);
  EXPECT_THROW(WeightVector(FeatureVector{1.0 + 2e-9, 0, 0, 0, 0, 0}), InvalidArgument);
  EXPECT_NO_THROW(WeightVector(FeatureVector{1.0 + 5e-10, 0, 0, 0, 0, 0}));
}

TEST(Weights, DroppingAFeatureRescalesTheRest) {
  const auto w = WeightVector::balanced().without(Feature::HopCount);
  EXPECT_EQ(w[Feature::HopCount], 0.0);
  EXPECT_NEAR(w[Feature::Etx], 0.25 / 0.92, 1e-15);
  double sum = 0.0;
  for (double x : w.values()) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Normalize, Examples) {
  EXPECT_DOUBLE_EQ(normalize(2, 1, 3), 0.5);
  EXPECT_DOUBLE_EQ(normalize(1, 1, 3), 0.0);
  EXPECT_DOUBLE_EQ(normalize(5, 5, 5), 0.0);
  EXPECT_THROW(normalize(1, 3, 1), InvalidArgument);
}

TEST(Normalize, OutOfRangeIsClampedAndCounted) {
  const auto before = normalization_clamp_count();
  EXPECT_DOUBLE_EQ(normalize(4, 1, 3), 1.0);
  EXPECT_DOUBLE_EQ(normalize(0, 1, 3), 0.0);
  EXPECT_EQ(normalization_clamp_count(), before + 2);
}

TEST(RawCost, SingleTermIsolation) {
  EdgeMetrics m;
  m.hops = 3.0;
  EXPECT_DOUBLE_EQ(edge_cost_raw(m, only(Feature::HopCount)), 3.0);
  m.residual_energy = 0.0;
  EXPECT_DOUBLE_EQ(edge_cost_raw(m, only(Feature::ResidualEnergy)), 20.0);
  m.ls = 0.25;
  EXPECT_DOUBLE_EQ(edge_cost_raw(m, only(Feature::LinkStability)), 4.0);
}

TEST(RawCost, WeightedSumOfAllTerms) {
  const EdgeMetrics m{50.0, 0.002, 120.0, 2.0, 1.5, 0.8};
  const auto w = WeightVector::balanced();
  const double expected = 0.18 / 50.0 + 0.22 * 0.002 + 0.12 * 120.0 + 0.08 * 2.0 + 0.25 * 1.5 + 0.15 / 0.8;
  EXPECT_NEAR(edge_cost_raw(m, w), expected, 1e-12);
}

namespace {

// Edges 1->0 and 0->1 carry the per-feature extremes, 2->0 sits halfway on
// every feature.
NetworkSnapshot extremes() {
  std::vector<Edge> edges{{0, 1, 1.0, 1.0}, {1, 0, 1.0, 1.0}, {2, 0, 1.0, 1.0}, {0, 2, 1.0, 1.0}};
  auto g = std::make_shared<const LinkGraph>(3, edges);
  // cheap: high residual, low everything else, perfect stability
  const EdgeMetrics lo{100.0, 1.0, 10.0, 1.0, 1.0, 1.0};
  const EdgeMetrics hi{1.0, 3.0, 30.0, 3.0, 3.0, 0.5};
  // 1/E_r halfway between 0.01 and 1, 1/L_s halfway between 1 and 2
  const EdgeMetrics mid{1.0 / 0.505, 2.0, 20.0, 2.0, 2.0, 1.0 / 1.5};
  return NetworkSnapshot(g, 0, {hi, lo, mid, hi}, {}, 0.0);
}

}  // namespace

TEST(NormCost, ExtremesAndMidpoint) {
  const auto s = extremes();
  const auto w = WeightVector::balanced();
  EXPECT_DOUBLE_EQ(edge_cost_norm(s, 1, s.context(), w), 0.0);
  EXPECT_NEAR(edge_cost_norm(s, 0, s.context(), w), 1.0, 1e-12);
  EXPECT_NEAR(edge_cost_norm(s, 2, s.context(), w), 0.5, 1e-12);
}

TEST(NormCost, StaleContextIsRejected) {
  const auto a = extremes();
  const auto b = extremes();
  EXPECT_NE(a.id(), b.id());
  EXPECT_THROW(edge_cost_norm(a, 0, b.context(), WeightVector::balanced()), ContextError);
}

TEST(PathCost, EmptyPathAndAdditivity) {
  const auto s = extremes();
  const auto w = WeightVector::balanced();
  const std::vector<NodeId> sink_only{0};
  EXPECT_EQ(path_cost(s, sink_only, w), 0.0);
  // chain 1 -> 2 -> 0 with two midpoint edges
  std::vector<Edge> edges{{1, 2, 1.0, 1.0}, {2, 0, 1.0, 1.0}, {3, 0, 1.0, 1.0}, {0, 3, 1.0, 1.0}};
  auto g = std::make_shared<const LinkGraph>(4, edges);
  const EdgeMetrics lo{100.0, 1.0, 10.0, 1.0, 1.0, 1.0};
  const EdgeMetrics hi{1.0, 3.0, 30.0, 3.0, 3.0, 0.5};
  const EdgeMetrics mid{1.0 / 0.505, 2.0, 20.0, 2.0, 2.0, 1.0 / 1.5};
  const NetworkSnapshot chain(g, 0, {mid, mid, lo, hi}, {}, 0.0);
  const std::vector<NodeId> path{1, 2, 0};
  EXPECT_NEAR(path_cost(chain, path, w), 1.0, 1e-12);
  const std::vector<NodeId> broken{1, 0};
  EXPECT_THROW(path_cost(chain, broken, w), InvalidPath);
  const std::vector<NodeId> not_at_sink{1, 2};
  EXPECT_THROW(path_cost(chain, not_at_sink, w), InvalidPath);
}

TEST(PathCost, ThreeCandidatePathsPickB) {
  // Node 1 reaches the sink over 2-3 (A), 4-3 (B) or 2-5 (C). Raw cost with
  // all weight on the hop feature lets each edge carry an injected cost.
  std::vector<Edge> edges{{1, 2, 1, 1}, {1, 4, 1, 1}, {2, 3, 1, 1}, {2, 5, 1, 1},
                          {3, 0, 1, 1}, {4, 3, 1, 1}, {5, 0, 1, 1}};
  auto g = std::make_shared<const LinkGraph>(6, edges);
  std::vector<EdgeMetrics> m(edges.size());
  const double cost[] = {6, 3, 6, 4, 3, 6, 3};
  for (std::size_t i = 0; i < m.size(); ++i) m[i].hops = cost[i];
  const NetworkSnapshot s(g, 0, m, {}, 0.0);
  const auto w = only(Feature::HopCount);
  const std::vector<NodeId> a{1, 2, 3, 0}, b{1, 4, 3, 0}, c{1, 2, 5, 0};
  const double ca = path_cost(s, a, w, CostMode::Raw);
  const double cb = path_cost(s, b, w, CostMode::Raw);
  const double cc = path_cost(s, c, w, CostMode::Raw);
  EXPECT_EQ(ca, 15.0);
  EXPECT_EQ(cb, 12.0);
  EXPECT_EQ(cc, 13.0);
  EXPECT_LT(cb, std::min(ca, cc));
}

TEST(AssignmentCost, StarAndSingleNode) {
  taburpl::Rng rng(301);
  auto star = testkit::undirected(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  const NetworkSnapshot s(star, 0, testkit::random_metrics(rng, *star), {}, 0.0);
  const auto w = WeightVector::balanced();
  ParentAssignment a{0, {kNoParent, 0, 0, 0, 0}};
  double sum = 0.0;
  for (NodeId v = 1; v < 5; ++v) sum += edge_cost_norm(s, *star->find_edge(v, 0), s.context(), w);
  EXPECT_NEAR(assignment_cost(a, s, w), sum, 1e-12);

  auto pair = testkit::undirected(2, {{0, 1}});
  const NetworkSnapshot p(pair, 0, testkit::random_metrics(rng, *pair), {}, 0.0);
  ParentAssignment one{0, {kNoParent, 0}};
  EXPECT_DOUBLE_EQ(assignment_cost(one, p, w, CostMode::Raw), edge_cost_raw(p.metrics(*pair->find_edge(1, 0)), w));
}

TEST(AssignmentCost, CyclesAreRejected) {
  auto g = testkit::undirected(3, {{0, 1}, {1, 2}});
  taburpl::Rng rng(302);
  const NetworkSnapshot s(g, 0, testkit::random_metrics(rng, *g), {}, 0.0);
  ParentAssignment loop{0, {kNoParent, 2, 1}};
  EXPECT_FALSE(check_acyclic(loop));
  EXPECT_THROW(assignment_cost(loop, s, WeightVector::balanced()), InvalidAssignment);
  EXPECT_THROW(path_to_sink(loop, 1), InvalidAssignment);
  ParentAssignment tree{0, {kNoParent, 0, 1}};
  EXPECT_TRUE(check_acyclic(tree));
  EXPECT_EQ(path_to_sink(tree, 2), (std::vector<NodeId>{2, 1, 0}));
}

TEST(AssignmentCost, FiveNodeSnapshotMatchesPathEnumeration) {
  taburpl::Rng rng(303);
  const auto s = testkit::random_snapshot(rng, 5);
  const auto w = WeightVector::balanced();
  const auto costs = s.edge_costs(w, CostMode::Normalized);
  const auto a = initial_solution(s, costs);
  // walk every member's parent chain by hand
  double expected = 0.0;
  for (NodeId v : s.members()) {
    for (NodeId u = v; u != s.sink(); u = a.parent[u])
      expected += edge_cost_norm(s.metrics(*s.graph().find_edge(u, a.parent[u])), s.context(), w);
  }
  EXPECT_NEAR(assignment_cost(a, s, w), expected, 1e-12);
}

TEST(Snapshot, ValidatesInputs) {
  auto g = testkit::undirected(3, {{0, 1}, {1, 2}});
  EXPECT_THROW(NetworkSnapshot(g, 5, std::vector<EdgeMetrics>(4), {}, 0.0), InvalidArgument);
  EXPECT_THROW(NetworkSnapshot(g, 0, std::vector<EdgeMetrics>(3), {}, 0.0), InvalidArgument);
  auto split = testkit::undirected(3, {{0, 1}});
  EXPECT_THROW(NetworkSnapshot(split, 0, std::vector<EdgeMetrics>(2), {}, 0.0), ConnectivityError);
  // an inactive orphan is fine
  const NetworkSnapshot ok(split, 0, std::vector<EdgeMetrics>(2), {}, 0.0, {true, true, false});
  EXPECT_EQ(ok.members(), std::vector<NodeId>{1});
}

TEST(CostProperty, NormalizedCostInUnitRange) {
  const auto r = testkit::normalization_range(1000);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(CostProperty, ArgminInvariantUnderFeatureRescaling) {
  const auto r = testkit::argmin_invariance(1000);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(CostProperty, DualAggregationAgrees) {
  const auto r = testkit::dual_aggregation(1000);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(CostProperty, MonotoneInEachFeature) {
  taburpl::Rng rng(304);
  for (int i = 0; i < 1000; ++i) {
    const auto s = testkit::random_snapshot(rng, 3 + rng.below(6));
    const auto w = testkit::random_weights(rng);
    const auto& ctx = s.context();
    const std::size_t e = rng.below(s.graph().edge_count());
    const EdgeMetrics base = s.metrics(e);
    EdgeMetrics worse = base;
    switch (static_cast<Feature>(rng.below(kFeatureCount))) {
      case Feature::ResidualEnergy: worse.residual_energy *= rng.uniform(0.1, 1.0); break;
      case Feature::TxEnergy: worse.tx_energy *= rng.uniform(1.0, 3.0); break;
      case Feature::Distance: worse.distance *= rng.uniform(1.0, 3.0); break;
      case Feature::HopCount: worse.hops += rng.uniform(0.0, 3.0); break;
      case Feature::Etx: worse.etx += rng.uniform(0.0, 3.0); break;
      case Feature::LinkStability: worse.ls *= rng.uniform(0.1, 1.0); break;
    }
    ASSERT_GE(edge_cost_norm(worse, ctx, w), edge_cost_norm(base, ctx, w)) << "case " << i;
  }
}

TEST(CostProperty, WeightSumTolerance) {
  taburpl::Rng rng(305);
  for (int i = 0; i < 1000; ++i) {
    FeatureVector w{};
    double sum = 0.0;
    for (auto& x : w) sum += (x = rng.uniform());
    for (auto& x : w) x /= sum;
    const double eps = rng.uniform(-1e-8, 1e-8);
    w[0] += eps;
    if (std::abs(eps) > 1e-9 + 1e-15) {
      ASSERT_THROW((WeightVector(w)), InvalidArgument) << eps;
    } else if (std::abs(eps) < 1e-9 - 1e-15) {
      ASSERT_NO_THROW((WeightVector(w))) << eps;
    }
  }
}
