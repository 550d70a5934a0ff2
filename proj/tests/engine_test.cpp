#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support/testkit.hpp"
#include "taburpl/analysis.hpp"
#include "taburpl/engine.hpp"

using namespace taburpl;

namespace {

// Source 1 next to the sink over a perfect link.
Deployment two_node_deployment() {
  Deployment d;
  d.field.nodes = {{0.0, 0.0}, {10.0, 0.0}};
  d.field.area = Area{20.0, 20.0};
  d.graph = std::make_shared<const LinkGraph>(2, std::vector<Edge>{{0, 1, 10.0, 1.0}, {1, 0, 10.0, 1.0}});
  return d;
}

SimConfig quick(std::size_t nodes = 12, double duration = 200.0) {
  SimConfig c;
  c.nodes = nodes;
  c.area = Area{300.0, 300.0};
  c.duration = duration;
  c.rate = 2.0;
  c.radio.range = 120.0;
  c.snapshot_period = 50.0;
  c.redraw_until_connected = true;
  return c;
}

std::size_t count(const TraceLog& log, EventKind k) {
  return static_cast<std::size_t>(
      std::count_if(log.events.begin(), log.events.end(), [k](const TraceEvent& e) { return e.kind == k; }));
}

}  // namespace

TEST(Radio, PerBitEnergiesFollowCurrentTimesVoltageOverRate) {
  const RadioEnergyParams r;
  EXPECT_NEAR(r.e_tx_per_bit(), 2.088e-7, 1e-10);
  EXPECT_NEAR(r.e_rx_per_bit(), 2.364e-7, 1e-10);
  EXPECT_DOUBLE_EQ(r.airtime(4096), 4096.0 / 250e3);
}

TEST(SnapshotBytes, HeaderOnlyAndWorkedRound) {
  const SnapshotAccounting acc;
  EXPECT_EQ(acc.message_bytes(0), 18u);
  EXPECT_EQ(acc.message_bytes(6), 54u);
  EXPECT_EQ(acc.round_bytes(50, 4.1), 2130.0);
  EXPECT_NEAR(SnapshotAccounting::control_rate(2130.0, 90.0), 189.3, 0.1);
  const std::vector<std::size_t> k{0, 1, 2};
  EXPECT_EQ(acc.round_bytes(k), 18u + 24u + 30u);
}

TEST(SnapshotBytes, EmissionOverAGraph) {
  // sink 0 hears 1 and 2; 1 and 2 hear each other; 3 is dead
  auto g = testkit::undirected(4, {{0, 1}, {0, 2}, {1, 2}, {2, 3}});
  const std::vector<bool> alive{true, true, true, false};
  const auto em = emit_snapshot(*g, alive, SnapshotAccounting{});
  EXPECT_EQ(em.neighbours, (std::vector<std::size_t>{2, 2, 2, 0}));
  EXPECT_EQ(em.own_bytes, (std::vector<std::size_t>{30, 30, 30, 0}));
  EXPECT_EQ(em.heard_bytes, (std::vector<std::size_t>{60, 60, 60, 0}));
  EXPECT_EQ(em.total_bytes, 90u);
  EXPECT_NEAR(SnapshotAccounting::control_energy(30, 60, RadioEnergyParams{}),
              240.0 * 2.088e-7 + 480.0 * 2.364e-7, 1e-15);
  EXPECT_THROW(emit_snapshot(*g, std::vector<bool>(3, true), SnapshotAccounting{}), InvalidArgument);
}

TEST(Transmit, PerfectAndDeadLinks) {
  taburpl::Rng rng(1);
  LinkStats s;
  const auto ok = transmit(1.0, 7, rng, &s);
  EXPECT_EQ(ok.attempts, 1u);
  EXPECT_TRUE(ok.delivered);
  EXPECT_EQ(s.tx_count(), 1u);
  EXPECT_DOUBLE_EQ(s.etx(), 1.0);
  const auto lost = transmit(0.0, 3, rng, &s);
  EXPECT_EQ(lost.attempts, 3u);
  EXPECT_FALSE(lost.delivered);
  EXPECT_EQ(s.tx_count(), 4u);
  EXPECT_EQ(s.ack_count(), 1u);
  EXPECT_DOUBLE_EQ(s.etx(), 0.75 + 0.25 * 3.0);
  EXPECT_THROW(transmit(1.0, 0, rng), InvalidArgument);
}

TEST(Transmit, HalfDeliveryNeedsTwoAttemptsOnAverage) {
  taburpl::Rng rng(2);
  double total = 0.0;
  for (int i = 0; i < 10000; ++i) total += transmit(0.5, 1000, rng).attempts;
  EXPECT_NEAR(total / 10000.0, 2.0, 0.1);
}

TEST(PerHopDelay, Examples) {
  EXPECT_NEAR(per_hop_delay(0.0, 5e-3, 1e-6), 4.999e-3, 1e-15);
  const double t_air = 4096.0 / 250e3;
  EXPECT_EQ(per_hop_delay(0.0, t_air, t_air), 0.0);
  EXPECT_EQ(per_hop_delay(0.0, 1e-3, 2e-3), 0.0);
}

TEST(Run, TwoNodeLosslessNetwork) {
  SimConfig cfg;
  cfg.nodes = 2;
  cfg.rate = 2.0;
  cfg.duration = 10.0;
  TraceRecorder rec;
  const auto r = simulate(cfg, two_node_deployment(), 1, rec);
  EXPECT_EQ(count(rec.log(), EventKind::Send), 20u);
  EXPECT_EQ(count(rec.log(), EventKind::Recv), 20u);
  EXPECT_EQ(r.packets_delivered, 20u);
  EXPECT_EQ(compute_kpis(rec.log()).pdr, 1.0);
}

TEST(Run, NoTrafficLeavesOnlyControlAndEnergy) {
  SimConfig cfg = quick();
  cfg.rate = 0.0;
  const auto log = run(cfg, 3);
  EXPECT_EQ(count(log, EventKind::Send) + count(log, EventKind::Recv) + count(log, EventKind::Drop), 0u);
  EXPECT_EQ(count(log, EventKind::Ctrl), 4u * cfg.nodes);  // t = 50, 100, 150, 200
}

TEST(Run, SameSeedSameTrace) {
  const SimConfig cfg = quick();
  EXPECT_EQ(run(cfg, 5), run(cfg, 5));
  EXPECT_NE(run(cfg, 5).events, run(cfg, 6).events);
}

TEST(Run, SnapshotRoundsCarryExactBytes) {
  const SimConfig cfg = quick(20, 300.0);
  TraceRecorder rec;
  const auto r = simulate(cfg, 8, rec);
  ASSERT_EQ(r.snapshot_round_bytes.size(), 6u);
  std::size_t expected = 0;
  for (NodeId v = 0; v < cfg.nodes; ++v) expected += 18 + 6 * r.deployment.graph->degree(v);
  EXPECT_EQ(r.snapshot_round_bytes.front(), expected);
}

TEST(Run, DisconnectedDeploymentIsRejectedOrRedrawn) {
  SimConfig cfg = quick(30);
  cfg.area = Area{1000.0, 1000.0};
  cfg.radio.range = 150.0;
  cfg.redraw_until_connected = false;
  EXPECT_THROW(make_deployment(cfg, 1), ConnectivityError);
  cfg.area = Area{600.0, 600.0};
  cfg.redraw_until_connected = true;
  const auto d = make_deployment(cfg, 1);
  EXPECT_GE(d.seed, 1u);
  EXPECT_TRUE(orphans(*d.graph, d.field.sink).empty());
}

TEST(Run, ConfigValidation) {
  SimConfig cfg;
  cfg.duration = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = SimConfig{};
  cfg.rate = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = SimConfig{};
  cfg.retry_limit = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  EXPECT_NO_THROW(SimConfig{}.validate());
}

TEST(Run, TinyBatteriesKillNodes) {
  SimConfig cfg = quick(8, 300.0);
  cfg.initial_energy = 0.05;
  cfg.rate = 5.0;
  TraceRecorder rec;
  const auto r = simulate(cfg, 4, rec);
  const auto dead = std::count_if(r.death_time.begin(), r.death_time.end(), [](double t) { return t >= 0.0; });
  EXPECT_GT(dead, 0);
  bool saw_dead_drop = false;
  for (const auto& e : rec.log().events) saw_dead_drop |= e.kind == EventKind::Drop && e.why == DropReason::NodeDead;
  EXPECT_TRUE(saw_dead_drop || r.packets_in_flight == 0);
}

TEST(Protocols, NamesRoundTrip) {
  for (Protocol p : {Protocol::OF0, Protocol::EtxOf, Protocol::TabuUnnorm, Protocol::Taburpl})
    EXPECT_EQ(parse_protocol(protocol_name(p)), p);
  EXPECT_EQ(parse_protocol("taburpl"), Protocol::Taburpl);
  EXPECT_THROW(parse_protocol("rpl"), InvalidArgument);
}

TEST(Protocols, Of0PrefersFewerHops) {
  // a(2) hears b(1) over a good link and the sink over a poor one
  auto g = testkit::undirected(3, {{0, 1}, {1, 2}, {0, 2}});
  std::vector<EdgeMetrics> m(g->edge_count());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& e = g->edge(i);
    m[i].etx = (e.from == 2 && e.to == 0) ? 5.0 : 1.0;
  }
  const NetworkSnapshot s(g, 0, m, {}, 0.0);
  EXPECT_EQ(of0_assignment(s).parent[2], 0u);
  EXPECT_EQ(etx_assignment(s).parent[2], 1u);
}

TEST(Protocols, EtxPicksTheBetterOfEqualHopParents) {
  // source 3 may use 1 (ETX 3.0) or 2 (ETX 1.2), both one hop from the sink
  auto g = testkit::undirected(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  std::vector<EdgeMetrics> m(g->edge_count());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& e = g->edge(i);
    if (e.from == 3) m[i].etx = e.to == 1 ? 3.0 : 1.2;
  }
  const NetworkSnapshot s(g, 0, m, {}, 0.0);
  EXPECT_EQ(etx_assignment(s).parent[3], 2u);
  EXPECT_EQ(of0_assignment(s).parent[3], 1u);
}

TEST(EngineProperty, Of0PathsAreHopMinimal) {
  taburpl::Rng rng(601);
  for (int i = 0; i < 1000; ++i) {
    const auto s = testkit::random_snapshot(rng, 3 + rng.below(20));
    const auto a = of0_assignment(s);
    const auto h = hop_counts(s.graph(), s.sink());
    for (NodeId v : s.members()) ASSERT_EQ(path_to_sink(a, v).size() - 1, h[v]) << "case " << i;
    ASSERT_TRUE(is_feasible(etx_assignment(s), s));
  }
}

TEST(EngineProperty, TabuFromOf0NeverWorseThanOf0) {
  taburpl::Rng rng(602);
  for (int i = 0; i < 1000; ++i) {
    const auto s = testkit::random_snapshot(rng, 3 + rng.below(12));
    const auto w = testkit::random_weights(rng);
    TabuParams p;
    p.max_iterations = 40;
    p.seed = rng.next();
    const auto of0 = of0_assignment(s);
    const auto r = tabu_search(s, w, p, CostMode::Normalized, of0);
    ASSERT_LE(r.best_cost, assignment_cost(of0, s, w) + 1e-12) << "case " << i;
    ASSERT_TRUE(is_feasible(reoptimize_root(s, Protocol::Taburpl, w, p), s));
  }
}

TEST(EngineProperty, ConservationOverRandomScenarios) {
  const auto r = testkit::simulation_properties(1000);
  EXPECT_TRUE(r.energy.ok()) << r.energy.first_failure;
  EXPECT_TRUE(r.packets.ok()) << r.packets.first_failure;
  EXPECT_TRUE(r.pdr_plr.ok()) << r.pdr_plr.first_failure;
  EXPECT_TRUE(r.dead_silent.ok()) << r.dead_silent.first_failure;
  EXPECT_GE(r.energy.cases, 1000u);
  EXPECT_GE(r.pdr_plr.cases, 900u);
}
