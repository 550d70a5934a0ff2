#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support/testkit.hpp"
#include "taburpl/analysis.hpp"
#include "taburpl/engine.hpp"

using namespace taburpl;

namespace {

// `sent` packets from node 1, the first `received` of them arriving at the
// sink after two hops and 5 ms.
TraceLog synthetic_trace(std::uint64_t sent, std::uint64_t received, double duration = 250.0) {
  TraceLog log;
  log.header.nodes = 3;
  log.header.duration = duration;
  log.header.payload_bytes = 512;
  log.header.initial_energy = 10.0;
  for (std::uint64_t p = 0; p < sent; ++p) {
    TraceEvent s;
    s.t = static_cast<double>(p);
    s.kind = EventKind::Send;
    s.node = 2;
    s.pkt = p;
    log.events.push_back(s);
    TraceEvent r = s;
    r.t += 0.005;
    r.kind = p < received ? EventKind::Recv : EventKind::Drop;
    r.node = p < received ? 0 : 1;
    r.hop = 2;
    r.attempts = 1;
    r.peer = p < received ? 1 : 0;
    log.events.push_back(r);
  }
  return log;
}

std::vector<SeededKpi> runs_with_pdr(const std::vector<double>& pdr) {
  std::vector<SeededKpi> out;
  for (std::size_t i = 0; i < pdr.size(); ++i) {
    SeededKpi s;
    s.seed = i + 1;
    s.kpi.pdr = pdr[i];
    s.kpi.energy_total = 10.0 + static_cast<double>(i);
    out.push_back(s);
  }
  return out;
}

const KpiDelta& find(const std::vector<KpiDelta>& ds, const std::string& name) {
  for (const auto& d : ds)
    if (d.name == name) return d;
  throw std::logic_error("no KPI " + name);
}

}  // namespace

TEST(Kpi, LosslessRun) {
  const auto k = compute_kpis(synthetic_trace(20, 20));
  EXPECT_EQ(k.pdr, 1.0);
  EXPECT_EQ(k.plr, 0.0);
  EXPECT_NEAR(k.throughput_bps, 327.68, 1e-9);
  EXPECT_NEAR(k.e2e_delay_ms, 5.0, 1e-9);
  EXPECT_DOUBLE_EQ(k.avg_path_length, 2.0);
}

TEST(Kpi, EightyPercentDelivery) {
  const auto k = compute_kpis(synthetic_trace(100, 80));
  EXPECT_DOUBLE_EQ(k.pdr, 0.8);
  EXPECT_NEAR(k.plr, 20.0, 1e-12);
  EXPECT_EQ(k.dropped, 20u);
}

TEST(Kpi, NoTrafficIsUndefined) {
  EXPECT_THROW(compute_kpis(synthetic_trace(0, 0)), UndefinedMetric);
}

TEST(Kpi, EnergyAndControlTotals) {
  auto log = synthetic_trace(4, 4, 60.0);
  TraceEvent c;
  c.t = 30.0;
  c.kind = EventKind::Ctrl;
  c.node = 1;
  c.bytes = 30;
  c.rx_bytes = 60;
  log.events.push_back(c);
  TraceEvent e;
  e.t = 30.0;
  e.kind = EventKind::Energy;
  e.node = 1;
  e.res = 9.5;
  log.events.push_back(e);
  const auto k = compute_kpis(log);
  EXPECT_EQ(k.control_messages, 1u);
  EXPECT_EQ(k.control_bytes, 30u);
  EXPECT_DOUBLE_EQ(k.control_bytes_per_min, 30.0);
  EXPECT_DOUBLE_EQ(k.energy_total, 0.5);
  EXPECT_DOUBLE_EQ(k.energy_mean_per_node, 0.5 / 3.0);
}

TEST(Kpi, StreamingMatchesBatch) {
  const SimConfig cfg = [] {
    SimConfig c;
    c.nodes = 15;
    c.area = Area{300.0, 300.0};
    c.radio.range = 120.0;
    c.duration = 200.0;
    c.rate = 3.0;
    c.snapshot_period = 40.0;
    c.redraw_until_connected = true;
    return c;
  }();
  KpiAccumulator acc;
  TraceRecorder rec;
  TraceTee tee({&acc, &rec});
  simulate(cfg, 9, tee);
  const auto a = acc.result();
  const auto b = compute_kpis(rec.log());
  for (const auto& f : kpi_fields()) {
    const double x = f.get(a), y = f.get(b);
    if (std::isnan(x)) EXPECT_TRUE(std::isnan(y)) << f.name;
    else EXPECT_EQ(x, y) << f.name;
  }
}

TEST(Lsr, MatchesAnIndependentCount) {
  SimConfig cfg;
  cfg.nodes = 20;
  cfg.area = Area{400.0, 400.0};
  cfg.radio.range = 130.0;
  cfg.duration = 150.0;
  cfg.rate = 2.0;
  cfg.snapshot_period = 50.0;
  cfg.redraw_until_connected = true;
  const auto log = run(cfg, 21);
  std::uint64_t ok = 0, tries = 0;
  for (const auto& e : log.events) {
    if (e.kind == EventKind::Recv) {
      ++ok;
      tries += e.attempts;
    } else if (e.kind == EventKind::Drop) {
      tries += e.attempts;
    }
  }
  ASSERT_GT(tries, 0u);
  const auto k = compute_kpis(log);
  EXPECT_EQ(k.hop_successes, ok);
  EXPECT_EQ(k.hop_attempts, tries);
  EXPECT_DOUBLE_EQ(k.lsr_mean, static_cast<double>(ok) / static_cast<double>(tries));
  const double per_link = compute_kpis(log, LsrWeighting::Links).lsr_mean;
  EXPECT_GT(per_link, 0.0);
  EXPECT_LE(per_link, 1.0);
}

TEST(Bootstrap, ConstantSampleHasZeroWidth) {
  const std::vector<double> xs(10, 3.5);
  const auto ci = bootstrap_ci(xs, 1000, 0.95, 4);
  EXPECT_DOUBLE_EQ(ci.mean, 3.5);
  EXPECT_DOUBLE_EQ(ci.lower, 3.5);
  EXPECT_DOUBLE_EQ(ci.upper, 3.5);
}

TEST(Bootstrap, Errors) {
  const std::vector<double> one{1.0};
  EXPECT_THROW(bootstrap_ci(one), InsufficientData);
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW(bootstrap_ci(two, 0), InvalidArgument);
  EXPECT_THROW(bootstrap_ci(two, 100, 1.0), InvalidArgument);
}

TEST(Bootstrap, CoverageOfTheNormalMean) {
  taburpl::Rng rng(801);
  int covered = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> xs(100);
    for (auto& x : xs) x = rng.normal();
    const auto ci = bootstrap_ci(xs, 2000, 0.95, rng.next());
    covered += ci.lower <= 0.0 && 0.0 <= ci.upper;
  }
  EXPECT_NEAR(covered / static_cast<double>(reps), 0.95, 0.04);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(quantile_sorted(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(xs, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(xs, 1.0), 4.0);
  EXPECT_THROW(quantile_sorted(std::vector<double>{}, 0.5), InsufficientData);
}

TEST(Ablation, IdenticalRunsGiveZeroDeltas) {
  const auto a = runs_with_pdr({0.9, 0.8, 0.85, 0.95});
  for (const auto& d : ablation_deltas(a, a, 500)) {
    if (std::isnan(d.full_mean)) continue;
    EXPECT_EQ(d.delta_percent, 0.0) << d.name;
    EXPECT_EQ(d.paired_difference.mean, 0.0) << d.name;
  }
}

TEST(Ablation, SignFollowsReducedMinusFull) {
  const auto full = runs_with_pdr({0.9, 0.8, 0.85, 0.95});
  auto reduced = runs_with_pdr({0.81, 0.72, 0.765, 0.855});
  std::reverse(reduced.begin(), reduced.end());  // pairing is by seed, not position
  const auto& pdr = find(ablation_deltas(full, reduced, 500), "pdr");
  EXPECT_NEAR(pdr.delta_percent, -10.0, 1e-9);
  EXPECT_LT(pdr.paired_difference.upper, 0.0);
}

TEST(Ablation, WorkedPercentages) {
  auto full = runs_with_pdr({0.90, 0.90, 0.90});
  auto reduced = runs_with_pdr({0.881, 0.881, 0.881});
  for (std::size_t i = 0; i < full.size(); ++i) reduced[i].kpi.energy_total = 1.043 * full[i].kpi.energy_total;
  const auto ds = ablation_deltas(full, reduced, 500);
  EXPECT_NEAR(find(ds, "pdr").delta_percent, 100.0 * (0.881 - 0.90) / 0.90, 1e-9);
  EXPECT_NEAR(find(ds, "pdr").delta_percent, -2.1, 0.05);
  EXPECT_NEAR(find(ds, "energy_total_j").delta_percent, 4.3, 1e-9);
}

TEST(Ablation, SeedListsMustMatch) {
  const auto full = runs_with_pdr({0.9, 0.8, 0.85});
  auto reduced = full;
  reduced.back().seed = 99;
  EXPECT_THROW(ablation_deltas(full, reduced), PairingError);
  EXPECT_THROW(ablation_deltas(std::span(full).first(1), std::span(full).first(1)), InsufficientData);
}

TEST(Correlation, ChainIsNearlyPerfect) {
  // nodes every 50 m along a line, range 60: hop count tracks distance exactly
  NodeField field;
  for (int i = 0; i < 12; ++i) field.nodes.push_back({50.0 * i, 0.0});
  RadioModel radio;
  radio.range = 60.0;
  const auto g = build_links(field, radio, 1, Connectivity::Require);
  const auto samples = distance_hop_samples(field, g);
  EXPECT_EQ(samples.size(), g.edge_count());
  const auto r = correlation_study(samples, 1000, 0.95, 3);
  EXPECT_NEAR(r.rho, 1.0, 1e-12);
  EXPECT_EQ(r.samples, samples.size());
  EXPECT_LE(r.ci.lower, r.rho);
}

TEST(Correlation, RandomFieldsArePositive) {
  const auto field = deploy_uniform(100, Area{}, 5);
  const auto g = build_links(field, RadioModel{}, 5, Connectivity::Allow);
  const auto r = correlation_study(distance_hop_samples(field, g), 500);
  EXPECT_GT(r.rho, 0.5);
  EXPECT_LE(r.ci.lower, r.rho);
  EXPECT_GE(r.ci.upper, r.rho);
}

TEST(Correlation, ShadowingWeakensTheDistanceHopLink) {
  RadioModel ideal;
  RadioModel shadowed;
  shadowed.kind = RadioKind::LogNormalShadowing;
  int layouts = 0, lower = 0;
  for (std::uint64_t seed = 1; layouts < 10 && seed < 500; ++seed) {
    const auto field = deploy_uniform(50, Area{}, seed);
    const auto a = build_links(field, ideal, seed, Connectivity::Allow);
    const auto b = build_links(field, shadowed, seed, Connectivity::Allow);
    if (!orphans(a, field.sink).empty() || !orphans(b, field.sink).empty()) continue;
    ++layouts;
    const double ra = correlation_study(distance_hop_samples(field, a), 200).rho;
    const double rb = correlation_study(distance_hop_samples(field, b), 200).rho;
    lower += rb < ra;
  }
  ASSERT_EQ(layouts, 10);
  EXPECT_EQ(lower, 10);
}

TEST(AnalysisProperty, BootstrapDeterminismAndNesting) {
  const auto r = testkit::bootstrap_determinism(1000);
  EXPECT_TRUE(r.ok()) << r.first_failure << " (" << r.failures << " failures)";
}

TEST(AnalysisProperty, DeliveredPathLengthIsAtLeastTheHopDistance) {
  taburpl::Rng rng(802);
  for (int i = 0; i < 1000; ++i) {
    SimConfig cfg = testkit::small_scenario(rng);
    cfg.protocol = Protocol::OF0;
    cfg.initial_energy = 1000.0;
    const std::uint64_t seed = rng.next();
    TraceRecorder rec;
    const auto r = simulate(cfg, seed, rec);
    const auto h = hop_counts(*r.deployment.graph, r.deployment.field.sink);
    const auto k = compute_kpis(rec.log());
    // CBR with a random phase sends at most floor(rate * T) + 1 packets per source
    const double per_source = std::floor(cfg.rate * cfg.duration) + 1.0;
    const double offered =
        per_source * static_cast<double>(cfg.frame_bits()) * static_cast<double>(cfg.nodes - 1) / cfg.duration;
    ASSERT_LE(k.throughput_bps, offered + 1e-9) << "case " << i;
    std::vector<NodeId> origin;
    for (const auto& e : rec.log().events) {
      if (e.kind == EventKind::Send) {
        if (e.pkt >= origin.size()) origin.resize(e.pkt + 1, kNoNode);
        origin[e.pkt] = e.node;
      } else if (e.kind == EventKind::Recv && e.node == rec.log().header.sink) {
        // OF0 on a static graph with no deaths forwards along shortest paths
        ASSERT_EQ(e.hop, h[origin[e.pkt]]) << "case " << i;
      }
    }
  }
}
