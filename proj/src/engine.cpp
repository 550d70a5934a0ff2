#include "taburpl/engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>

namespace taburpl {

const char* protocol_name(Protocol p) noexcept {
  switch (p) {
    case Protocol::OF0: return "OF0";
    case Protocol::EtxOf: return "ETX-OF";
    case Protocol::TabuUnnorm: return "TABU-UNNORM";
    case Protocol::Taburpl: return "TABURPL";
  }
  return "?";
}

Protocol parse_protocol(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  for (Protocol p : {Protocol::OF0, Protocol::EtxOf, Protocol::TabuUnnorm, Protocol::Taburpl})
    if (up == protocol_name(p)) return p;
  throw InvalidArgument("unknown protocol '" + name + "'");
}

std::size_t SnapshotAccounting::round_bytes(std::span<const std::size_t> neighbour_counts) const noexcept {
  std::size_t total = 0;
  for (std::size_t k : neighbour_counts) total += message_bytes(k);
  return total;
}

double SnapshotAccounting::round_bytes(std::size_t nodes, double mean_neighbours) const noexcept {
  // nodes * mean_neighbours counts directed links, so it is whole
  const double links = std::round(static_cast<double>(nodes) * mean_neighbours);
  return static_cast<double>(nodes * header_bytes) + static_cast<double>(per_neighbour_bytes) * links;
}

double SnapshotAccounting::control_energy(std::size_t own_bytes, std::size_t heard_bytes,
                                          const RadioEnergyParams& radio) noexcept {
  return 8.0 * own_bytes * radio.e_tx_per_bit() + 8.0 * heard_bytes * radio.e_rx_per_bit();
}

void SimConfig::validate() const {
  if (nodes == 0) throw InvalidArgument("nodes must be at least 1");
  if (!(area.width > 0.0) || !(area.height > 0.0)) throw InvalidArgument("area dimensions must be positive");
  if (!(duration > 0.0)) throw InvalidArgument("duration must be positive");
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw InvalidArgument("rate must be non-negative");
  if (payload_bytes == 0) throw InvalidArgument("payload must be positive");
  if (!(snapshot_period > 0.0)) throw InvalidArgument("snapshot period must be positive");
  if (retry_limit == 0) throw InvalidArgument("retry limit must be at least 1");
  if (queue_capacity == 0) throw InvalidArgument("queue capacity must be at least 1");
  if (!(ack_wait >= 0.0)) throw InvalidArgument("ack wait must be non-negative");
  if (!(initial_energy > 0.0)) throw InvalidArgument("initial energy must be positive");
  if (!(energy.bit_rate > 0.0) || !(energy.voltage > 0.0) || energy.tx_current < 0.0 || energy.rx_current < 0.0)
    throw InvalidArgument("radio energy parameters must be positive");
  if (repair_threshold < 0.0 || repair_threshold > 1.0) throw InvalidArgument("repair threshold must be in [0, 1]");
  if (repair_rearm < repair_threshold || repair_rearm > 1.0)
    throw InvalidArgument("repair re-arm level must be in [threshold, 1]");
  radio.validate();
  tabu.validate();
}

Deployment make_deployment(const SimConfig& config, std::uint64_t seed) {
  const std::size_t tries = config.redraw_until_connected ? config.max_redraws : 1;
  for (std::size_t i = 0;; ++i) {
    const std::uint64_t s = seed + i;
    NodeField field = deploy_uniform(config.nodes, config.area, s, config.sink_position);
    try {
      auto graph = std::make_shared<const LinkGraph>(build_links(field, config.radio, s, Connectivity::Require));
      return Deployment{std::move(field), std::move(graph), s};
    } catch (const ConnectivityError&) {
      if (i + 1 >= tries) throw;
    }
  }
}

TransmitOutcome transmit(double delivery, unsigned retry_limit, Rng& rng, LinkStats* stats) {
  if (retry_limit == 0) throw InvalidArgument("retry limit must be at least 1");
  TransmitOutcome out;
  while (out.attempts < retry_limit) {
    ++out.attempts;
    const bool acked = rng.bernoulli(delivery);
    if (stats) stats->record_attempt(acked);
    if (acked) {
      out.delivered = true;
      break;
    }
  }
  if (stats) stats->record_frame(out.attempts);
  return out;
}

double per_hop_delay(double tx_start, double tx_end, double t_air) noexcept {
  return std::max(0.0, (tx_end - tx_start) - t_air);
}

SnapshotEmission emit_snapshot(const LinkGraph& graph, const std::vector<bool>& alive, const SnapshotAccounting& acc) {
  const std::size_t n = graph.node_count();
  if (alive.size() != n) throw InvalidArgument("alive mask size differs from node count");
  SnapshotEmission out;
  out.neighbours.assign(n, 0);
  out.own_bytes.assign(n, 0);
  out.heard_bytes.assign(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (!alive[v]) continue;
    for (auto idx : graph.out_edges(v))
      if (alive[graph.edge(idx).to]) ++out.neighbours[v];
    out.own_bytes[v] = acc.message_bytes(out.neighbours[v]);
    out.total_bytes += out.own_bytes[v];
  }
  for (NodeId v = 0; v < n; ++v) {
    if (!alive[v]) continue;
    for (auto idx : graph.in_edges(v)) {
      const NodeId u = graph.edge(idx).from;
      if (alive[u]) out.heard_bytes[v] += out.own_bytes[u];
    }
  }
  return out;
}

ParentAssignment of0_assignment(const NetworkSnapshot& snap) {
  const LinkGraph& g = snap.graph();
  ParentAssignment a{snap.sink(), std::vector<NodeId>(snap.node_count(), kNoParent)};
  for (NodeId v : snap.members()) {
    NodeId best = kNoParent;
    std::uint32_t best_hops = kUnreachable;
    for (auto idx : g.out_edges(v)) {
      if (!snap.usable(idx)) continue;
      const NodeId q = g.edge(idx).to;
      const std::uint32_t h = snap.hops(q);
      if (h < best_hops || (h == best_hops && q < best)) {
        best = q;
        best_hops = h;
      }
    }
    a.parent[v] = best;
  }
  return a;
}

ParentAssignment etx_assignment(const NetworkSnapshot& snap) {
  const LinkGraph& g = snap.graph();
  const std::size_t n = snap.node_count();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[snap.sink()] = 0.0;
  pq.emplace(0.0, snap.sink());
  while (!pq.empty()) {
    auto [d, x] = pq.top();
    pq.pop();
    if (d > dist[x]) continue;
    for (auto idx : g.in_edges(x)) {
      if (!snap.usable(idx)) continue;
      const NodeId u = g.edge(idx).from;
      const double cand = d + snap.metrics(idx).etx;
      if (cand < dist[u]) {
        dist[u] = cand;
        pq.emplace(cand, u);
      }
    }
  }
  ParentAssignment a{snap.sink(), std::vector<NodeId>(n, kNoParent)};
  for (NodeId v : snap.members()) {
    NodeId best = kNoParent;
    double best_cost = inf;
    std::uint32_t best_hops = kUnreachable;
    for (auto idx : g.out_edges(v)) {
      if (!snap.usable(idx)) continue;
      const NodeId q = g.edge(idx).to;
      const double c = snap.metrics(idx).etx + dist[q];
      const std::uint32_t h = snap.hops(q);
      if (c < best_cost || (c == best_cost && (h < best_hops || (h == best_hops && q < best)))) {
        best = q;
        best_cost = c;
        best_hops = h;
      }
    }
    a.parent[v] = best;
  }
  return a;
}

ParentAssignment reoptimize_root(const NetworkSnapshot& snap, Protocol protocol, const WeightVector& w,
                                 const TabuParams& params, ConvergenceTrace* convergence) {
  switch (protocol) {
    case Protocol::OF0: return of0_assignment(snap);
    case Protocol::EtxOf: return etx_assignment(snap);
    case Protocol::TabuUnnorm:
    case Protocol::Taburpl: {
      const CostMode mode = protocol == Protocol::Taburpl ? CostMode::Normalized : CostMode::Raw;
      TabuResult r = tabu_search(snap, w, params, mode);
      if (convergence) *convergence = std::move(r.trace);
      return std::move(r.best);
    }
  }
  throw InvalidArgument("unknown protocol");
}

namespace {

struct Packet {
  std::uint64_t id = 0;
  double created = 0.0;
  std::uint32_t hops = 0;
};

enum class EvType : std::uint8_t { Generate, TxDone, Snapshot };

struct Event {
  double t;
  std::uint64_t seq;
  EvType type;
  NodeId node;
  std::uint64_t arg;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const noexcept {
    return a.t > b.t || (a.t == b.t && a.seq > b.seq);
  }
};

struct Service {
  bool active = false;
  Packet pkt;
  NodeId parent = kNoParent;
  std::uint32_t edge = 0;
  TransmitOutcome outcome;
  std::uint64_t token = 0;
};

class Simulation {
 public:
  Simulation(const SimConfig& cfg, const Deployment& dep, std::uint64_t seed, TraceSink& sink)
      : cfg_(cfg),
        graph_(*dep.graph),
        sink_node_(dep.field.sink),
        seed_(seed),
        out_(sink),
        traffic_rng_(derive_seed(seed, 2)),
        mac_rng_(derive_seed(seed, 3)) {
    const std::size_t n = graph_.node_count();
    result_.deployment = dep;
    energy_.assign(n, EnergyState(cfg.initial_energy));
    result_.ledger.assign(n, {});
    result_.death_time.assign(n, -1.0);
    ctrl_reported_.assign(n, 0.0);
    alive_.assign(n, true);
    stats_.assign(graph_.edge_count(), LinkStats{});
    for (auto& s : stats_) s.set_ls_reported(cfg.ls_reported);
    route_.assign(n, kNoParent);
    route_edge_.assign(n, 0);
    queue_.resize(n);
    service_.resize(n);
    armed_.assign(n, true);
    sent_per_node_.assign(n, 0);
    first_send_.assign(n, 0.0);
    frame_energy_ = static_cast<double>(cfg.frame_bits()) * cfg.energy.e_tx_per_bit();

    header_.nodes = n;
    header_.sink = sink_node_;
    header_.seed = seed;
    header_.duration = cfg.duration;
    header_.snapshot_period = cfg.snapshot_period;
    header_.payload_bytes = static_cast<std::uint32_t>(cfg.payload_bytes);
    header_.initial_energy = cfg.initial_energy;
    header_.e_tx_per_bit = cfg.energy.e_tx_per_bit();
    header_.e_rx_per_bit = cfg.energy.e_rx_per_bit();
    header_.control_energy = cfg.control_energy;
  }

  SimResult run() {
    out_.header(header_);
    for (std::uint64_t k = 1; k * cfg_.snapshot_period <= cfg_.duration; ++k)
      push(k * cfg_.snapshot_period, EvType::Snapshot, sink_node_, k);
    if (cfg_.rate > 0.0) {
      const double interval = 1.0 / cfg_.rate;
      for (NodeId v = 0; v < graph_.node_count(); ++v) {
        if (v == sink_node_) continue;
        first_send_[v] = traffic_rng_.uniform() * interval / 2.0;
        if (first_send_[v] < cfg_.duration) push(first_send_[v], EvType::Generate, v, 0);
      }
    }
    reoptimize(0.0, 0);

    while (!events_.empty() && events_.top().t <= cfg_.duration) {
      const Event ev = events_.top();
      events_.pop();
      switch (ev.type) {
        case EvType::Generate: on_generate(ev); break;
        case EvType::TxDone: on_tx_done(ev); break;
        case EvType::Snapshot: on_snapshot(ev); break;
      }
    }

    for (NodeId v = 0; v < graph_.node_count(); ++v) {
      if (alive_[v]) sample_energy(cfg_.duration, v);
      result_.packets_in_flight += queue_[v].size() + (service_[v].active ? 1 : 0);
    }
    result_.residual.reserve(energy_.size());
    for (const auto& e : energy_) result_.residual.push_back(e.residual());
    return std::move(result_);
  }

 private:
  void push(double t, EvType type, NodeId node, std::uint64_t arg) {
    events_.push(Event{t, seq_++, type, node, arg});
  }

  void emit(const TraceEvent& e) { out_.event(e); }

  double reported_residual(NodeId v) const {
    const double r = energy_[v].residual();
    return cfg_.control_energy == ControlEnergy::Deferred ? r + ctrl_reported_[v] : r;
  }

  void sample_energy(double t, NodeId v) {
    TraceEvent e;
    e.t = t;
    e.kind = EventKind::Energy;
    e.node = v;
    e.res = reported_residual(v);
    emit(e);
  }

  void drop(double t, NodeId v, const Packet& p, DropReason why, unsigned attempts = 0, NodeId peer = kNoNode) {
    TraceEvent e;
    e.t = t;
    e.kind = EventKind::Drop;
    e.node = v;
    e.pkt = p.id;
    e.hop = p.hops;
    e.bytes = static_cast<std::uint32_t>(cfg_.payload_bytes);
    e.attempts = attempts;
    e.peer = peer;
    e.why = why;
    emit(e);
    ++result_.packets_dropped;
  }

  void control(double t, NodeId v, std::size_t own, std::size_t heard) {
    const double tx = 8.0 * own * cfg_.energy.e_tx_per_bit();
    const double rx = 8.0 * heard * cfg_.energy.e_rx_per_bit();
    result_.ledger[v].ctrl_tx += energy_[v].debit(tx);
    result_.ledger[v].ctrl_rx += energy_[v].debit(rx);
    TraceEvent e;
    e.t = t;
    e.kind = EventKind::Ctrl;
    e.node = v;
    e.bytes = static_cast<std::uint32_t>(own);
    e.rx_bytes = static_cast<std::uint32_t>(heard);
    ctrl_reported_[v] += control_event_energy(e, header_);
    emit(e);
  }

  void check_death(double t, NodeId v) {
    if (!alive_[v] || energy_[v].residual() >= frame_energy_) return;
    alive_[v] = false;
    result_.death_time[v] = t;
    sample_energy(t, v);
    Service& s = service_[v];
    if (s.active) {
      s.active = false;
      drop(t, v, s.pkt, DropReason::NodeDead);
    }
    for (const Packet& p : queue_[v]) drop(t, v, p, DropReason::NodeDead);
    queue_[v].clear();
  }

  void on_generate(const Event& ev) {
    const NodeId v = ev.node;
    if (!alive_[v]) return;
    Packet p{next_packet_++, ev.t, 0};
    ++result_.packets_generated;
    TraceEvent e;
    e.t = ev.t;
    e.kind = EventKind::Send;
    e.node = v;
    e.pkt = p.id;
    e.bytes = static_cast<std::uint32_t>(cfg_.payload_bytes);
    emit(e);
    const double next = first_send_[v] + static_cast<double>(++sent_per_node_[v]) / cfg_.rate;
    if (next < cfg_.duration) push(next, EvType::Generate, v, 0);
    enqueue(ev.t, v, p);
  }

  void enqueue(double t, NodeId v, const Packet& p) {
    if (queue_[v].size() + (service_[v].active ? 1 : 0) >= cfg_.queue_capacity) {
      drop(t, v, p, DropReason::QueueOverflow);
      return;
    }
    queue_[v].push_back(p);
    if (!service_[v].active) start_service(t, v);
  }

  void start_service(double t, NodeId v) {
    while (!queue_[v].empty()) {
      Packet p = queue_[v].front();
      queue_[v].pop_front();
      const NodeId parent = route_[v];
      if (parent == kNoParent) {
        drop(t, v, p, DropReason::NoRoute);
        continue;
      }
      const std::uint32_t edge = route_edge_[v];
      const double delivery = alive_[parent] ? graph_.edge(edge).delivery : 0.0;
      Service& s = service_[v];
      s.active = true;
      s.pkt = p;
      s.parent = parent;
      s.edge = edge;
      s.outcome = transmit(delivery, cfg_.retry_limit, mac_rng_, &stats_[edge]);
      ++s.token;
      push(t + s.outcome.attempts * cfg_.attempt_time(), EvType::TxDone, v, s.token);
      return;
    }
  }

  void on_tx_done(const Event& ev) {
    const NodeId v = ev.node;
    Service& s = service_[v];
    if (!s.active || s.token != ev.arg) return;
    s.active = false;
    const double t = ev.t;
    const double bits = static_cast<double>(cfg_.frame_bits());
    result_.ledger[v].data_tx += energy_[v].debit(bits * s.outcome.attempts * cfg_.energy.e_tx_per_bit());
    const NodeId parent = s.parent;
    Packet p = s.pkt;
    if (s.outcome.delivered && alive_[parent]) {
      result_.ledger[parent].data_rx += energy_[parent].debit(bits * cfg_.energy.e_rx_per_bit());
      ++p.hops;
      TraceEvent e;
      e.t = t;
      e.kind = EventKind::Recv;
      e.node = parent;
      e.pkt = p.id;
      e.hop = p.hops;
      e.bytes = static_cast<std::uint32_t>(cfg_.payload_bytes);
      e.attempts = s.outcome.attempts;
      e.peer = v;
      emit(e);
      check_death(t, parent);
      if (parent == sink_node_) {
        ++result_.packets_delivered;
      } else if (alive_[parent]) {
        enqueue(t, parent, p);
      } else {
        // died on reception; check_death already flushed its queue
        drop(t, parent, p, DropReason::NodeDead);
      }
    } else {
      drop(t, v, p, s.outcome.delivered ? DropReason::NodeDead : DropReason::RetryLimit, s.outcome.attempts, parent);
    }
    check_repair(t, v);
    check_death(t, v);
    if (alive_[v] && !service_[v].active) start_service(t, v);
  }

  void check_repair(double t, NodeId v) {
    if (cfg_.repair_threshold <= 0.0 || !alive_[v] || route_[v] == kNoParent) return;
    const double ls = stats_[route_edge_[v]].ls();
    if (!armed_[v]) {
      if (ls >= cfg_.repair_rearm) armed_[v] = true;
      return;
    }
    if (ls >= cfg_.repair_threshold) return;
    armed_[v] = false;
    ++result_.repairs;
    std::vector<NodeId> replies;
    for (auto idx : graph_.out_edges(v)) {
      const NodeId u = graph_.edge(idx).to;
      if (alive_[u]) replies.push_back(u);
    }
    control(t, v, cfg_.repair_bytes, cfg_.repair_bytes * replies.size());
    for (NodeId u : replies) control(t, u, cfg_.repair_bytes, cfg_.repair_bytes);
    for (NodeId u : replies) check_death(t, u);
  }

  void on_snapshot(const Event& ev) {
    const double t = ev.t;
    const SnapshotEmission em = emit_snapshot(graph_, alive_, cfg_.snapshot);
    result_.snapshot_round_bytes.push_back(em.total_bytes);
    for (NodeId v = 0; v < graph_.node_count(); ++v)
      if (alive_[v]) control(t, v, em.own_bytes[v], em.heard_bytes[v]);
    for (NodeId v = 0; v < graph_.node_count(); ++v) check_death(t, v);
    if (cfg_.ls_estimator == LsEstimator::Windowed)
      for (auto& s : stats_) s.apply_window();
    for (NodeId v = 0; v < graph_.node_count(); ++v)
      if (alive_[v]) sample_energy(t, v);
    reoptimize(t, ev.arg);
  }

  void reoptimize(double t, std::uint64_t round) {
    const std::size_t n = graph_.node_count();
    if (!alive_[sink_node_]) return;
    // breadth-first depth over alive nodes
    std::vector<std::uint32_t> hops(n, kUnreachable);
    std::vector<NodeId> frontier{sink_node_};
    hops[sink_node_] = 0;
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const NodeId x = frontier[head];
      for (auto idx : graph_.in_edges(x)) {
        const NodeId u = graph_.edge(idx).from;
        if (alive_[u] && hops[u] == kUnreachable) {
          hops[u] = hops[x] + 1;
          frontier.push_back(u);
        }
      }
    }
    std::vector<bool> active(n);
    std::vector<double> residual(n);
    for (NodeId v = 0; v < n; ++v) {
      active[v] = alive_[v] && hops[v] != kUnreachable;
      residual[v] = energy_[v].residual();
    }
    std::vector<EdgeMetrics> metrics(graph_.edge_count());
    const double frame_tx = static_cast<double>(cfg_.frame_bits()) * cfg_.energy.e_tx_per_bit();
    for (std::size_t i = 0; i < graph_.edge_count(); ++i) {
      const Edge& e = graph_.edge(i);
      EdgeMetrics& m = metrics[i];
      m.residual_energy = residual[e.from];
      m.etx = stats_[i].etx();
      m.tx_energy = frame_tx * m.etx;
      m.distance = e.distance;
      m.hops = cfg_.hop_feature == HopFeature::Increment ? 1.0
               : hops[e.to] == kUnreachable          ? 0.0
                                                      : static_cast<double>(hops[e.to]) + 1.0;
      m.ls = ls_for_cost(stats_[i]);
    }
    const NetworkSnapshot snap(dep_graph(), sink_node_, std::move(metrics), std::move(residual), t, active);
    TabuParams params = cfg_.tabu;
    params.seed = derive_seed(seed_, 1000 + round);
    ConvergenceTrace conv;
    const ParentAssignment a = reoptimize_root(snap, cfg_.protocol, cfg_.weights, params, &conv);
    if (cfg_.protocol == Protocol::Taburpl || cfg_.protocol == Protocol::TabuUnnorm)
      result_.convergence.push_back(std::move(conv));
    for (NodeId v = 0; v < n; ++v) {
      if (v == sink_node_) continue;
      const NodeId p = active[v] ? a.parent[v] : kNoParent;
      if (p != route_[v]) armed_[v] = true;
      route_[v] = p;
      if (p != kNoParent) route_edge_[v] = *graph_.find_edge(v, p);
    }
    result_.routes.push_back(route_);
  }

  std::shared_ptr<const LinkGraph> dep_graph() const { return result_.deployment.graph; }

  const SimConfig& cfg_;
  const LinkGraph& graph_;
  NodeId sink_node_;
  std::uint64_t seed_;
  TraceSink& out_;
  Rng traffic_rng_;
  Rng mac_rng_;
  TraceHeader header_;
  SimResult result_;
  std::vector<EnergyState> energy_;
  std::vector<double> ctrl_reported_;
  std::vector<bool> alive_;
  std::vector<LinkStats> stats_;
  std::vector<NodeId> route_;
  std::vector<std::uint32_t> route_edge_;
  std::vector<std::deque<Packet>> queue_;
  std::vector<Service> service_;
  std::vector<bool> armed_;
  std::vector<std::uint64_t> sent_per_node_;
  std::vector<double> first_send_;
  double frame_energy_ = 0.0;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::uint64_t seq_ = 0;
  std::uint64_t next_packet_ = 0;
};

}  // namespace

SimResult simulate(const SimConfig& config, const Deployment& deployment, std::uint64_t seed, TraceSink& sink) {
  config.validate();
  if (!deployment.graph || deployment.graph->node_count() != deployment.field.size())
    throw InvalidArgument("deployment graph does not match its field");
  Simulation sim(config, deployment, seed, sink);
  return sim.run();
}

SimResult simulate(const SimConfig& config, std::uint64_t seed, TraceSink& sink) {
  config.validate();
  return simulate(config, make_deployment(config, seed), seed, sink);
}

TraceLog run(const SimConfig& config, std::uint64_t seed) {
  TraceRecorder rec;
  simulate(config, seed, rec);
  return rec.take();
}

}  // namespace taburpl
