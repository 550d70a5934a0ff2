#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taburpl/cost.hpp"
#include "taburpl/linkstats.hpp"
#include "taburpl/optimizer.hpp"
#include "taburpl/topology.hpp"
#include "taburpl/trace.hpp"

namespace taburpl {

enum class Protocol { OF0, EtxOf, TabuUnnorm, Taburpl };

const char* protocol_name(Protocol p) noexcept;
/// Accepts the names printed by protocol_name(), case-insensitively.
Protocol parse_protocol(const std::string& name);

/// h(e) for an edge u -> v: the parent's depth plus one, or the constant
/// per-hop increment.
enum class HopFeature { Depth, Increment };

enum class LsEstimator { PerPacket, Windowed };

struct RadioEnergyParams {
  double tx_current = 17.4e-3;  // A
  double rx_current = 19.7e-3;  // A
  double voltage = 3.0;         // V
  double bit_rate = 250e3;      // bit/s

  double e_tx_per_bit() const noexcept { return tx_current * voltage / bit_rate; }
  double e_rx_per_bit() const noexcept { return rx_current * voltage / bit_rate; }
  double airtime(std::size_t bits) const noexcept { return static_cast<double>(bits) / bit_rate; }
};

/// Snapshot message sizing: a fixed header plus one tuple per neighbour.
struct SnapshotAccounting {
  std::size_t header_bytes = 18;
  std::size_t per_neighbour_bytes = 6;

  std::size_t message_bytes(std::size_t neighbours) const noexcept {
    return header_bytes + per_neighbour_bytes * neighbours;
  }
  /// Exact bytes of one network-wide round.
  std::size_t round_bytes(std::span<const std::size_t> neighbour_counts) const noexcept;
  /// N * (header + per_neighbour * mean_k)
  double round_bytes(std::size_t nodes, double mean_neighbours) const noexcept;
  /// Bits per second of snapshot traffic.
  static double control_rate(double round_bytes, double period) noexcept { return round_bytes * 8.0 / period; }
  /// Own message sent plus every neighbour message heard.
  static double control_energy(std::size_t own_bytes, std::size_t heard_bytes, const RadioEnergyParams& radio) noexcept;
};

struct SimConfig {
  std::size_t nodes = 50;
  Area area{};
  std::optional<Point> sink_position;
  double duration = 1000.0;  // s
  double rate = 10.0;        // packets/s per source node; 0 disables traffic
  std::size_t payload_bytes = 512;
  Protocol protocol = Protocol::Taburpl;
  double snapshot_period = 90.0;
  unsigned retry_limit = 7;          // maximum MAC attempts per frame
  std::size_t queue_capacity = 8;    // frames, including the one in service
  double ack_wait = 864e-6;          // s added to every attempt
  RadioModel radio{};
  double initial_energy = 1000.0;
  RadioEnergyParams energy{};
  SnapshotAccounting snapshot{};
  WeightVector weights = WeightVector::balanced();
  TabuParams tabu{};
  HopFeature hop_feature = HopFeature::Depth;
  LsEstimator ls_estimator = LsEstimator::PerPacket;
  bool ls_reported = true;
  ControlEnergy control_energy = ControlEnergy::Inline;
  /// Optional local repair: a node solicits its neighbours (one message
  /// out, one reply from each) when the stability of its parent link drops
  /// below this. 0 disables it, leaving snapshots as the only control traffic.
  double repair_threshold = 0.0;
  /// The solicitation re-arms once the parent link recovers to this level.
  double repair_rearm = 0.5;
  std::size_t repair_bytes = 18;
  bool redraw_until_connected = false;
  std::size_t max_redraws = 1000;

  std::size_t frame_bits() const noexcept { return payload_bytes * 8; }
  double attempt_time() const noexcept { return energy.airtime(frame_bits()) + ack_wait; }
  void validate() const;
};

struct Deployment {
  NodeField field;
  std::shared_ptr<const LinkGraph> graph;
  std::uint64_t seed = 0;  // seed that produced this layout
};

/// Deploys and links the field. With redraw_until_connected a disconnected
/// draw is retried with seed + 1, seed + 2, ...; otherwise it throws
/// ConnectivityError.
Deployment make_deployment(const SimConfig& config, std::uint64_t seed);

struct TransmitOutcome {
  unsigned attempts = 0;
  bool delivered = false;
};

/// Bernoulli attempts at `delivery` until success or `retry_limit` attempts.
/// When `stats` is given, every attempt and the frame are recorded on it.
TransmitOutcome transmit(double delivery, unsigned retry_limit, Rng& rng, LinkStats* stats = nullptr);

/// Time spent on a hop beyond the airtime, never negative.
double per_hop_delay(double tx_start, double tx_end, double t_air) noexcept;

struct SnapshotEmission {
  std::vector<std::size_t> neighbours;   // alive neighbours per node
  std::vector<std::size_t> own_bytes;    // 0 for dead nodes
  std::vector<std::size_t> heard_bytes;
  std::size_t total_bytes = 0;
};

/// One network-wide snapshot round over the alive nodes.
SnapshotEmission emit_snapshot(const LinkGraph& graph, const std::vector<bool>& alive, const SnapshotAccounting& acc);

/// Parents for the snapshot's members under the given objective function.
/// Tabu variants append their convergence trace to `convergence` if given.
ParentAssignment reoptimize_root(const NetworkSnapshot& snap, Protocol protocol, const WeightVector& w,
                                 const TabuParams& params, ConvergenceTrace* convergence = nullptr);

/// Minimum hop count; ties to the lowest parent id.
ParentAssignment of0_assignment(const NetworkSnapshot& snap);
/// Minimum cumulative ETX to the sink; ties to fewer hops, then lower id.
ParentAssignment etx_assignment(const NetworkSnapshot& snap);

struct NodeEnergyLedger {
  double data_tx = 0.0;
  double data_rx = 0.0;
  double ctrl_tx = 0.0;
  double ctrl_rx = 0.0;
  double total() const noexcept { return data_tx + data_rx + ctrl_tx + ctrl_rx; }
};

struct SimResult {
  Deployment deployment;
  std::vector<NodeEnergyLedger> ledger;
  std::vector<double> residual;           // true residual at the end
  std::vector<double> death_time;         // negative while alive
  std::vector<ConvergenceTrace> convergence;
  std::vector<std::size_t> snapshot_round_bytes;
  std::vector<std::vector<NodeId>> routes;  // parent vector in force after each optimization
  std::uint64_t packets_generated = 0;
  std::uint64_t packets_delivered = 0;
  std::uint64_t packets_dropped = 0;
  std::uint64_t packets_in_flight = 0;
  std::uint64_t repairs = 0;
};

/// Runs one scenario, streaming every event into `sink`.
SimResult simulate(const SimConfig& config, std::uint64_t seed, TraceSink& sink);
/// As simulate(), against an already built deployment.
SimResult simulate(const SimConfig& config, const Deployment& deployment, std::uint64_t seed, TraceSink& sink);

/// Full in-memory trace of one scenario.
TraceLog run(const SimConfig& config, std::uint64_t seed);

}  // namespace taburpl
