#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taburpl/topology.hpp"
#include "taburpl/trace.hpp"

namespace taburpl {

enum class LsrWeighting { Attempts, Links };

struct KpiRecord {
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t dropped = 0;
  double pdr = 0.0;
  double plr = 0.0;                    // percent
  double energy_total = 0.0;           // J
  double energy_mean_per_node = 0.0;   // J
  double avg_path_length = 0.0;        // hops
  std::uint64_t control_messages = 0;
  std::uint64_t control_bytes = 0;
  double control_bytes_per_min = 0.0;
  double e2e_delay_ms = 0.0;
  double throughput_bps = 0.0;
  double lsr_mean = 0.0;
  std::uint64_t hop_successes = 0;
  std::uint64_t hop_attempts = 0;
};

/// Streaming KPI extraction. Deferred-accounting traces are corrected on the fly.
class KpiAccumulator : public TraceSink {
 public:
  explicit KpiAccumulator(LsrWeighting weighting = LsrWeighting::Attempts) : weighting_(weighting) {}
  void header(const TraceHeader& h) override;
  void event(const TraceEvent& e) override;
  /// Throws UndefinedMetric when no packet was sent.
  KpiRecord result() const;

 private:
  LsrWeighting weighting_;
  TraceHeader header_;
  std::uint64_t sent_ = 0, received_ = 0, dropped_ = 0;
  std::uint64_t hop_sum_ = 0;
  double delay_sum_ = 0.0;
  std::vector<double> send_time_;
  std::vector<double> last_residual_;
  std::vector<double> ctrl_spent_;
  std::uint64_t ctrl_messages_ = 0, ctrl_bytes_ = 0;
  std::uint64_t hop_successes_ = 0, hop_attempts_ = 0;
  std::map<std::pair<NodeId, NodeId>, std::pair<std::uint64_t, std::uint64_t>> per_link_;
};

KpiRecord compute_kpis(const TraceLog& trace, LsrWeighting weighting = LsrWeighting::Attempts);

struct CiEstimate {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::size_t resamples = 10000;
};

/// Percentile bootstrap of the sample mean. Throws InsufficientData below two samples.
CiEstimate bootstrap_ci(std::span<const double> samples, std::size_t resamples = 10000, double level = 0.95,
                        std::uint64_t seed = 1);

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

struct KpiField {
  const char* name;
  double (*get)(const KpiRecord&);
};

/// The KPIs reported per run, in CSV column order.
std::span<const KpiField> kpi_fields();

struct SeededKpi {
  std::uint64_t seed = 0;
  KpiRecord kpi;
};

struct KpiDelta {
  std::string name;
  double full_mean = 0.0;
  double reduced_mean = 0.0;
  double delta_percent = 0.0;  // (reduced - full) / |full| * 100
  CiEstimate paired_difference;  // reduced - full, per seed
};

/// Relative change of every KPI from `full` to `reduced`, paired by seed.
/// Throws PairingError when the seed lists differ.
std::vector<KpiDelta> ablation_deltas(std::span<const SeededKpi> full, std::span<const SeededKpi> reduced,
                                      std::size_t resamples = 10000, std::uint64_t seed = 1);

struct DistanceHopSample {
  double distance = 0.0;  // transmitter's distance to the sink, m
  double hops = 0.0;      // transmitter's hop count
};

/// One sample per directed edge of the graph.
std::vector<DistanceHopSample> distance_hop_samples(const NodeField& field, const LinkGraph& graph);

struct CorrelationResult {
  double rho = 0.0;
  CiEstimate ci;
  std::size_t samples = 0;
};

/// Pooled Pearson correlation of distance and hop count with a percentile
/// bootstrap interval over resampled pairs.
CorrelationResult correlation_study(std::span<const DistanceHopSample> samples, std::size_t resamples = 10000,
                                    double level = 0.95, std::uint64_t seed = 1);

}  // namespace taburpl
