#include "taburpl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "taburpl/rng.hpp"

namespace taburpl {

void KpiAccumulator::header(const TraceHeader& h) {
  header_ = h;
  last_residual_.assign(h.nodes, h.initial_energy);
  ctrl_spent_.assign(h.nodes, 0.0);
}

void KpiAccumulator::event(const TraceEvent& e) {
  if (e.node >= last_residual_.size()) {
    last_residual_.resize(e.node + 1, header_.initial_energy);
    ctrl_spent_.resize(e.node + 1, 0.0);
  }
  switch (e.kind) {
    case EventKind::Send:
      ++sent_;
      if (e.pkt != kNoPacket) {
        if (e.pkt >= send_time_.size()) send_time_.resize(e.pkt + 1, -1.0);
        send_time_[e.pkt] = e.t;
      }
      break;
    case EventKind::Recv:
      ++hop_successes_;
      hop_attempts_ += std::max<std::uint32_t>(e.attempts, 1);
      if (weighting_ == LsrWeighting::Links) {
        auto& l = per_link_[{e.peer, e.node}];
        ++l.first;
        l.second += std::max<std::uint32_t>(e.attempts, 1);
      }
      if (e.node == header_.sink) {
        ++received_;
        hop_sum_ += e.hop;
        if (e.pkt < send_time_.size() && send_time_[e.pkt] >= 0.0) delay_sum_ += e.t - send_time_[e.pkt];
      }
      break;
    case EventKind::Drop:
      ++dropped_;
      hop_attempts_ += e.attempts;
      if (weighting_ == LsrWeighting::Links && e.attempts > 0) per_link_[{e.node, e.peer}].second += e.attempts;
      break;
    case EventKind::Ctrl:
      if (e.bytes > 0) ++ctrl_messages_;
      ctrl_bytes_ += e.bytes;
      ctrl_spent_[e.node] += control_event_energy(e, header_);
      break;
    case EventKind::Energy: {
      const double res = header_.control_energy == ControlEnergy::Deferred
                             ? std::max(0.0, e.res - ctrl_spent_[e.node])
                             : e.res;
      last_residual_[e.node] = res;
      break;
    }
  }
}

KpiRecord KpiAccumulator::result() const {
  if (sent_ == 0) throw UndefinedMetric("no packets were sent; PDR is undefined");
  KpiRecord k;
  k.sent = sent_;
  k.received = received_;
  k.dropped = dropped_;
  k.pdr = static_cast<double>(received_) / static_cast<double>(sent_);
  k.plr = (1.0 - k.pdr) * 100.0;
  for (double r : last_residual_) k.energy_total += header_.initial_energy - r;
  k.energy_mean_per_node = last_residual_.empty() ? 0.0 : k.energy_total / static_cast<double>(last_residual_.size());
  k.avg_path_length = received_ ? static_cast<double>(hop_sum_) / static_cast<double>(received_) : 0.0;
  k.control_messages = ctrl_messages_;
  k.control_bytes = ctrl_bytes_;
  k.control_bytes_per_min = header_.duration > 0.0 ? ctrl_bytes_ / (header_.duration / 60.0) : 0.0;
  k.e2e_delay_ms = received_ ? 1000.0 * delay_sum_ / static_cast<double>(received_)
                             : std::numeric_limits<double>::quiet_NaN();
  k.throughput_bps =
      header_.duration > 0.0 ? static_cast<double>(received_) * header_.payload_bytes * 8.0 / header_.duration : 0.0;
  k.hop_successes = hop_successes_;
  k.hop_attempts = hop_attempts_;
  if (weighting_ == LsrWeighting::Attempts) {
    k.lsr_mean = hop_attempts_ ? static_cast<double>(hop_successes_) / static_cast<double>(hop_attempts_) : 0.0;
  } else {
    double sum = 0.0;
    std::size_t links = 0;
    for (const auto& [key, v] : per_link_) {
      if (v.second == 0) continue;
      sum += static_cast<double>(v.first) / static_cast<double>(v.second);
      ++links;
    }
    k.lsr_mean = links ? sum / static_cast<double>(links) : 0.0;
  }
  return k;
}

KpiRecord compute_kpis(const TraceLog& trace, LsrWeighting weighting) {
  KpiAccumulator acc(weighting);
  acc.header(trace.header);
  for (const auto& e : trace.events) acc.event(e);
  return acc.result();
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InsufficientData("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must be in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

CiEstimate percentile_interval(std::vector<double>& stats, double point, double level, std::size_t resamples) {
  std::sort(stats.begin(), stats.end());
  const double alpha = (1.0 - level) / 2.0;
  CiEstimate ci;
  ci.mean = point;
  ci.level = level;
  ci.resamples = resamples;
  ci.lower = std::min(quantile_sorted(stats, alpha), point);
  ci.upper = std::max(quantile_sorted(stats, 1.0 - alpha), point);
  return ci;
}

}  // namespace

CiEstimate bootstrap_ci(std::span<const double> samples, std::size_t resamples, double level, std::uint64_t seed) {
  if (samples.size() < 2) throw InsufficientData("bootstrap needs at least two samples");
  if (resamples == 0) throw InvalidArgument("resamples must be positive");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must be in (0, 1)");
  Rng rng(derive_seed(seed, 20));
  const std::size_t n = samples.size();
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += samples[rng.below(n)];
    m = sum / static_cast<double>(n);
  }
  return percentile_interval(means, mean_of(samples), level, resamples);
}

std::span<const KpiField> kpi_fields() {
  static const KpiField fields[] = {
      {"pdr", [](const KpiRecord& k) { return k.pdr; }},
      {"plr_percent", [](const KpiRecord& k) { return k.plr; }},
      {"energy_total_j", [](const KpiRecord& k) { return k.energy_total; }},
      {"energy_mean_per_node_j", [](const KpiRecord& k) { return k.energy_mean_per_node; }},
      {"avg_path_length", [](const KpiRecord& k) { return k.avg_path_length; }},
      {"control_messages", [](const KpiRecord& k) { return static_cast<double>(k.control_messages); }},
      {"control_bytes", [](const KpiRecord& k) { return static_cast<double>(k.control_bytes); }},
      {"control_bytes_per_min", [](const KpiRecord& k) { return k.control_bytes_per_min; }},
      {"e2e_delay_ms", [](const KpiRecord& k) { return k.e2e_delay_ms; }},
      {"throughput_bps", [](const KpiRecord& k) { return k.throughput_bps; }},
      {"lsr_mean", [](const KpiRecord& k) { return k.lsr_mean; }},
  };
  return fields;
}

std::vector<KpiDelta> ablation_deltas(std::span<const SeededKpi> full, std::span<const SeededKpi> reduced,
                                      std::size_t resamples, std::uint64_t seed) {
  auto seeds_of = [](std::span<const SeededKpi> xs) {
    std::vector<std::uint64_t> s;
    for (const auto& x : xs) s.push_back(x.seed);
    std::sort(s.begin(), s.end());
    return s;
  };
  const auto fs = seeds_of(full);
  if (fs != seeds_of(reduced)) throw PairingError("full and reduced runs use different seed lists");
  if (std::adjacent_find(fs.begin(), fs.end()) != fs.end()) throw PairingError("duplicate seed in run set");
  if (fs.size() < 2) throw InsufficientData("ablation needs at least two paired seeds");

  std::vector<const KpiRecord*> f, r;
  for (std::uint64_t s : fs) {
    auto pick = [s](std::span<const SeededKpi> xs) {
      return &std::find_if(xs.begin(), xs.end(), [s](const SeededKpi& x) { return x.seed == s; })->kpi;
    };
    f.push_back(pick(full));
    r.push_back(pick(reduced));
  }
  std::vector<KpiDelta> out;
  for (const KpiField& field : kpi_fields()) {
    std::vector<double> fv, rv, diff;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      fv.push_back(field.get(*f[i]));
      rv.push_back(field.get(*r[i]));
      diff.push_back(rv.back() - fv.back());
    }
    KpiDelta d;
    d.name = field.name;
    d.full_mean = mean_of(fv);
    d.reduced_mean = mean_of(rv);
    if (d.full_mean == d.reduced_mean) d.delta_percent = 0.0;
    else if (d.full_mean == 0.0) d.delta_percent = std::numeric_limits<double>::quiet_NaN();
    else d.delta_percent = (d.reduced_mean - d.full_mean) / std::abs(d.full_mean) * 100.0;
    d.paired_difference = bootstrap_ci(diff, resamples, 0.95, seed);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<DistanceHopSample> distance_hop_samples(const NodeField& field, const LinkGraph& graph) {
  const auto hops = hop_counts(graph, field.sink);
  std::vector<DistanceHopSample> out;
  out.reserve(graph.edge_count());
  for (const Edge& e : graph.edges())
    out.push_back({field.distance_to_sink(e.from), static_cast<double>(hops[e.from])});
  return out;
}

CorrelationResult correlation_study(std::span<const DistanceHopSample> samples, std::size_t resamples, double level,
                                    std::uint64_t seed) {
  if (samples.size() < 2) throw InsufficientData("correlation needs at least two samples");
  std::vector<double> xs, ys;
  for (const auto& s : samples) {
    xs.push_back(s.distance);
    ys.push_back(s.hops);
  }
  CorrelationResult out;
  out.samples = samples.size();
  out.rho = pearson_correlation(xs, ys);
  Rng rng(derive_seed(seed, 21));
  const std::size_t n = samples.size();
  std::vector<double> rhos;
  rhos.reserve(resamples);
  std::vector<double> bx(n), by(n);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = rng.below(n);
      bx[i] = xs[j];
      by[i] = ys[j];
    }
    try {
      rhos.push_back(pearson_correlation(bx, by));
    } catch (const UndefinedCorrelation&) {
      // degenerate resample; skip it
    }
  }
  if (rhos.empty()) throw UndefinedCorrelation("every bootstrap resample was degenerate");
  out.ci = percentile_interval(rhos, out.rho, level, resamples);
  return out;
}

}  // namespace taburpl
