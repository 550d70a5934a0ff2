#include "taburpl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace taburpl {

namespace fs = std::filesystem;

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

std::size_t default_workers() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

RunRecord run_cell(const SimConfig& base, const CellKey& cell, std::uint64_t seed) {
  RunRecord rec;
  rec.cell = cell;
  rec.seed = seed;
  try {
    SimConfig cfg = base;
    cfg.protocol = cell.protocol;
    cfg.nodes = cell.nodes;
    cfg.rate = cell.rate;
    KpiAccumulator acc;
    const SimResult r = simulate(cfg, seed, acc);
    rec.kpi = acc.result();
    rec.mean_degree = r.deployment.graph->mean_degree();
    rec.repairs = r.repairs;
    rec.deployment_seed = r.deployment.seed;
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

std::size_t MatrixResult::failures() const noexcept {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.ok; }));
}

MatrixResult run_matrix(const ExperimentConfig& config, std::size_t workers) {
  config.matrix.validate();
  std::vector<std::pair<CellKey, std::uint64_t>> jobs;
  for (std::size_t n : config.matrix.sizes)
    for (double rate : config.matrix.rates)
      for (Protocol p : config.matrix.protocols)
        for (std::uint64_t s : config.matrix.seeds) jobs.push_back({CellKey{p, n, rate}, s});
  MatrixResult result;
  result.runs.resize(jobs.size());
  parallel_for(jobs.size(), workers,
               [&](std::size_t i) { result.runs[i] = run_cell(config.scenario, jobs[i].first, jobs[i].second); });
  return result;
}

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct CellOrder {
  bool operator()(const CellKey& a, const CellKey& b) const {
    return std::tie(a.nodes, a.rate, a.protocol) < std::tie(b.nodes, b.rate, b.protocol);
  }
};

std::map<CellKey, std::vector<const RunRecord*>, CellOrder> group_cells(const std::vector<RunRecord>& runs) {
  std::map<CellKey, std::vector<const RunRecord*>, CellOrder> cells;
  for (const auto& r : runs) cells[r.cell].push_back(&r);
  return cells;
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
  out << "protocol,nodes,rate,seed,status,mean_degree,repairs,sent,received";
  for (const auto& f : kpi_fields()) out << ',' << f.name;
  out << ",error\n";
  for (const auto& r : runs) {
    out << protocol_name(r.cell.protocol) << ',' << r.cell.nodes << ',' << real(r.cell.rate) << ',' << r.seed << ','
        << (r.ok ? "ok" : "failed") << ',' << real(r.mean_degree) << ',' << r.repairs << ',' << r.kpi.sent << ','
        << r.kpi.received;
    for (const auto& f : kpi_fields()) out << ',' << (r.ok ? real(f.get(r.kpi)) : "");
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << ',' << err << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& runs, std::size_t resamples) {
  out << "protocol,nodes,rate,runs,failed";
  for (const auto& f : kpi_fields()) out << ',' << f.name << "_mean," << f.name << "_lower," << f.name << "_upper";
  out << '\n';
  for (const auto& [cell, members] : group_cells(runs)) {
    std::size_t failed = 0;
    for (const auto* r : members) failed += !r->ok;
    out << protocol_name(cell.protocol) << ',' << cell.nodes << ',' << real(cell.rate) << ',' << members.size() << ','
        << failed;
    for (const auto& f : kpi_fields()) {
      std::vector<double> xs;
      for (const auto* r : members)
        if (r->ok) xs.push_back(f.get(r->kpi));
      if (xs.empty()) {
        out << ",,,";
      } else if (xs.size() == 1) {
        out << ',' << real(xs[0]) << ',' << real(xs[0]) << ',' << real(xs[0]);
      } else {
        const CiEstimate ci = bootstrap_ci(xs, resamples);
        out << ',' << real(ci.mean) << ',' << real(ci.lower) << ',' << real(ci.upper);
      }
    }
    out << '\n';
  }
}

void write_plot_data(const fs::path& dir, const std::vector<RunRecord>& runs) {
  fs::create_directories(dir);
  std::vector<std::size_t> sizes;
  std::vector<double> rates;
  std::vector<Protocol> protocols;
  for (const auto& r : runs) {
    if (std::find(sizes.begin(), sizes.end(), r.cell.nodes) == sizes.end()) sizes.push_back(r.cell.nodes);
    if (std::find(rates.begin(), rates.end(), r.cell.rate) == rates.end()) rates.push_back(r.cell.rate);
    if (std::find(protocols.begin(), protocols.end(), r.cell.protocol) == protocols.end())
      protocols.push_back(r.cell.protocol);
  }
  std::sort(sizes.begin(), sizes.end());
  std::sort(rates.begin(), rates.end());
  const auto cells = group_cells(runs);
  for (const auto& f : kpi_fields()) {
    for (std::size_t n : sizes) {
      std::ofstream out(dir / (std::string(f.name) + "_n" + std::to_string(n) + ".dat"));
      out << "# rate";
      for (Protocol p : protocols) out << ' ' << protocol_name(p);
      out << '\n';
      for (double rate : rates) {
        out << real(rate);
        for (Protocol p : protocols) {
          auto it = cells.find(CellKey{p, n, rate});
          double sum = 0.0;
          std::size_t k = 0;
          if (it != cells.end())
            for (const auto* r : it->second)
              if (r->ok) {
                sum += f.get(r->kpi);
                ++k;
              }
          out << ' ' << (k ? real(sum / static_cast<double>(k)) : "nan");
        }
        out << '\n';
      }
    }
  }
}

void prepare_output_dir(const fs::path& dir) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("output path '" + dir.string() + "' is not a directory");
    if (!fs::is_empty(dir)) throw UsageError("output directory '" + dir.string() + "' is not empty");
  }
  fs::create_directories(dir);
}

void write_matrix_outputs(const fs::path& dir, const ExperimentConfig& config, const MatrixResult& result) {
  {
    std::ofstream out(dir / "results.csv");
    write_results_csv(out, result.runs);
  }
  {
    std::ofstream out(dir / "summary.csv");
    write_summary_csv(out, result.runs);
  }
  {
    std::ofstream out(dir / "config.ini");
    write_config(out, config);
  }
  write_plot_data(dir / "plots", result.runs);
}

Feature parse_feature(const std::string& name) {
  static const std::map<std::string, Feature> names{
      {"er", Feature::ResidualEnergy},  {"residual_energy", Feature::ResidualEnergy},
      {"et", Feature::TxEnergy},        {"tx_energy", Feature::TxEnergy},
      {"d", Feature::Distance},         {"distance", Feature::Distance},
      {"h", Feature::HopCount},         {"hop_count", Feature::HopCount},
      {"etx", Feature::Etx},            {"ls", Feature::LinkStability},
      {"link_stability", Feature::LinkStability},
  };
  auto it = names.find(name);
  if (it == names.end()) throw UsageError("unknown metric '" + name + "'");
  return it->second;
}

std::vector<SeededKpi> run_seeds(const SimConfig& base, const std::vector<std::uint64_t>& seeds, std::size_t workers) {
  std::vector<SeededKpi> out(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    KpiAccumulator acc;
    simulate(base, seeds[i], acc);
    out[i] = SeededKpi{seeds[i], acc.result()};
  });
  return out;
}

AblationReport run_ablation(const SimConfig& base, std::optional<Feature> drop, const std::vector<std::uint64_t>& seeds,
                            std::size_t workers, const std::vector<SeededKpi>* full_runs) {
  AblationReport report;
  report.dropped = drop;
  SimConfig full = base;
  full.protocol = Protocol::Taburpl;
  SimConfig reduced = full;
  if (drop) reduced.weights = full.weights.without(*drop);
  report.weights = reduced.weights;
  report.full = full_runs ? *full_runs : run_seeds(full, seeds, workers);
  report.reduced = drop ? run_seeds(reduced, seeds, workers) : report.full;
  report.deltas = ablation_deltas(report.full, report.reduced);
  return report;
}

void write_ablation_csv(std::ostream& out, const AblationReport& report) {
  out << "# dropped=" << (report.dropped ? feature_name(*report.dropped) : "none")
      << " weights=" << report.weights.to_string() << '\n';
  out << "kpi,full_mean,reduced_mean,delta_percent,diff_mean,diff_lower,diff_upper\n";
  for (const auto& d : report.deltas)
    out << d.name << ',' << real(d.full_mean) << ',' << real(d.reduced_mean) << ',' << real(d.delta_percent) << ','
        << real(d.paired_difference.mean) << ',' << real(d.paired_difference.lower) << ','
        << real(d.paired_difference.upper) << '\n';
}

CalibrationResult run_calibration(const SimConfig& base, const std::vector<std::uint64_t>& seeds,
                                  const CalibrationOptions& options, std::size_t workers) {
  if (seeds.empty()) throw InvalidArgument("calibration needs at least one seed");
  SimConfig cfg = base;
  cfg.protocol = Protocol::Taburpl;
  Evaluator evaluate = [&](const WeightVector& w, std::size_t) {
    SimConfig c = cfg;
    c.weights = w;
    const auto runs = run_seeds(c, seeds, workers);
    ObjectivePoint p;
    for (const auto& r : runs) {
      p.pdr += r.kpi.pdr;
      p.energy += r.kpi.energy_total;
    }
    p.pdr /= static_cast<double>(runs.size());
    p.energy /= static_cast<double>(runs.size());
    return p;
  };
  return calibrate(evaluate, options);
}

}  // namespace taburpl
