#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "taburpl/analysis.hpp"
#include "taburpl/config.hpp"
#include "taburpl/engine.hpp"
#include "taburpl/harness.hpp"
#include "taburpl/trace.hpp"

namespace fs = std::filesystem;
using namespace taburpl;

namespace {

enum Exit { kOk = 0, kUsage = 1, kSimulation = 2, kConnectivity = 3 };

struct Common {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string protocol;
  std::size_t nodes = 0;
  double rate = -1.0;
  std::string out;
  std::size_t workers = 0;
  bool redraw = false;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  SimConfig& s = cfg.scenario;
  if (!c.protocol.empty()) {
    s.protocol = parse_protocol(c.protocol);
    cfg.matrix.protocols = {s.protocol};
  }
  if (c.nodes) {
    s.nodes = c.nodes;
    cfg.matrix.sizes = {c.nodes};
  }
  if (c.rate >= 0.0) {
    s.rate = c.rate;
    cfg.matrix.rates = {c.rate};
  }
  if (!c.seeds.empty()) cfg.matrix.seeds = c.seeds;
  if (c.redraw) s.redraw_until_connected = true;
  try {
    s.validate();
    cfg.matrix.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

std::size_t workers_of(const Common& c) { return c.workers ? c.workers : default_workers(); }

void add_common(CLI::App* app, Common& c, bool multi_seed) {
  app->add_option("--config", c.config, "INI scenario/matrix file");
  if (multi_seed) app->add_option("--seeds,--seed", c.seeds, "seed list");
  else app->add_option("--seed,--seeds", c.seeds, "seed")->expected(1);
  app->add_option("--protocol", c.protocol, "OF0, ETX-OF, TABU-UNNORM or TABURPL");
  app->add_option("--nodes", c.nodes, "node count");
  app->add_option("--rate", c.rate, "packets/s per node");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--workers", c.workers, "parallel simulations");
  app->add_flag("--redraw-until-connected", c.redraw, "redraw disconnected deployments with seed+1, seed+2, ...");
}

void print_kpis(std::ostream& out, const KpiRecord& k) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "pdr=%.4f plr=%.2f%% energy_total=%.3fJ energy_per_node=%.3fJ path=%.3f ctrl_msgs=%llu "
                "ctrl_bytes=%llu (%.1f B/min) delay=%.2fms throughput=%.1fbps lsr=%.4f\n",
                k.pdr, k.plr, k.energy_total, k.energy_mean_per_node, k.avg_path_length,
                static_cast<unsigned long long>(k.control_messages), static_cast<unsigned long long>(k.control_bytes),
                k.control_bytes_per_min, k.e2e_delay_ms, k.throughput_bps, k.lsr_mean);
  out << buf;
}

int cmd_run(const Common& c, bool write_trace_file) {
  const ExperimentConfig cfg = load(c);
  const std::uint64_t seed = c.seeds.empty() ? 1 : c.seeds.front();
  KpiAccumulator acc;
  std::ofstream trace_file;
  std::optional<TraceWriter> writer;
  std::vector<TraceSink*> sinks{&acc};
  if (!c.out.empty()) {
    prepare_output_dir(c.out);
    std::ofstream(fs::path(c.out) / "config.ini") << [&] {
      std::ostringstream s;
      write_config(s, cfg);
      return s.str();
    }();
    if (write_trace_file) {
      trace_file.open(fs::path(c.out) / "trace.txt");
      writer.emplace(trace_file);
      sinks.push_back(&*writer);
    }
  }
  TraceTee tee(sinks);
  const SimResult r = simulate(cfg.scenario, seed, tee);
  const KpiRecord k = acc.result();
  std::cout << protocol_name(cfg.scenario.protocol) << " nodes=" << cfg.scenario.nodes
            << " rate=" << cfg.scenario.rate << " seed=" << seed << " deployment_seed=" << r.deployment.seed
            << " mean_degree=" << r.deployment.graph->mean_degree() << " repairs=" << r.repairs << '\n';
  print_kpis(std::cout, k);
  if (!c.out.empty()) {
    const fs::path dir(c.out);
    RunRecord rec{CellKey{cfg.scenario.protocol, cfg.scenario.nodes, cfg.scenario.rate}, seed, true, {}, k,
                  r.deployment.graph->mean_degree(), r.repairs, r.deployment.seed};
    std::ofstream kp(dir / "kpis.csv");
    write_results_csv(kp, {rec});
    std::ofstream topo(dir / "topology.txt");
    write_edge_list(topo, *r.deployment.graph, r.deployment.field.sink, r.deployment.seed);
    if (!r.convergence.empty()) {
      std::ofstream conv(dir / "convergence.txt");
      for (std::size_t i = 0; i < r.convergence.size(); ++i) {
        conv << "# optimization " << i << " reason=" << termination_name(r.convergence[i].reason) << '\n';
        r.convergence[i].write(conv);
      }
    }
  }
  return kOk;
}

int cmd_matrix(const Common& c) {
  if (c.out.empty()) throw UsageError("matrix needs --out");
  const ExperimentConfig cfg = load(c);
  prepare_output_dir(c.out);
  const MatrixResult result = run_matrix(cfg, workers_of(c));
  write_matrix_outputs(c.out, cfg, result);
  std::cout << result.runs.size() << " runs, " << result.failures() << " failed; results in " << c.out << '\n';
  for (const auto& r : result.runs)
    if (!r.ok)
      std::cerr << "failed: " << protocol_name(r.cell.protocol) << " n=" << r.cell.nodes << " rate=" << r.cell.rate
                << " seed=" << r.seed << ": " << r.error << '\n';
  return result.failures() ? kSimulation : kOk;
}

int cmd_calibrate(const Common& c, const std::string& mode) {
  ExperimentConfig cfg = load(c);
  CalibrationOptions opts;
  if (mode == "smoke") opts = CalibrationOptions::smoke();
  else if (mode != "full") throw UsageError("--mode must be smoke or full");
  if (!c.out.empty()) prepare_output_dir(c.out);
  const auto seeds = c.seeds.empty() ? cfg.matrix.seeds : c.seeds;
  const CalibrationResult r = run_calibration(cfg.scenario, seeds, opts, workers_of(c));
  std::cout << "best weights " << r.best.to_string() << " score " << r.best_score << " (" << r.candidates.size()
            << " candidates)\n";
  if (!c.out.empty()) {
    std::ofstream report(fs::path(c.out) / "calibration.csv");
    write_calibration_report(report, r);
    cfg.scenario.weights = r.best;
    std::ofstream conf(fs::path(c.out) / "calibrated.ini");
    write_config(conf, cfg);
  }
  return kOk;
}

int cmd_ablate(const Common& c, const std::string& drop) {
  const ExperimentConfig cfg = load(c);
  std::optional<Feature> feature;
  if (drop != "none") feature = parse_feature(drop);
  if (!c.out.empty()) prepare_output_dir(c.out);
  const auto seeds = c.seeds.empty() ? cfg.matrix.seeds : c.seeds;
  const AblationReport rep = run_ablation(cfg.scenario, feature, seeds, workers_of(c));
  write_ablation_csv(std::cout, rep);
  if (!c.out.empty()) {
    std::ofstream out(fs::path(c.out) / "ablation.csv");
    write_ablation_csv(out, rep);
  }
  return kOk;
}

int cmd_correct(const std::string& input, const std::string& output) {
  std::ifstream in(input);
  if (!in) throw UsageError("cannot open trace '" + input + "'");
  const TraceLog corrected = correct_trace_energy(read_trace(in));
  if (output.empty() || output == "-") {
    write_trace(std::cout, corrected);
  } else {
    std::ofstream out(output);
    write_trace(out, corrected);
  }
  return kOk;
}

int cmd_topo_export(const Common& c, const std::string& file) {
  const ExperimentConfig cfg = load(c);
  const std::uint64_t seed = c.seeds.empty() ? 1 : c.seeds.front();
  const Deployment d = make_deployment(cfg.scenario, seed);
  if (file.empty() || file == "-") {
    write_edge_list(std::cout, *d.graph, d.field.sink, d.seed);
  } else {
    std::ofstream out(file);
    write_edge_list(out, *d.graph, d.field.sink, d.seed);
  }
  return kOk;
}

int cmd_topo_import(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot open edge list '" + file + "'");
  const TopologyFile t = read_edge_list(in);
  const auto lost = orphans(t.graph, t.sink);
  std::cout << "nodes=" << t.graph.node_count() << " edges=" << t.graph.edge_count()
            << " mean_degree=" << t.graph.mean_degree() << " sink=" << t.sink << " seed=" << t.seed
            << " orphans=" << lost.size() << '\n';
  return lost.empty() ? kOk : kConnectivity;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabu-search parent selection simulator for sink-rooted lossy networks"};
  app.require_subcommand(1);

  Common run_opts, matrix_opts, cal_opts, abl_opts, topo_opts;
  bool trace_flag = false;
  auto* run = app.add_subcommand("run", "simulate one scenario");
  add_common(run, run_opts, false);
  run->add_flag("--trace", trace_flag, "write trace.txt into --out");

  auto* matrix = app.add_subcommand("matrix", "run the experiment matrix");
  add_common(matrix, matrix_opts, true);

  std::string mode = "smoke";
  auto* cal = app.add_subcommand("calibrate", "two-stage weight calibration");
  add_common(cal, cal_opts, true);
  cal->add_option("--mode", mode, "smoke (5+5 candidates) or full (150+50)");

  std::string drop = "none";
  auto* abl = app.add_subcommand("ablate", "drop one metric and compare against the full weights");
  add_common(abl, abl_opts, true);
  abl->add_option("--drop", drop, "d, h, etx, ls, er, et or none");

  std::string trace_in, trace_out;
  auto* corr = app.add_subcommand("correct-trace", "subtract deferred control energy from a trace");
  corr->add_option("input", trace_in, "trace file")->required();
  corr->add_option("output", trace_out, "corrected trace (default stdout)");

  std::string topo_file;
  auto* topo = app.add_subcommand("topo", "edge-list export and import");
  topo->require_subcommand(1);
  auto* exp = topo->add_subcommand("export", "write the deployment's edge list");
  add_common(exp, topo_opts, false);
  exp->add_option("file", topo_file, "output file (default stdout)");
  auto* imp = topo->add_subcommand("import", "read and check an edge list");
  imp->add_option("file", topo_file, "edge list")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_opts, trace_flag);
    if (*matrix) return cmd_matrix(matrix_opts);
    if (*cal) return cmd_calibrate(cal_opts, mode);
    if (*abl) return cmd_ablate(abl_opts, drop);
    if (*corr) return cmd_correct(trace_in, trace_out);
    if (*exp) return cmd_topo_export(topo_opts, topo_file);
    if (*imp) return cmd_topo_import(topo_file);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConnectivityError& e) {
    std::cerr << "connectivity error: " << e.what() << '\n';
    return kConnectivity;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "simulation failure: " << e.what() << '\n';
    return kSimulation;
  }
  return kUsage;
}
