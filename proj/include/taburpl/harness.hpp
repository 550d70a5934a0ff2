#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "taburpl/analysis.hpp"
#include "taburpl/calibration.hpp"
#include "taburpl/config.hpp"

namespace taburpl {

/// Runs fn(0) .. fn(count - 1) on up to `workers` threads. The first
/// exception thrown by any call is rethrown after all threads finish.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

std::size_t default_workers() noexcept;

struct CellKey {
  Protocol protocol = Protocol::Taburpl;
  std::size_t nodes = 50;
  double rate = 10.0;
};

struct RunRecord {
  CellKey cell;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when !ok
  KpiRecord kpi;
  double mean_degree = 0.0;
  std::uint64_t repairs = 0;
  std::uint64_t deployment_seed = 0;
};

/// One simulation of `base` with the cell's protocol, size and rate.
/// Failures are captured in the record instead of thrown.
RunRecord run_cell(const SimConfig& base, const CellKey& cell, std::uint64_t seed);

struct MatrixResult {
  std::vector<RunRecord> runs;  // ordered by size, rate, protocol, seed
  std::size_t failures() const noexcept;
};

MatrixResult run_matrix(const ExperimentConfig& config, std::size_t workers);

/// One row per run with every KPI.
void write_results_csv(std::ostream& out, const std::vector<RunRecord>& runs);
/// One row per cell: KPI means with 95% bootstrap bounds.
void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& runs, std::size_t resamples = 10000);
/// Files `<kpi>_n<nodes>.dat` in `dir`: one row per rate, one column per protocol.
void write_plot_data(const std::filesystem::path& dir, const std::vector<RunRecord>& runs);

/// Creates `dir`, refusing one that exists and is not empty.
void prepare_output_dir(const std::filesystem::path& dir);

/// Writes results.csv, summary.csv, plots/ and config.ini into `dir`.
void write_matrix_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                          const MatrixResult& result);

/// Accepts feature names or the short forms d, h, etx, ls, er, et.
Feature parse_feature(const std::string& name);

struct AblationReport {
  std::optional<Feature> dropped;
  WeightVector weights = WeightVector::balanced();
  std::vector<SeededKpi> full;
  std::vector<SeededKpi> reduced;
  std::vector<KpiDelta> deltas;
};

/// Reruns `base` (TABURPL) with one weight removed and the rest rescaled,
/// and compares against the unmodified weights seed by seed. With no
/// feature the reduced runs reuse the full weights.
AblationReport run_ablation(const SimConfig& base, std::optional<Feature> drop,
                            const std::vector<std::uint64_t>& seeds, std::size_t workers,
                            const std::vector<SeededKpi>* full_runs = nullptr);

/// TABURPL runs of `base` over `seeds`, in seed order.
std::vector<SeededKpi> run_seeds(const SimConfig& base, const std::vector<std::uint64_t>& seeds, std::size_t workers);

void write_ablation_csv(std::ostream& out, const AblationReport& report);

/// Calibrates TABURPL weights on `base`; each candidate's objectives are
/// the mean PDR and mean total energy over `seeds`.
CalibrationResult run_calibration(const SimConfig& base, const std::vector<std::uint64_t>& seeds,
                                  const CalibrationOptions& options, std::size_t workers);

}  // namespace taburpl
