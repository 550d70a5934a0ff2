#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "taburpl/cost.hpp"

namespace taburpl {

/// Objectives of one evaluated weight vector: PDR is maximized, energy minimized.
struct ObjectivePoint {
  double pdr = 0.0;
  double energy = 0.0;

  friend bool operator==(const ObjectivePoint&, const ObjectivePoint&) = default;
};

/// a is at least as good as b on both objectives and strictly better on one.
bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) noexcept;

/// Flat Dirichlet-family draws on the (dim-1)-simplex.
std::vector<std::vector<double>> dirichlet_sample(std::size_t dim, double alpha, std::size_t count,
                                                  std::uint64_t seed);

/// dirichlet_sample(6, alpha, count, seed) as weight vectors.
std::vector<WeightVector> sample_weight_vectors(std::size_t count, std::uint64_t seed, double alpha = 1.0);

/// Indices of the non-dominated points, ascending.
std::vector<std::size_t> pareto_front(std::span<const ObjectivePoint> points);

/// Exact 2-D hypervolume (area) dominated by `front` relative to `ref`.
/// Throws InvalidReference if a point does not dominate the reference.
double hypervolume_2d(std::span<const ObjectivePoint> front, const ObjectivePoint& ref);

/// Hypervolume lost when each point is removed from the set; zero for
/// dominated points.
std::vector<double> exclusive_contributions(std::span<const ObjectivePoint> points, const ObjectivePoint& ref);

/// Gaussian perturbations of `base`, clamped at zero and renormalized.
std::vector<WeightVector> fine_tune(const WeightVector& base, double sigma, std::size_t count, std::uint64_t seed);

/// sqrt(norm_pdr * norm_inv_energy)
double geometric_mean_score(double norm_pdr, double norm_inv_energy);

enum class CalibrationStage { Coarse, Fine };

struct CandidateRecord {
  std::size_t id = 0;
  WeightVector weights = WeightVector::balanced();
  ObjectivePoint objectives;
  double score = 0.0;  // hypervolume contribution (coarse) or geometric mean (fine)
  CalibrationStage stage = CalibrationStage::Coarse;
};

struct CalibrationOptions {
  std::size_t coarse_count = 150;
  std::size_t retained = 10;
  std::size_t fine_count = 50;
  double dirichlet_alpha = 1.0;
  double sigma = 0.03;
  double reference_scale = 1.1;
  std::uint64_t seed = 1;

  static CalibrationOptions smoke();
};

struct CalibrationResult {
  WeightVector best = WeightVector::balanced();
  double best_score = 0.0;
  std::vector<CandidateRecord> candidates;  // every evaluated vector, in evaluation order
  std::vector<std::size_t> retained;         // ids kept after the coarse stage, best first
};

using Evaluator = std::function<ObjectivePoint(const WeightVector&, std::size_t candidate_id)>;

/// Coarse Dirichlet search ranked by hypervolume contribution, then
/// Gaussian fine-tuning of the best vector ranked by geometric-mean score.
CalibrationResult calibrate(const Evaluator& evaluate, const CalibrationOptions& options);

/// `candidate_id,w1..w6,pdr,energy,score,stage` rows with a header.
void write_calibration_report(std::ostream& out, const CalibrationResult& result);

}  // namespace taburpl
