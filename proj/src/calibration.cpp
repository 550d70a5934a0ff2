#include "taburpl/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "taburpl/rng.hpp"

namespace taburpl {

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) noexcept {
  const bool no_worse = a.pdr >= b.pdr && a.energy <= b.energy;
  const bool better = a.pdr > b.pdr || a.energy < b.energy;
  return no_worse && better;
}

std::vector<std::vector<double>> dirichlet_sample(std::size_t dim, double alpha, std::size_t count,
                                                  std::uint64_t seed) {
  if (dim < 2) throw InvalidArgument("dirichlet_sample: dimension must be at least 2");
  if (count == 0) throw InvalidArgument("dirichlet_sample: count must be at least 1");
  if (!(alpha > 0.0)) throw InvalidArgument("dirichlet_sample: alpha must be positive");
  Rng rng(derive_seed(seed, 10));
  std::vector<std::vector<double>> out;
  out.reserve(count);
  while (out.size() < count) {
    std::vector<double> draw(dim);
    double sum = 0.0;
    for (double& x : draw) {
      x = rng.gamma(alpha);
      sum += x;
    }
    if (!(sum > 0.0)) continue;
    for (double& x : draw) x /= sum;
    out.push_back(std::move(draw));
  }
  return out;
}

std::vector<WeightVector> sample_weight_vectors(std::size_t count, std::uint64_t seed, double alpha) {
  std::vector<WeightVector> out;
  for (const auto& draw : dirichlet_sample(kFeatureCount, alpha, count, seed)) {
    FeatureVector w{};
    std::copy(draw.begin(), draw.end(), w.begin());
    out.emplace_back(w);
  }
  return out;
}

std::vector<std::size_t> pareto_front(std::span<const ObjectivePoint> points) {
  if (points.empty()) throw InvalidArgument("pareto_front: no points");
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j)
      dominated = j != i && dominates(points[j], points[i]);
    if (!dominated) front.push_back(i);
  }
  return front;
}

double hypervolume_2d(std::span<const ObjectivePoint> front, const ObjectivePoint& ref) {
  for (const auto& p : front)
    if (p.pdr < ref.pdr || p.energy > ref.energy)
      throw InvalidReference("hypervolume_2d: a point does not dominate the reference point");
  std::vector<ObjectivePoint> sorted(front.begin(), front.end());
  std::sort(sorted.begin(), sorted.end(), [](const ObjectivePoint& a, const ObjectivePoint& b) {
    return a.pdr != b.pdr ? a.pdr > b.pdr : a.energy < b.energy;
  });
  // Sweep from the highest PDR down; each point adds the strip of energy it
  // improves over everything with higher PDR.
  double volume = 0.0;
  double bound = ref.energy;
  for (const auto& p : sorted) {
    if (p.energy < bound) {
      volume += (p.pdr - ref.pdr) * (bound - p.energy);
      bound = p.energy;
    }
  }
  return volume;
}

std::vector<double> exclusive_contributions(std::span<const ObjectivePoint> points, const ObjectivePoint& ref) {
  const double total = hypervolume_2d(points, ref);
  std::vector<double> out(points.size(), 0.0);
  std::vector<ObjectivePoint> rest;
  for (std::size_t i = 0; i < points.size(); ++i) {
    rest.clear();
    for (std::size_t j = 0; j < points.size(); ++j)
      if (j != i) rest.push_back(points[j]);
    out[i] = std::max(0.0, total - hypervolume_2d(rest, ref));
  }
  return out;
}

std::vector<WeightVector> fine_tune(const WeightVector& base, double sigma, std::size_t count, std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidArgument("fine_tune: sigma must be non-negative");
  Rng rng(derive_seed(seed, 11));
  std::vector<WeightVector> out;
  out.reserve(count);
  while (out.size() < count) {
    FeatureVector w{};
    double sum = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      w[i] = std::max(0.0, base[i] + sigma * rng.normal());
      sum += w[i];
    }
    if (!(sum > 0.0)) continue;  // every component clamped away; draw again
    for (double& x : w) x /= sum;
    out.emplace_back(w);
  }
  return out;
}

double geometric_mean_score(double norm_pdr, double norm_inv_energy) {
  if (norm_pdr < 0.0 || norm_inv_energy < 0.0)
    throw InvalidArgument("geometric_mean_score: inputs must be non-negative");
  return std::sqrt(norm_pdr * norm_inv_energy);
}

CalibrationOptions CalibrationOptions::smoke() {
  CalibrationOptions o;
  o.coarse_count = 5;
  o.retained = 2;
  o.fine_count = 5;
  return o;
}

namespace {

ObjectivePoint checked(ObjectivePoint p) {
  if (!std::isfinite(p.pdr) || p.pdr < 0.0 || p.pdr > 1.0)
    throw InvalidArgument("objective PDR must lie in [0, 1]");
  if (!std::isfinite(p.energy) || !(p.energy > 0.0)) throw InvalidArgument("objective energy must be positive");
  return p;
}

}  // namespace

CalibrationResult calibrate(const Evaluator& evaluate, const CalibrationOptions& options) {
  if (options.coarse_count == 0 || options.retained == 0)
    throw InvalidArgument("calibrate: coarse stage needs at least one candidate");
  CalibrationResult result;

  // Stage 1
  const auto coarse = sample_weight_vectors(options.coarse_count, options.seed, options.dirichlet_alpha);
  std::vector<ObjectivePoint> points;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    points.push_back(checked(evaluate(coarse[i], i)));
    result.candidates.push_back({i, coarse[i], points.back(), 0.0, CalibrationStage::Coarse});
  }
  ObjectivePoint ref{points.front().pdr, points.front().energy};
  for (const auto& p : points) {
    ref.pdr = std::min(ref.pdr, p.pdr);
    ref.energy = std::max(ref.energy, p.energy);
  }
  ref.pdr /= options.reference_scale;
  ref.energy *= options.reference_scale;
  const auto contrib = exclusive_contributions(points, ref);
  for (std::size_t i = 0; i < coarse.size(); ++i) result.candidates[i].score = contrib[i];

  std::vector<std::size_t> order(coarse.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return contrib[a] > contrib[b]; });
  order.resize(std::min(options.retained, order.size()));
  result.retained = order;

  // Stage 2
  const std::size_t base_id = order.front();
  const WeightVector base = coarse[base_id];
  const auto fine = fine_tune(base, options.sigma, options.fine_count, options.seed);

  std::vector<WeightVector> pool{base};
  std::vector<ObjectivePoint> pool_points{points[base_id]};
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const std::size_t id = coarse.size() + i;
    pool.push_back(fine[i]);
    pool_points.push_back(checked(evaluate(fine[i], id)));
    result.candidates.push_back({id, fine[i], pool_points.back(), 0.0, CalibrationStage::Fine});
  }

  double pdr_lo = pool_points.front().pdr, pdr_hi = pdr_lo;
  double inv_lo = 1.0 / pool_points.front().energy, inv_hi = inv_lo;
  for (const auto& p : pool_points) {
    pdr_lo = std::min(pdr_lo, p.pdr);
    pdr_hi = std::max(pdr_hi, p.pdr);
    inv_lo = std::min(inv_lo, 1.0 / p.energy);
    inv_hi = std::max(inv_hi, 1.0 / p.energy);
  }
  std::size_t winner = 0;
  std::vector<double> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    scores[i] = geometric_mean_score(normalize(pool_points[i].pdr, pdr_lo, pdr_hi),
                                     normalize(1.0 / pool_points[i].energy, inv_lo, inv_hi));
    if (scores[i] > scores[winner]) winner = i;
  }
  for (std::size_t i = 1; i < pool.size(); ++i) result.candidates[coarse.size() + i - 1].score = scores[i];

  result.best = pool[winner];
  result.best_score = scores[winner];
  return result;
}

void write_calibration_report(std::ostream& out, const CalibrationResult& result) {
  const auto old = out.precision(17);
  out << "candidate_id,w1,w2,w3,w4,w5,w6,pdr,energy,score,stage\n";
  for (const auto& c : result.candidates) {
    out << c.id;
    for (double w : c.weights.values()) out << ',' << w;
    out << ',' << c.objectives.pdr << ',' << c.objectives.energy << ',' << c.score << ','
        << (c.stage == CalibrationStage::Coarse ? "coarse" : "fine") << '\n';
  }
  out.precision(old);
}

}  // namespace taburpl
