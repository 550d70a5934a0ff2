#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "taburpl/cost.hpp"
#include "taburpl/rng.hpp"

namespace taburpl {

struct TabuParams {
  std::size_t tenure = 30;
  std::size_t neighbourhood_cap = 4000;
  std::size_t max_iterations = 150;
  std::size_t stall_limit = 40;
  double aspiration_factor = 0.97;
  /// Stop as soon as the best cost drops below this value. Off by default.
  std::optional<double> stop_below;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Single parent reassignment; also the tabu key.
struct Move {
  NodeId node = 0;
  NodeId parent = 0;

  friend auto operator<=>(const Move&, const Move&) = default;
};

/// FIFO of recently made moves. A move recorded at iteration t is tabu for
/// iterations t + 1 .. t + tenure.
class TabuList {
 public:
  explicit TabuList(std::size_t tenure) : tenure_(tenure) {}

  void add(Move move, std::size_t iteration);
  bool is_tabu(Move move, std::size_t iteration) const;
  /// Drops entries that are no longer tabu at `iteration`.
  void expire(std::size_t iteration);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t tenure() const noexcept { return tenure_; }

 private:
  struct Entry {
    Move move;
    std::size_t added;
  };
  std::size_t tenure_;
  std::deque<Entry> entries_;
};

enum class Termination { MaxIterations, Stall, Aspiration, EmptyNeighbourhood };

const char* termination_name(Termination t) noexcept;

struct ConvergenceTrace {
  std::vector<double> best_cost;     // after each iteration
  std::vector<double> current_cost;  // after each iteration
  std::vector<std::size_t> tabu_length;
  double initial_cost = 0.0;
  std::size_t last_improvement = 0;  // 0 when the initial solution was never beaten
  Termination reason = Termination::MaxIterations;

  std::size_t iterations() const noexcept { return best_cost.size(); }

  /// One `iter best_cost current_cost tabu_len` line per iteration.
  void write(std::ostream& out) const;
};

struct TabuResult {
  ParentAssignment best;
  double best_cost = 0.0;
  ConvergenceTrace trace;
};

/// Greedy minimum-hop assignment; ties go to the cheaper edge, then the
/// lower parent id.
ParentAssignment initial_solution(const NetworkSnapshot& snap, std::span<const double> edge_costs);

/// Every single-parent reassignment of `current` that keeps it acyclic, in
/// (node, parent) order. Above `cap` moves a uniform sample of `cap` is kept.
std::vector<Move> generate_moves(const ParentAssignment& current, const NetworkSnapshot& snap,
                                 std::size_t cap, Rng& rng);

/// The same neighbourhood materialized as full assignments.
std::vector<ParentAssignment> generate_neighbours(const ParentAssignment& current,
                                                  const NetworkSnapshot& snap, std::size_t cap, Rng& rng);

/// Index of the cheapest admissible candidate. A tabu candidate is
/// admissible when its cost is below aspiration * best_cost. If nothing is
/// admissible the cheapest candidate overall is returned. Ties go to the
/// lower (node, parent).
std::size_t select_best_non_tabu(std::span<const Move> moves, std::span<const double> costs,
                                 const TabuList& tabu, std::size_t iteration, double best_cost,
                                 double aspiration_factor);

/// Tabu search over parent assignments. Starts from initial_solution()
/// unless `start` is given.
TabuResult tabu_search(const NetworkSnapshot& snap, const WeightVector& w, const TabuParams& params,
                       CostMode mode = CostMode::Normalized,
                       const std::optional<ParentAssignment>& start = std::nullopt);

struct OptimalResult {
  ParentAssignment assignment;
  double cost = 0.0;
  std::uint64_t assignments_visited = 0;
};

inline constexpr std::size_t kBruteForceNodeLimit = 10;

/// Exhaustive minimum of assignment_cost() over all acyclic assignments.
/// Throws SizeLimitError above kBruteForceNodeLimit nodes.
OptimalResult brute_force_optimal(const NetworkSnapshot& snap, const WeightVector& w,
                                  CostMode mode = CostMode::Normalized);

/// Parent pointers only follow radio links and stay within active nodes.
bool is_feasible(const ParentAssignment& a, const NetworkSnapshot& snap);

}  // namespace taburpl
