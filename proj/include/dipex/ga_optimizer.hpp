#pragma once

#include "dipex/em_forward.hpp"
#include "dipex/inverse_solver.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dipex {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const noexcept { return hi - lo; }
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

/// Box for dipole positions and the kinds the search may use.
struct SearchBounds {
  Interval x, y, z;
  std::vector<DipoleKind> allowed_kinds{kAllKinds.begin(), kAllKinds.end()};

  void validate() const;
  bool contains(const Vec3 &p) const noexcept {
    return x.contains(p.x()) && y.contains(p.y()) && z.contains(p.z());
  }
};

struct GaConfig {
  int population = 50;
  int max_generations = 100;
  int stall_generations = 20;
  double crossover_rate = 0.8;
  double mutation_rate = 0.15;
  int elite_count = 2;
  std::uint64_t seed = 1;
  /// Worker threads for fitness evaluation; 0 picks the hardware count.
  /// Results do not depend on this value.
  int threads = 0;
  /// Coordinate-wise pattern search applied to the final best layout, kinds
  /// held fixed. 0 disables it.
  int refine_evaluations = 600;
  /// Share of the initial population built from the previous (N-1) best
  /// layout plus one random dipole. Used by extract_auto only.
  double warm_fraction = 0.5;
  /// Share of each new generation replaced by fresh individuals: the
  /// warm-start genes (if any) plus random dipoles.
  double immigrant_fraction = 0.3;

  void validate() const;
};

/// Fitness assigned to layouts the inner solver rejects.
inline constexpr double kPenaltyFitness = 2.0;

struct Individual {
  std::vector<DipoleSlot> genes;
  double fitness = kPenaltyFitness;
  FitResult fit;
};

struct GaRunResult {
  Individual best;
  /// Best fitness after each generation (index 0 = initial population).
  std::vector<double> best_per_generation;
  /// Fitness after the final refinement (equals best.fitness when disabled).
  double refined_fitness = kPenaltyFitness;
  bool stalled = false;
  std::uint64_t seed = 0;
  /// Number of layouts evaluated, and how many of them had a gene outside
  /// the search bounds (expected to stay 0).
  std::size_t evaluations = 0;
  std::size_t out_of_bounds = 0;
};

/// (dipole count, generation, best fitness so far)
using GaProgress = std::function<void(int, int, double)>;

/// RE of the inner back-and-forth fit for this layout, or kPenaltyFitness
/// when the solver fails. Never throws for solver failures.
double evaluate_individual(Individual &ind, const Problem &problem, const SolverConfig &solver);

/// `warm_start` (fewer than n_dipoles genes) seeds warm_fraction of the
/// initial population; the remaining genes of those individuals are random.
GaRunResult ga_run(int n_dipoles, const SearchBounds &bounds, const GaConfig &ga,
                   const Problem &problem, const SolverConfig &solver,
                   const GaProgress &progress = {},
                   std::span<const DipoleSlot> warm_start = {});

struct ExtractionResult {
  std::vector<Dipole> dipoles;
  double re = 1.0;
  double re1 = 1.0;
  double re2 = 0.0;
  FitResult fit;
  /// (dipole count, best RE) for every count that was run.
  std::vector<std::pair<int, double>> n_history;
  std::vector<std::vector<double>> generation_history;
  std::uint64_t seed = 0;
  /// max_dipoles was reached before the RE improvement dropped to mu.
  bool capped = false;
  std::vector<std::string> warnings;
};

/// Grows the dipole count from 1 until adding a dipole improves RE by no
/// more than mu, and returns the last count that still improved by more.
ExtractionResult extract_auto(const SearchBounds &bounds, const GaConfig &ga,
                              const SolverConfig &solver, const Problem &problem, double mu,
                              int max_dipoles, const GaProgress &progress = {});

/// Orders dipole blocks by kind, then x, y, z.
void canonicalize(std::vector<DipoleSlot> &genes);

} // namespace dipex
