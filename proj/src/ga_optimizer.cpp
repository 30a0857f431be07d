#include "dipex/ga_optimizer.hpp"

#include "dipex/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>
#include <tuple>

namespace dipex {
namespace {

constexpr double kImprovementTol = 1e-6;
constexpr double kMutationSigma = 0.05; // fraction of the range
constexpr int kTournamentSize = 3;

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double sample(const Interval &iv, Rng &rng) {
  if (iv.width() == 0.0)
    return iv.lo;
  return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
}

DipoleKind sample_kind(const SearchBounds &b, Rng &rng) {
  std::uniform_int_distribution<std::size_t> pick(0, b.allowed_kinds.size() - 1);
  return b.allowed_kinds[pick(rng)];
}

DipoleSlot random_slot(const SearchBounds &b, Rng &rng) {
  DipoleSlot s;
  s.kind = sample_kind(b, rng);
  s.position = Vec3(sample(b.x, rng), sample(b.y, rng), sample(b.z, rng));
  return s;
}

double mutate_coordinate(double v, const Interval &iv, Rng &rng) {
  if (iv.width() == 0.0)
    return iv.lo;
  std::normal_distribution<double> step(0.0, kMutationSigma * iv.width());
  return std::clamp(v + step(rng), iv.lo, iv.hi);
}

void mutate(std::vector<DipoleSlot> &genes, const SearchBounds &b, double rate, Rng &rng) {
  std::bernoulli_distribution hit(rate);
  for (auto &g : genes) {
    if (hit(rng))
      g.kind = sample_kind(b, rng);
    if (hit(rng))
      g.position.x() = mutate_coordinate(g.position.x(), b.x, rng);
    if (hit(rng))
      g.position.y() = mutate_coordinate(g.position.y(), b.y, rng);
    if (hit(rng))
      g.position.z() = mutate_coordinate(g.position.z(), b.z, rng);
  }
}

std::size_t tournament(const std::vector<Individual> &pop, Rng &rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  std::size_t best = pick(rng);
  for (int i = 1; i < kTournamentSize; ++i) {
    const std::size_t c = pick(rng);
    if (pop[c].fitness < pop[best].fitness || (pop[c].fitness == pop[best].fitness && c < best))
      best = c;
  }
  return best;
}

// Evaluates pop[i] for every i in `todo`. Each slot is written by exactly one
// worker, so the outcome is independent of scheduling.
void evaluate_all(std::vector<Individual> &pop, const std::vector<std::size_t> &todo,
                  const Problem &problem, const SolverConfig &solver, int threads,
                  const SearchBounds &bounds, GaRunResult &stats) {
  if (todo.empty())
    return;
  for (std::size_t i : todo)
    for (const auto &g : pop[i].genes)
      if (!bounds.contains(g.position)) {
        ++stats.out_of_bounds;
        break;
      }
  stats.evaluations += todo.size();
  unsigned n_workers = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(todo.size()));
  if (n_workers <= 1) {
    for (std::size_t i : todo)
      evaluate_individual(pop[i], problem, solver);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++)
      evaluate_individual(pop[todo[k]], problem, solver);
  };
  std::vector<std::jthread> workers;
  for (unsigned w = 0; w < n_workers; ++w)
    workers.emplace_back(work);
}

// Coordinate pattern search around the best layout. Kinds stay fixed; every
// trial point is clamped to the bounds.
Individual refine(Individual best, const SearchBounds &b, const Problem &problem,
                  const SolverConfig &solver, int budget, GaRunResult &stats) {
  const Interval *axes[3] = {&b.x, &b.y, &b.z};
  double step[3];
  for (int a = 0; a < 3; ++a)
    step[a] = 0.02 * axes[a]->width();
  const double min_step = 1e-6;

  int used = 0;
  while (used < budget) {
    bool improved = false;
    for (std::size_t d = 0; d < best.genes.size() && used < budget; ++d) {
      for (int a = 0; a < 3 && used < budget; ++a) {
        if (step[a] < min_step)
          continue;
        for (double sign : {1.0, -1.0}) {
          Individual trial;
          trial.genes = best.genes;
          double &c = trial.genes[d].position[a];
          c = std::clamp(c + sign * step[a], axes[a]->lo, axes[a]->hi);
          if (c == best.genes[d].position[a])
            continue;
          evaluate_individual(trial, problem, solver);
          ++used;
          ++stats.evaluations;
          if (!b.contains(trial.genes[d].position))
            ++stats.out_of_bounds;
          if (trial.fitness < best.fitness) {
            best = std::move(trial);
            improved = true;
            break;
          }
          if (used >= budget)
            break;
        }
      }
    }
    if (!improved) {
      bool any = false;
      for (double &s : step) {
        s *= 0.5;
        any = any || s >= min_step;
      }
      if (!any)
        break;
    }
  }
  canonicalize(best.genes);
  return best;
}

} // namespace

void SearchBounds::validate() const {
  for (const Interval *iv : {&x, &y, &z})
    if (!std::isfinite(iv->lo) || !std::isfinite(iv->hi) || iv->hi < iv->lo)
      throw ConfigError("search bounds: each interval needs finite lo <= hi");
  if (allowed_kinds.empty())
    throw ConfigError("search bounds: allowed_kinds must not be empty");
}

void GaConfig::validate() const {
  if (population < 2)
    throw ConfigError("ga: population must be >= 2");
  if (max_generations < 1 || stall_generations < 1)
    throw ConfigError("ga: generation counts must be >= 1");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0) ||
      !(mutation_rate >= 0.0 && mutation_rate <= 1.0))
    throw ConfigError("ga: rates must lie in [0, 1]");
  if (elite_count < 0 || elite_count >= population)
    throw ConfigError("ga: elite_count must be in [0, population)");
  if (refine_evaluations < 0)
    throw ConfigError("ga: refine_evaluations must be >= 0");
  if (!(warm_fraction >= 0.0 && warm_fraction <= 1.0) ||
      !(immigrant_fraction >= 0.0 && immigrant_fraction <= 1.0))
    throw ConfigError("ga: warm_fraction and immigrant_fraction must lie in [0, 1]");
}

void canonicalize(std::vector<DipoleSlot> &genes) {
  std::stable_sort(genes.begin(), genes.end(), [](const DipoleSlot &a, const DipoleSlot &b) {
    return std::make_tuple(static_cast<int>(a.kind), a.position.x(), a.position.y(),
                           a.position.z()) < std::make_tuple(static_cast<int>(b.kind),
                                                             b.position.x(), b.position.y(),
                                                             b.position.z());
  });
}

double evaluate_individual(Individual &ind, const Problem &problem, const SolverConfig &solver) {
  try {
    ind.fit = solve_layout(ind.genes, problem, solver);
    ind.fitness = std::isfinite(ind.fit.re) ? ind.fit.re : kPenaltyFitness;
  } catch (const Error &) {
    ind.fit = FitResult{};
    ind.fitness = kPenaltyFitness;
  }
  return ind.fitness;
}

GaRunResult ga_run(int n_dipoles, const SearchBounds &bounds, const GaConfig &ga,
                   const Problem &problem, const SolverConfig &solver, const GaProgress &progress,
                   std::span<const DipoleSlot> warm_start) {
  if (n_dipoles < 1)
    throw ConfigError("ga_run: n_dipoles must be >= 1");
  bounds.validate();
  ga.validate();
  solver.validate();
  problem.validate();

  GaRunResult result;
  result.seed = ga.seed;
  Rng rng(ga.seed);
  const auto pop_size = static_cast<std::size_t>(ga.population);

  if (warm_start.size() >= static_cast<std::size_t>(n_dipoles))
    throw ConfigError("ga_run: warm start must have fewer genes than n_dipoles");
  for (const auto &g : warm_start)
    if (!bounds.contains(g.position))
      throw ConfigError("ga_run: warm start lies outside the search bounds");
  const auto n_warm = warm_start.empty()
                          ? std::size_t{0}
                          : static_cast<std::size_t>(std::lround(ga.warm_fraction * ga.population));

  std::vector<Individual> pop(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) {
    auto &genes = pop[i].genes;
    if (i < n_warm)
      genes.assign(warm_start.begin(), warm_start.end());
    while (genes.size() < static_cast<std::size_t>(n_dipoles))
      genes.push_back(random_slot(bounds, rng));
    canonicalize(genes);
  }
  std::vector<std::size_t> all(pop_size);
  std::iota(all.begin(), all.end(), 0);
  evaluate_all(pop, all, problem, solver, ga.threads, bounds, result);

  auto rank = [](std::vector<Individual> &p) {
    std::stable_sort(p.begin(), p.end(),
                     [](const Individual &a, const Individual &b) { return a.fitness < b.fitness; });
  };
  rank(pop);
  result.best = pop.front();
  result.best_per_generation.push_back(result.best.fitness);
  if (progress)
    progress(n_dipoles, 1, result.best.fitness);

  int stall = 0;
  std::bernoulli_distribution cross(ga.crossover_rate);
  std::bernoulli_distribution coin(0.5);
  for (int gen = 2; gen <= ga.max_generations; ++gen) {
    std::vector<Individual> next;
    next.reserve(pop_size);
    for (int e = 0; e < ga.elite_count; ++e)
      next.push_back(pop[static_cast<std::size_t>(e)]);
    const std::size_t first_child = next.size();
    const auto n_immigrants = static_cast<std::size_t>(
        std::lround(ga.immigrant_fraction * static_cast<double>(pop_size - first_child)));
    for (std::size_t m = 0; m < n_immigrants; ++m) {
      Individual fresh;
      if (warm_start.empty() && n_dipoles > 1) {
        // current best with one dipole re-drawn
        fresh.genes = pop.front().genes;
        std::uniform_int_distribution<std::size_t> pick(0, fresh.genes.size() - 1);
        fresh.genes[pick(rng)] = random_slot(bounds, rng);
      } else {
        fresh.genes.assign(warm_start.begin(), warm_start.end());
        while (fresh.genes.size() < static_cast<std::size_t>(n_dipoles))
          fresh.genes.push_back(random_slot(bounds, rng));
      }
      canonicalize(fresh.genes);
      next.push_back(std::move(fresh));
    }

    while (next.size() < pop_size) {
      const Individual &pa = pop[tournament(pop, rng)];
      const Individual &pb = pop[tournament(pop, rng)];
      Individual ca, cb;
      ca.genes = pa.genes;
      cb.genes = pb.genes;
      if (cross(rng)) {
        for (std::size_t d = 0; d < ca.genes.size(); ++d)
          if (coin(rng))
            std::swap(ca.genes[d], cb.genes[d]);
      }
      mutate(ca.genes, bounds, ga.mutation_rate, rng);
      mutate(cb.genes, bounds, ga.mutation_rate, rng);
      canonicalize(ca.genes);
      canonicalize(cb.genes);
      next.push_back(std::move(ca));
      if (next.size() < pop_size)
        next.push_back(std::move(cb));
    }

    std::vector<std::size_t> todo(pop_size - first_child);
    std::iota(todo.begin(), todo.end(), first_child);
    evaluate_all(next, todo, problem, solver, ga.threads, bounds, result);
    pop = std::move(next);
    rank(pop);

    if (pop.front().fitness < result.best.fitness - kImprovementTol) {
      stall = 0;
    } else {
      ++stall;
    }
    if (pop.front().fitness < result.best.fitness)
      result.best = pop.front();
    result.best_per_generation.push_back(result.best.fitness);
    if (progress)
      progress(n_dipoles, gen, result.best.fitness);
    if (stall >= ga.stall_generations) {
      result.stalled = true;
      break;
    }
  }

  if (ga.refine_evaluations > 0 && result.best.fitness < kPenaltyFitness)
    result.best = refine(result.best, bounds, problem, solver, ga.refine_evaluations, result);
  result.refined_fitness = result.best.fitness;
  return result;
}

ExtractionResult extract_auto(const SearchBounds &bounds, const GaConfig &ga,
                              const SolverConfig &solver, const Problem &problem, double mu,
                              int max_dipoles, const GaProgress &progress) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw ConfigError("mu must be positive");
  if (max_dipoles < 1)
    throw ConfigError("max_dipoles must be >= 1");

  ExtractionResult out;
  out.seed = ga.seed;
  double previous_re = 1.0; // zero-source prediction
  Individual previous;
  bool have_previous = false;

  for (int n = 1; n <= max_dipoles; ++n) {
    GaConfig cfg = ga;
    cfg.seed = splitmix64(ga.seed ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(n)));
    GaRunResult run = ga_run(n, bounds, cfg, problem, solver, progress,
                             have_previous ? std::span<const DipoleSlot>(previous.genes)
                                           : std::span<const DipoleSlot>());
    const double re = run.best.fitness;
    out.n_history.emplace_back(n, re);
    out.generation_history.push_back(run.best_per_generation);

    if (previous_re - re <= mu) {
      if (!have_previous) {
        out.warnings.push_back("a single dipole improves RE by no more than mu over the "
                               "zero-source baseline; returning it anyway");
        previous = std::move(run.best);
      }
      break;
    }
    previous = std::move(run.best);
    have_previous = true;
    previous_re = re;
    if (n == max_dipoles) {
      out.capped = true;
      out.warnings.push_back("max_dipoles reached before RE converged");
    }
  }

  out.fit = previous.fit;
  out.dipoles = attach_moments(previous.genes, previous.fit.moments.size() ==
                                                       static_cast<Eigen::Index>(previous.genes.size())
                                                   ? previous.fit.moments
                                                   : Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(
                                                         previous.genes.size())));
  out.re = previous.fitness;
  out.re1 = previous.fit.re1;
  out.re2 = previous.fit.re2;
  return out;
}

} // namespace dipex
