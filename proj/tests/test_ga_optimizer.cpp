#include "support.hpp"

#include "dipex/errors.hpp"

#include <doctest.h>

using namespace dipex;

namespace {

GaConfig quick_ga(std::uint64_t seed) {
  GaConfig ga;
  ga.population = 24;
  ga.max_generations = 30;
  ga.stall_generations = 8;
  ga.refine_evaluations = 200;
  ga.seed = seed;
  return ga;
}

const Dipole kLone{DipoleKind::MX, Vec3(0.1, -0.2, 1.3), Complex(4.0, -3.0)};

bool same_result(const ExtractionResult &a, const ExtractionResult &b) {
  if (a.dipoles.size() != b.dipoles.size() || a.re != b.re || a.n_history != b.n_history ||
      a.generation_history != b.generation_history)
    return false;
  for (std::size_t i = 0; i < a.dipoles.size(); ++i)
    if (a.dipoles[i].kind != b.dipoles[i].kind || a.dipoles[i].position != b.dipoles[i].position ||
        a.dipoles[i].moment != b.dipoles[i].moment)
      return false;
  return true;
}

} // namespace

TEST_CASE("fitness of fixed layouts") {
  const Problem p = testing::two_dipole_problem();
  Individual truth;
  truth.genes = layout_of(benchmark::two_dipoles());
  const double f = evaluate_individual(truth, p, SolverConfig{});
  CHECK(f <= 1e-3);
  CHECK(truth.fitness == f);

  Individual again;
  again.genes = truth.genes;
  CHECK(evaluate_individual(again, p, SolverConfig{}) == f);
  CHECK(again.fit.moments == truth.fit.moments);

  Individual degenerate;
  degenerate.genes = {{DipoleKind::PX, Vec3(0.1, 0.1, 1.5)}, {DipoleKind::PX, Vec3(0.1, 0.1, 1.5)}};
  CHECK(evaluate_individual(degenerate, p, SolverConfig{}) == kPenaltyFitness);
}

TEST_CASE("collapsed search space finds the source in the first generation") {
  const Problem p = testing::bench_problem(testing::as_sources({kLone}));
  SearchBounds b{{0.1, 0.1}, {-0.2, -0.2}, {1.3, 1.3}, {DipoleKind::MX}};
  GaConfig ga = quick_ga(3);
  ga.refine_evaluations = 0;
  const GaRunResult r = ga_run(1, b, ga, p, SolverConfig{});
  REQUIRE_FALSE(r.best_per_generation.empty());
  CHECK(r.best_per_generation.front() <= 1e-6);
  CHECK(r.best.genes.size() == 1);
}

TEST_CASE("ga_run invariants") {
  const Problem p = testing::bench_problem(testing::as_sources({kLone}));
  const SearchBounds b = testing::bench_bounds();
  const GaRunResult r = ga_run(1, b, quick_ga(5), p, SolverConfig{});
  // elitism: the per-generation best never gets worse
  for (std::size_t i = 1; i < r.best_per_generation.size(); ++i)
    CHECK(r.best_per_generation[i] <= r.best_per_generation[i - 1]);
  CHECK(r.refined_fitness <= r.best_per_generation.back());
  CHECK(r.evaluations > 0);
  CHECK(r.out_of_bounds == 0);
  for (const auto &g : r.best.genes)
    CHECK(b.contains(g.position));
  CHECK(r.best.fitness < 0.01);
  CHECK(r.best.genes[0].kind == DipoleKind::MX);
  CHECK((r.best.genes[0].position - kLone.position).norm() < 0.01);
}

TEST_CASE("two-dipole run with narrow bounds stays inside them") {
  const Problem p = testing::two_dipole_problem();
  SearchBounds b{{-0.3, 0.3}, {-0.05, 0.05}, {1.45, 1.55}, {DipoleKind::PX, DipoleKind::MY}};
  GaConfig ga = quick_ga(9);
  const GaRunResult r = ga_run(2, b, ga, p, SolverConfig{});
  CHECK(r.out_of_bounds == 0);
  for (const auto &g : r.best.genes)
    CHECK(b.contains(g.position));
  CHECK(r.best.genes.size() == 2);
}

TEST_CASE("results do not depend on the thread count") {
  const Problem p = testing::bench_problem(testing::as_sources({kLone}));
  GaConfig one = quick_ga(11), four = quick_ga(11);
  one.threads = 1;
  four.threads = 4;
  const auto a = extract_auto(testing::bench_bounds(), one, SolverConfig{}, p, 0.01, 3);
  const auto b = extract_auto(testing::bench_bounds(), four, SolverConfig{}, p, 0.01, 3);
  CHECK(same_result(a, b));
  const auto c = extract_auto(testing::bench_bounds(), one, SolverConfig{}, p, 0.01, 3);
  CHECK(same_result(a, c));
}

TEST_CASE("single-dipole data selects one dipole") {
  const Problem p = testing::bench_problem(testing::as_sources({kLone}));
  const double mu = 0.01;
  const ExtractionResult r = extract_auto(testing::bench_bounds(), quick_ga(1), SolverConfig{}, p, mu, 4);
  REQUIRE(r.dipoles.size() == 1);
  CHECK(r.dipoles[0].kind == DipoleKind::MX);
  CHECK((r.dipoles[0].position - kLone.position).norm() < 0.01);
  CHECK_FALSE(r.capped);
  // history: N=1 and the rejected N=2
  REQUIRE(r.n_history.size() == 2);
  CHECK(r.n_history[0].first == 1);
  CHECK(r.n_history[1].first == 2);
  CHECK(r.n_history[0].second - r.n_history[1].second <= mu);
  CHECK(r.re == r.n_history[0].second);
  CHECK(r.generation_history.size() == 2);
  CHECK(r.seed == 1);
}

TEST_CASE("selection rule returns the last count whose improvement exceeded mu") {
  const Problem p = testing::two_dipole_problem();
  GaConfig ga = quick_ga(2);
  const double mu = 0.01;
  const ExtractionResult r = extract_auto(testing::bench_bounds(), ga, SolverConfig{}, p, mu, 3);
  for (std::size_t i = 1; i < r.n_history.size(); ++i)
    CHECK(r.n_history[i].first == r.n_history[i - 1].first + 1);
  double prev = 1.0;
  std::size_t selected = 0;
  for (const auto &[n, re] : r.n_history) {
    if (prev - re <= mu)
      break;
    selected = static_cast<std::size_t>(n);
    prev = re;
  }
  CHECK(r.dipoles.size() == selected);
}

TEST_CASE("cap is reported") {
  const Problem p = testing::two_dipole_problem();
  const ExtractionResult r = extract_auto(testing::bench_bounds(), quick_ga(4), SolverConfig{}, p, 0.01, 1);
  CHECK(r.capped);
  CHECK(r.dipoles.size() == 1);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("configuration errors") {
  const Problem p = testing::bench_problem(testing::as_sources({kLone}));
  SearchBounds empty_kinds = testing::bench_bounds();
  empty_kinds.allowed_kinds.clear();
  CHECK_THROWS_AS(ga_run(1, empty_kinds, quick_ga(1), p, SolverConfig{}), ConfigError);
  SearchBounds inverted = testing::bench_bounds();
  inverted.z = {2.0, 1.0};
  CHECK_THROWS_AS(ga_run(1, inverted, quick_ga(1), p, SolverConfig{}), ConfigError);
  CHECK_THROWS_AS(ga_run(0, testing::bench_bounds(), quick_ga(1), p, SolverConfig{}), ConfigError);
  CHECK_THROWS_AS(extract_auto(testing::bench_bounds(), quick_ga(1), SolverConfig{}, p, 0.0, 2),
                  ConfigError);
  CHECK_THROWS_AS(extract_auto(testing::bench_bounds(), quick_ga(1), SolverConfig{}, p, 0.01, 0),
                  ConfigError);

  GaConfig g;
  g.population = 1;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = GaConfig{};
  g.elite_count = g.population;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = GaConfig{};
  g.mutation_rate = 1.5;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = GaConfig{};
  g.immigrant_fraction = -0.1;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("canonical gene order") {
  std::vector<DipoleSlot> g{{DipoleKind::MY, Vec3(0, 0, 1)},
                            {DipoleKind::PX, Vec3(0.2, 0, 1)},
                            {DipoleKind::PX, Vec3(-0.2, 0, 1)}};
  canonicalize(g);
  CHECK(g[0].kind == DipoleKind::PX);
  CHECK(g[0].position.x() == -0.2);
  CHECK(g[1].position.x() == 0.2);
  CHECK(g[2].kind == DipoleKind::MY);
}
