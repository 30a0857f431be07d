#pragma once

#include "dipex/em_forward.hpp"
#include "dipex/ga_optimizer.hpp"
#include "dipex/inverse_solver.hpp"
#include "dipex/source_oracles.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dipex {

using Json = nlohmann::json;

Json read_json(const std::filesystem::path &path);
void write_json(const Json &j, const std::filesystem::path &path);

/// [{kind, position: [x, y, z], magnitude, phase_deg}, ...]
Json dipoles_to_json(const std::vector<Dipole> &dipoles);
std::vector<Dipole> dipoles_from_json(const Json &j);

/// {moments: [{magnitude, phase_deg}], re1, re2, re, converged, stop,
///  warnings, trace: [{iter, re1, re2, re}]} -- trace starts at iteration 0.
Json fit_to_json(const FitResult &fit);
/// `iter,re1,re2,re` header, iteration 0 first.
void write_trace_csv(const IterationTrace &trace, const std::filesystem::path &path);

SolverConfig solver_from_json(const Json &j, SolverConfig base = {});
GaConfig ga_from_json(const Json &j, GaConfig base = {});
SearchBounds bounds_from_json(const Json &j);

/// Scene: {sources: [dipole record | {wire: {...}}], ground, frequency_hz,
/// noise_db?, noise_model?, seed?}
struct Scene {
  std::vector<Source> sources;
  Environment env;
  std::optional<NoiseModel> noise;
};
Scene scene_from_json(const Json &j);

/// {surfaces: [{type: "cylinder"|"plane", ...}]} or a bare array.
std::vector<ScanSurface> surfaces_from_json(const Json &j);

/// Extraction run configuration; dataset paths are resolved against `base_dir`.
struct RunConfig {
  SearchBounds bounds;
  GaConfig ga;
  SolverConfig solver;
  double mu = 0.01;
  int max_dipoles = 10;
  bool ground = false;
  std::optional<double> frequency_hz;
  std::vector<std::filesystem::path> datasets;
  bool db_uv_m = false;
};
RunConfig run_config_from_json(const Json &j, const std::filesystem::path &base_dir);

Json extraction_report_to_json(const ExtractionResult &r);

} // namespace dipex
