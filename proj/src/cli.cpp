#include "dipex/cli.hpp"

#include "dipex/errors.hpp"
#include "dipex/json_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <algorithm>
#include <fstream>
#include <sstream>
#include <ostream>

namespace dipex {
namespace {

namespace fs = std::filesystem;

constexpr double kDeg = constants::pi / 180.0;

enum class LogLevel { Warn, Info, Debug };

struct Logger {
  std::ostream *sink;
  LogLevel level = LogLevel::Info;

  bool enabled(LogLevel l) const { return static_cast<int>(l) <= static_cast<int>(level); }
  void operator()(LogLevel l, const std::string &msg) const {
    if (!enabled(l))
      return;
    static constexpr const char *tags[] = {"warn", "info", "debug"};
    *sink << "[" << tags[static_cast<int>(l)] << "] " << msg << '\n';
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw SchemaError(dir.string() + ": cannot create output directory");
}

std::ofstream open_out(const fs::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw SchemaError(path.string() + ": cannot open for writing");
  out.precision(17);
  return out;
}

MagnitudeUnit unit_of(bool db) {
  return db ? MagnitudeUnit::DbMicroVoltPerMeter : MagnitudeUnit::VoltPerMeter;
}

// All datasets of one run must share the frequency header; an explicit
// override must agree with it.
double common_frequency(const std::vector<FieldDataset> &sets, std::optional<double> override_hz) {
  double f = sets.front().frequency_hz;
  for (const auto &s : sets)
    if (std::abs(s.frequency_hz - f) > 1e-9 * f)
      throw SchemaError(s.surface.label() + ": frequency differs from the other dataset");
  if (override_hz && std::abs(*override_hz - f) > 1e-9 * f)
    throw SchemaError("configured frequency " + fmt(*override_hz) +
                      " Hz does not match the dataset header " + fmt(f) + " Hz");
  return f;
}

std::string unique_label(const std::string &label, std::vector<std::string> &used) {
  std::string out = label;
  for (int k = 2; std::find(used.begin(), used.end(), out) != used.end(); ++k)
    out = label + "_" + std::to_string(k);
  used.push_back(out);
  return out;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string config;
  std::string surfaces;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs &a, std::ostream &out, const Logger &log) {
  const Json scene_json = read_json(a.config);
  Scene scene = scene_from_json(scene_json);
  if (a.seed && scene.noise)
    scene.noise->seed = *a.seed;

  std::vector<ScanSurface> surfaces;
  if (!a.surfaces.empty())
    surfaces = surfaces_from_json(read_json(a.surfaces));
  else if (scene_json.contains("surfaces"))
    surfaces = surfaces_from_json(scene_json.at("surfaces"));
  else
    throw SchemaError("synth: no surfaces given (use --surfaces or a 'surfaces' field)");
  if (surfaces.empty())
    throw SchemaError("synth: surface list is empty");

  ensure_dir(a.out_dir);
  std::vector<std::string> used;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    std::optional<NoiseModel> noise = scene.noise;
    if (noise) // distinct, reproducible stream per surface
      noise->seed = noise->seed * 1000003ULL + i;
    const FieldDataset ds = synth_dataset(scene.sources, surfaces[i], scene.env, noise);
    const fs::path path = fs::path(a.out_dir) / (unique_label(surfaces[i].label(), used) + ".csv");
    write_dataset(ds, path);
    log(LogLevel::Info, "wrote " + path.string() + " (" + std::to_string(ds.surface.size()) + " points)");
    out << path.string() << '\n';
  }
  return kExitOk;
}

// -------------------------------------------------------------- extract

struct ExtractArgs {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> max_dipoles;
  bool db_uv_m = false;
  bool single_surface = false;
};

int cmd_extract(const ExtractArgs &a, std::ostream &out, const Logger &log) {
  const fs::path config_path(a.config);
  RunConfig rc = run_config_from_json(read_json(config_path), config_path.parent_path());
  if (a.seed)
    rc.ga.seed = *a.seed;
  if (a.max_dipoles)
    rc.max_dipoles = *a.max_dipoles;
  if (a.single_surface && rc.datasets.size() > 1) {
    log(LogLevel::Info, "single-surface mode: using " + rc.datasets.front().string() + " only");
    rc.datasets.resize(1);
  }

  Problem problem;
  for (const auto &p : rc.datasets)
    problem.surfaces.push_back(read_dataset(p, unit_of(rc.db_uv_m || a.db_uv_m)));
  problem.env = Environment{common_frequency(problem.surfaces, rc.frequency_hz), rc.ground};
  problem.validate();

  GaProgress progress;
  if (log.enabled(LogLevel::Debug))
    progress = [&log](int n, int gen, double best) {
      log(LogLevel::Debug, "N=" + std::to_string(n) + " gen=" + std::to_string(gen) +
                               " best_re=" + fmt(best));
    };
  const ExtractionResult r =
      extract_auto(rc.bounds, rc.ga, rc.solver, problem, rc.mu, rc.max_dipoles, progress);
  for (const auto &[n, re] : r.n_history)
    log(LogLevel::Info, "N=" + std::to_string(n) + " best_re=" + fmt(re));
  for (const auto &w : r.warnings)
    log(LogLevel::Warn, w);

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  write_json(dipoles_to_json(r.dipoles), dir / "dipoles.json");
  write_json(extraction_report_to_json(r), dir / "report.json");
  std::vector<std::string> used;
  for (const auto &ds : problem.surfaces) {
    const FieldDataset fitted = retrieve_phase(r.dipoles, ds.surface, problem.env);
    write_dataset(fitted, dir / ("fitted_" + unique_label(ds.surface.label(), used) + ".csv"));
  }

  out << "selected " << r.dipoles.size() << " dipole(s), RE=" << fmt(r.re) << '\n';
  for (const auto &d : r.dipoles)
    out << "  " << to_string(d.kind) << " at (" << fmt(d.position.x()) << ", " << fmt(d.position.y())
        << ", " << fmt(d.position.z()) << ") |m|=" << fmt(std::abs(d.moment))
        << " phase_deg=" << fmt(std::arg(d.moment) / kDeg) << '\n';
  return r.capped ? kExitCap : kExitOk;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string layout;
  std::vector<std::string> datasets;
  std::string config;
  std::string out_dir = ".";
  std::optional<int> max_iterations;
  bool ground = false;
  bool db_uv_m = false;
  bool single_surface = false;
};

int cmd_solve(const SolveArgs &a, std::ostream &out, const Logger &log) {
  SolverConfig solver;
  bool ground = a.ground;
  std::optional<double> freq;
  if (!a.config.empty()) {
    const Json j = read_json(a.config);
    solver = solver_from_json(j.contains("solver") ? j.at("solver") : j);
    if (j.contains("ground"))
      ground = ground || j.at("ground").get<bool>();
    if (j.contains("frequency") && !j.at("frequency").is_null())
      freq = j.at("frequency").get<double>();
  }
  if (a.max_iterations)
    solver.max_iterations = *a.max_iterations;
  solver.validate();

  const auto layout = layout_of(dipoles_from_json(read_json(a.layout)));
  if (layout.empty())
    throw SchemaError(a.layout + ": layout has no dipoles");

  std::vector<std::string> paths = a.datasets;
  if (paths.empty() || paths.size() > 2)
    throw SchemaError("solve: expected one or two --dataset paths");
  if (a.single_surface)
    paths.resize(1);
  Problem problem;
  for (const auto &p : paths)
    problem.surfaces.push_back(read_dataset(p, unit_of(a.db_uv_m)));
  problem.env = Environment{common_frequency(problem.surfaces, freq), ground};
  problem.validate();

  const FitResult fit = solve_layout(layout, problem, solver);
  for (const auto &w : fit.warnings)
    log(LogLevel::Warn, w);
  if (log.enabled(LogLevel::Debug)) {
    log(LogLevel::Debug, "iter 0 re=" + fmt(fit.trace.initial.re));
    for (const auto &e : fit.trace.history)
      log(LogLevel::Debug, "iter " + std::to_string(e.iteration) + " re=" + fmt(e.re));
  }

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  Json j = fit_to_json(fit);
  j["dipoles"] = dipoles_to_json(attach_moments(layout, fit.moments));
  write_json(j, dir / "fit.json");
  write_trace_csv(fit.trace, dir / "trace.csv");
  out << "RE=" << fmt(fit.re) << " iterations=" << fit.trace.history.size()
      << " stop=" << j.at("stop").get<std::string>() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- phase

struct PhaseArgs {
  std::string dipoles;
  std::string surfaces;
  std::string truth;
  std::string out_dir = ".";
  std::optional<double> frequency;
  bool ground = false;
  bool db_uv_m = false;
};

Json alignment_json(const std::vector<double> &a, const std::vector<double> &b,
                    const std::vector<double> &w) {
  const PhaseAlignment al = align_global_phase(a, b, w);
  return Json{{"alpha_deg", al.alpha / kDeg}, {"rms_deg", al.rms / kDeg}};
}

int cmd_phase(const PhaseArgs &a, std::ostream &out, const Logger &log) {
  const auto dipoles = dipoles_from_json(read_json(a.dipoles));
  std::optional<FieldDataset> truth;
  if (!a.truth.empty()) {
    truth = read_dataset(a.truth, unit_of(a.db_uv_m));
    if (!truth->has_phase())
      throw SchemaError(a.truth + ": truth dataset has no phase_u/phase_v columns");
  }

  std::vector<ScanSurface> surfaces;
  if (!a.surfaces.empty())
    surfaces = surfaces_from_json(read_json(a.surfaces));
  else if (truth)
    surfaces.push_back(truth->surface);
  else
    throw SchemaError("phase: need --surfaces or --truth");
  if (truth && surfaces.size() != 1)
    throw SchemaError("phase: a truth dataset needs exactly one surface");

  double f = 0.0;
  if (truth)
    f = common_frequency({*truth}, a.frequency);
  else if (a.frequency)
    f = *a.frequency;
  else
    throw SchemaError("phase: need --frequency when no truth dataset is given");
  const Environment env{f, a.ground};

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  std::vector<std::string> used;
  for (const auto &surface : surfaces) {
    if (truth && !truth->surface.same_grid(surface)) {
      const std::size_t i = truth->surface.first_mismatch(surface);
      throw SchemaError("phase: truth grid differs from the surface at point " + std::to_string(i + 1));
    }
    const FieldDataset model = retrieve_phase(dipoles, surface, env);
    const std::string label = unique_label(surface.label(), used);
    auto csv = open_out(dir / ("phase_" + label + ".csv"));
    csv << "x,y,z,mag_u,phase_u_deg,mag_v,phase_v_deg\n";
    for (std::size_t i = 0; i < surface.size(); ++i) {
      const Vec3 &p = surface[i].position;
      csv << p.x() << ',' << p.y() << ',' << p.z() << ',' << model.mag_u[i] << ','
          << (*model.phase_u)[i] / kDeg << ',' << model.mag_v[i] << ',' << (*model.phase_v)[i] / kDeg
          << '\n';
    }
    if (!truth)
      continue;

    const std::vector<double> ones(surface.size(), 1.0);
    std::vector<double> ta, ma, w;
    for (std::size_t i = 0; i < surface.size(); ++i) {
      ta.push_back((*truth->phase_u)[i]);
      ma.push_back((*model.phase_u)[i]);
      w.push_back(truth->mag_u[i]);
    }
    for (std::size_t i = 0; i < surface.size(); ++i) {
      ta.push_back((*truth->phase_v)[i]);
      ma.push_back((*model.phase_v)[i]);
      w.push_back(truth->mag_v[i]);
    }
    Json report{{"surface", label},
                {"u", alignment_json(*truth->phase_u, *model.phase_u, ones)},
                {"v", alignment_json(*truth->phase_v, *model.phase_v, ones)},
                {"weighted", alignment_json(ta, ma, w)}};
    write_json(report, dir / ("alignment_" + label + ".json"));
    out << label << ": u alpha_deg=" << fmt(report["u"]["alpha_deg"].get<double>())
        << " rms_deg=" << fmt(report["u"]["rms_deg"].get<double>())
        << "; v alpha_deg=" << fmt(report["v"]["alpha_deg"].get<double>())
        << " rms_deg=" << fmt(report["v"]["rms_deg"].get<double>()) << '\n';
  }
  log(LogLevel::Info, "phase files written to " + dir.string());
  return kExitOk;
}

// -------------------------------------------------------------- compare

struct CompareArgs {
  std::vector<std::string> first;
  std::vector<std::string> second;
  std::string out_dir = ".";
  bool db_uv_m = false;
};

double compare_pair(const std::vector<std::string> &pair, const fs::path &csv_path, bool db) {
  const FieldDataset a = read_dataset(pair.at(0), unit_of(db));
  const FieldDataset b = read_dataset(pair.at(1), unit_of(db));
  if (!a.surface.same_grid(b.surface)) {
    const std::size_t i = a.surface.first_mismatch(b.surface);
    throw SchemaError("compare: grids differ at point " + std::to_string(i + 1) + " (" + pair[0] +
                      " vs " + pair[1] + ")");
  }
  auto csv = open_out(csv_path);
  csv << "x,y,z,abs_du,abs_dv\n";
  for (std::size_t i = 0; i < a.surface.size(); ++i) {
    const Vec3 &p = a.surface[i].position;
    csv << p.x() << ',' << p.y() << ',' << p.z() << ',' << std::abs(a.mag_u[i] - b.mag_u[i]) << ','
        << std::abs(a.mag_v[i] - b.mag_v[i]) << '\n';
  }
  return relative_error(a, b);
}

int cmd_compare(const CompareArgs &a, std::ostream &out, const Logger &) {
  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  out.precision(17);
  const double re1 = compare_pair(a.first, dir / "compare_1.csv", a.db_uv_m);
  out << "RE1=" << re1 << '\n';
  if (!a.second.empty()) {
    const double re2 = compare_pair(a.second, dir / "compare_2.csv", a.db_uv_m);
    out << "RE2=" << re2 << '\n' << "RE=" << 0.5 * (re1 + re2) << '\n';
  }
  return kExitOk;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Equivalent dipole extraction from magnitude-only near-field scans", "dipex"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "warn, info or debug")
      ->check(CLI::IsMember({"warn", "info", "debug"}));

  SynthArgs synth;
  auto *s = app.add_subcommand("synth", "Synthesize field datasets from a source scene");
  s->add_option("--config", synth.config, "Scene JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--surfaces", synth.surfaces, "Surface JSON (default: scene 'surfaces')")
      ->check(CLI::ExistingFile);
  s->add_option("--out-dir", synth.out_dir, "Output directory");
  s->add_option("--seed", synth.seed, "Noise seed override");

  ExtractArgs ex;
  auto *e = app.add_subcommand("extract", "Find the dipole model of one or two datasets");
  e->add_option("--config", ex.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  e->add_option("--out-dir", ex.out_dir, "Output directory");
  e->add_option("--seed", ex.seed, "GA seed override");
  e->add_option("--max-dipoles", ex.max_dipoles, "Upper limit on the dipole count")
      ->check(CLI::PositiveNumber);
  e->add_flag("--db-uv-m", ex.db_uv_m, "Dataset magnitudes are in dBuV/m");
  e->add_flag("--single-surface", ex.single_surface, "Use the first dataset only");

  SolveArgs so;
  auto *v = app.add_subcommand("solve", "Fit moments for a fixed dipole layout");
  v->add_option("--layout", so.layout, "Dipole-list JSON (moments ignored)")
      ->required()
      ->check(CLI::ExistingFile);
  v->add_option("--dataset", so.datasets, "Dataset CSV (once or twice)")
      ->required()
      ->check(CLI::ExistingFile);
  v->add_option("--config", so.config, "Solver JSON ({solver, ground, frequency})")
      ->check(CLI::ExistingFile);
  v->add_option("--max-iterations", so.max_iterations, "Iteration cap override")
      ->check(CLI::PositiveNumber);
  v->add_option("--out-dir", so.out_dir, "Output directory");
  v->add_flag("--ground", so.ground, "PEC ground plane at z=0");
  v->add_flag("--db-uv-m", so.db_uv_m, "Dataset magnitudes are in dBuV/m");
  v->add_flag("--single-surface", so.single_surface, "Use the first dataset only");

  PhaseArgs ph;
  auto *p = app.add_subcommand("phase", "Retrieve field phases from a dipole model");
  p->add_option("--dipoles", ph.dipoles, "Dipole-list JSON")->required()->check(CLI::ExistingFile);
  p->add_option("--surfaces", ph.surfaces, "Surface JSON")->check(CLI::ExistingFile);
  p->add_option("--truth", ph.truth, "Dataset with phase columns to align against")
      ->check(CLI::ExistingFile);
  p->add_option("--frequency", ph.frequency, "Frequency in Hz (default: truth header)")
      ->check(CLI::PositiveNumber);
  p->add_option("--out-dir", ph.out_dir, "Output directory");
  p->add_flag("--ground", ph.ground, "PEC ground plane at z=0");
  p->add_flag("--db-uv-m", ph.db_uv_m, "Truth magnitudes are in dBuV/m");

  CompareArgs cmp;
  auto *c = app.add_subcommand("compare", "Relative error between datasets on the same grid");
  c->add_option("datasets", cmp.first, "Measured and predicted dataset CSVs")
      ->required()
      ->expected(2)
      ->check(CLI::ExistingFile);
  c->add_option("--pair", cmp.second, "Second measured/predicted pair")
      ->expected(2)
      ->check(CLI::ExistingFile);
  c->add_option("--out-dir", cmp.out_dir, "Output directory");
  c->add_flag("--db-uv-m", cmp.db_uv_m, "Magnitudes are in dBuV/m");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  Logger log{&err, log_level == "debug" ? LogLevel::Debug
                   : log_level == "warn" ? LogLevel::Warn
                                         : LogLevel::Info};
  try {
    if (s->parsed())
      return cmd_synth(synth, out, log);
    if (e->parsed())
      return cmd_extract(ex, out, log);
    if (v->parsed())
      return cmd_solve(so, out, log);
    if (p->parsed())
      return cmd_phase(ph, out, log);
    return cmd_compare(cmp, out, log);
  } catch (const Error &ex_err) {
    err << "error: " << ex_err.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception &je) {
    err << "error: " << je.what() << '\n';
    return kExitInput;
  }
}

} // namespace dipex
