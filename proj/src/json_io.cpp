#include "dipex/json_io.hpp"

#include "dipex/errors.hpp"

#include <cmath>
#include <fstream>

namespace dipex {
namespace {

constexpr double kDeg = constants::pi / 180.0;

template <typename T> T field(const Json &j, const char *key, const std::string &where) {
  if (!j.is_object() || !j.contains(key))
    throw SchemaError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw SchemaError(where + "." + key + ": wrong type");
  }
}

template <typename T> T field_or(const Json &j, const char *key, T fallback, const std::string &where) {
  if (!j.is_object() || !j.contains(key))
    return fallback;
  return field<T>(j, key, where);
}

Vec3 vec3(const Json &j, const std::string &where) {
  if (!j.is_array() || j.size() != 3)
    throw SchemaError(where + ": expected [x, y, z]");
  try {
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  } catch (const nlohmann::json::exception &) {
    throw SchemaError(where + ": expected numbers");
  }
}

Json vec3_json(const Vec3 &v) { return Json::array({v.x(), v.y(), v.z()}); }

Interval interval(const Json &j, const std::string &where) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return Interval{v, v};
  }
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError(where + ": expected [lo, hi]");
  return Interval{j[0].get<double>(), j[1].get<double>()};
}

Complex polar_field(const Json &j, const std::string &where) {
  if (j.is_number())
    return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2)
    return Complex(j[0].get<double>(), j[1].get<double>());
  return std::polar(field<double>(j, "magnitude", where),
                    field_or<double>(j, "phase_deg", 0.0, where) * kDeg);
}

// Explicit list, {start, stop, step} range, or (azimuths) {count}.
std::vector<double> axis_values(const Json &j, const std::string &where) {
  if (j.is_array()) {
    try {
      return j.get<std::vector<double>>();
    } catch (const nlohmann::json::exception &) {
      throw SchemaError(where + ": expected a list of numbers");
    }
  }
  if (j.is_object() && j.contains("count"))
    return uniform_azimuths(field<std::size_t>(j, "count", where));
  if (j.is_object())
    return linspace_step(field<double>(j, "start", where), field<double>(j, "stop", where),
                         field<double>(j, "step", where));
  throw SchemaError(where + ": expected a list or a range object");
}

Json trace_entry(const TraceEntry &e) {
  return Json{{"iter", e.iteration}, {"re1", e.re1}, {"re2", e.re2}, {"re", e.re}};
}

std::string stop_name(StopReason s) {
  switch (s) {
  case StopReason::Epsilon:
    return "epsilon";
  case StopReason::Increase:
    return "increase";
  case StopReason::Cap:
    return "cap";
  }
  return "cap";
}

} // namespace

Json read_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw SchemaError(path.string() + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_json(const Json &j, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw SchemaError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

Json dipoles_to_json(const std::vector<Dipole> &dipoles) {
  Json arr = Json::array();
  for (const auto &d : dipoles) {
    arr.push_back(Json{{"kind", std::string(to_string(d.kind))},
                       {"position", vec3_json(d.position)},
                       {"magnitude", std::abs(d.moment)},
                       {"phase_deg", std::arg(d.moment) / kDeg}});
  }
  return arr;
}

std::vector<Dipole> dipoles_from_json(const Json &j) {
  const Json &arr = j.is_object() && j.contains("dipoles") ? j.at("dipoles") : j;
  if (!arr.is_array())
    throw SchemaError("dipole list: expected an array");
  std::vector<Dipole> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "dipoles[" + std::to_string(i) + "]";
    const Json &rec = arr[i];
    Dipole d;
    d.kind = parse_kind(field<std::string>(rec, "kind", where));
    d.position = vec3(rec.contains("position") ? rec.at("position") : Json(), where + ".position");
    const double mag = field_or<double>(rec, "magnitude", 0.0, where);
    const double ph = field_or<double>(rec, "phase_deg", 0.0, where);
    if (!std::isfinite(mag) || !std::isfinite(ph) || !d.position.allFinite())
      throw SchemaError(where + ": values must be finite");
    d.moment = std::polar(mag, ph * kDeg);
    out.push_back(d);
  }
  return out;
}

Json fit_to_json(const FitResult &fit) {
  Json moments = Json::array();
  for (Eigen::Index i = 0; i < fit.moments.size(); ++i)
    moments.push_back(Json{{"magnitude", std::abs(fit.moments[i])},
                           {"phase_deg", std::arg(fit.moments[i]) / kDeg}});
  Json trace = Json::array();
  trace.push_back(trace_entry(fit.trace.initial));
  for (const auto &e : fit.trace.history)
    trace.push_back(trace_entry(e));
  return Json{{"moments", moments},
              {"re1", fit.re1},
              {"re2", fit.re2},
              {"re", fit.re},
              {"converged", fit.converged},
              {"stop", stop_name(fit.stop)},
              {"surfaces", fit.two_surface ? 2 : 1},
              {"warnings", fit.warnings},
              {"trace", trace}};
}

void write_trace_csv(const IterationTrace &trace, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw SchemaError(path.string() + ": cannot open for writing");
  out.precision(17);
  out << "iter,re1,re2,re\n";
  auto row = [&](const TraceEntry &e) {
    out << e.iteration << ',' << e.re1 << ',' << e.re2 << ',' << e.re << '\n';
  };
  row(trace.initial);
  for (const auto &e : trace.history)
    row(e);
}

SolverConfig solver_from_json(const Json &j, SolverConfig base) {
  if (j.is_null())
    return base;
  const std::string w = "solver";
  base.epsilon = field_or<double>(j, "epsilon", base.epsilon, w);
  base.max_iterations = field_or<int>(j, "max_iterations", base.max_iterations, w);
  base.rcond = field_or<double>(j, "rcond", base.rcond, w);
  base.validate();
  return base;
}

GaConfig ga_from_json(const Json &j, GaConfig base) {
  if (j.is_null())
    return base;
  const std::string w = "ga";
  base.population = field_or<int>(j, "population", base.population, w);
  base.max_generations = field_or<int>(j, "max_generations", base.max_generations, w);
  base.stall_generations = field_or<int>(j, "stall_generations", base.stall_generations, w);
  base.crossover_rate = field_or<double>(j, "crossover_rate", base.crossover_rate, w);
  base.mutation_rate = field_or<double>(j, "mutation_rate", base.mutation_rate, w);
  base.elite_count = field_or<int>(j, "elite_count", base.elite_count, w);
  base.seed = field_or<std::uint64_t>(j, "seed", base.seed, w);
  base.threads = field_or<int>(j, "threads", base.threads, w);
  base.refine_evaluations = field_or<int>(j, "refine_evaluations", base.refine_evaluations, w);
  base.warm_fraction = field_or<double>(j, "warm_fraction", base.warm_fraction, w);
  base.immigrant_fraction = field_or<double>(j, "immigrant_fraction", base.immigrant_fraction, w);
  base.validate();
  return base;
}

SearchBounds bounds_from_json(const Json &j) {
  const std::string w = "bounds";
  if (!j.is_object())
    throw SchemaError("bounds: expected an object");
  SearchBounds b;
  for (const char *axis : {"x", "y", "z"})
    if (!j.contains(axis))
      throw SchemaError(w + ": missing field '" + axis + "'");
  b.x = interval(j.at("x"), w + ".x");
  b.y = interval(j.at("y"), w + ".y");
  b.z = interval(j.at("z"), w + ".z");
  if (j.contains("kinds")) {
    b.allowed_kinds.clear();
    for (const auto &k : field<std::vector<std::string>>(j, "kinds", w))
      b.allowed_kinds.push_back(parse_kind(k));
  }
  b.validate();
  return b;
}

Scene scene_from_json(const Json &j) {
  const std::string w = "scene";
  Scene s;
  s.env.frequency_hz = field<double>(j, "frequency_hz", w);
  s.env.ground = field_or<bool>(j, "ground", false, w);
  s.env.validate();
  const Json sources = j.contains("sources") ? j.at("sources") : Json();
  if (!sources.is_array())
    throw SchemaError(w + ": 'sources' must be an array");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::string where = w + ".sources[" + std::to_string(i) + "]";
    const Json &rec = sources[i];
    if (rec.is_object() && rec.contains("wire")) {
      const Json &wj = rec.at("wire");
      const std::string ww = where + ".wire";
      WireSource ws;
      ws.antenna.center = vec3(wj.contains("center") ? wj.at("center") : Json(), ww + ".center");
      ws.antenna.length = field_or<double>(wj, "length", 0.5 * s.env.wavelength(), ww);
      if (wj.contains("axis"))
        ws.antenna.axis = vec3(wj.at("axis"), ww + ".axis");
      ws.antenna.feed_voltage =
          wj.contains("voltage") ? polar_field(wj.at("voltage"), ww + ".voltage") : Complex(1.0, 0.0);
      if (wj.contains("impedance"))
        ws.antenna.input_impedance = polar_field(wj.at("impedance"), ww + ".impedance");
      ws.segments = field_or<int>(wj, "segments", 101, ww);
      try {
        ws.antenna.validate();
      } catch (const ConfigError &e) {
        throw SchemaError(ww + ": " + e.what());
      }
      s.sources.emplace_back(ws);
    } else {
      s.sources.emplace_back(dipoles_from_json(Json::array({rec})).front());
    }
  }
  if (j.contains("noise_db") && !j.at("noise_db").is_null()) {
    NoiseModel n;
    n.level = field<double>(j, "noise_db", w);
    n.seed = field_or<std::uint64_t>(j, "seed", 0, w);
    const auto model = field_or<std::string>(j, "noise_model", "uniform_db", w);
    if (model == "gaussian")
      n.kind = NoiseModel::Kind::GaussianAdditive;
    else if (model != "uniform_db")
      throw SchemaError(w + ".noise_model: expected 'uniform_db' or 'gaussian'");
    s.noise = n;
  }
  return s;
}

std::vector<ScanSurface> surfaces_from_json(const Json &j) {
  const Json &arr = j.is_object() && j.contains("surfaces") ? j.at("surfaces") : j;
  if (!arr.is_array())
    throw SchemaError("surfaces: expected an array");
  std::vector<ScanSurface> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "surfaces[" + std::to_string(i) + "]";
    const Json &s = arr[i];
    const auto type = field<std::string>(s, "type", where);
    const auto label = field_or<std::string>(s, "label", "surface" + std::to_string(i + 1), where);
    try {
      if (type == "cylinder") {
        const Vec3 origin =
            s.contains("axis_origin") ? vec3(s.at("axis_origin"), where + ".axis_origin") : Vec3::Zero();
        const auto heights = axis_values(s.contains("heights") ? s.at("heights") : Json(),
                                         where + ".heights");
        const auto azimuths = axis_values(
            s.contains("azimuths") ? s.at("azimuths") : Json{{"count", 36}}, where + ".azimuths");
        out.push_back(make_cylinder(field<double>(s, "radius", where), heights, azimuths, origin,
                                    label));
      } else if (type == "plane") {
        const auto us = axis_values(s.contains("u_samples") ? s.at("u_samples") : Json(),
                                    where + ".u_samples");
        const auto vs = axis_values(s.contains("v_samples") ? s.at("v_samples") : Json(),
                                    where + ".v_samples");
        out.push_back(make_plane(vec3(s.contains("origin") ? s.at("origin") : Json(), where + ".origin"),
                                 vec3(s.contains("u_axis") ? s.at("u_axis") : Json(), where + ".u_axis"),
                                 vec3(s.contains("v_axis") ? s.at("v_axis") : Json(), where + ".v_axis"),
                                 us, vs, label));
      } else {
        throw SchemaError(where + ".type: expected 'cylinder' or 'plane'");
      }
    } catch (const GeometryError &e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return out;
}

RunConfig run_config_from_json(const Json &j, const std::filesystem::path &base_dir) {
  const std::string w = "config";
  if (!j.is_object())
    throw SchemaError("config: expected an object");
  RunConfig c;
  c.bounds = bounds_from_json(j.contains("bounds") ? j.at("bounds") : Json());
  c.ga = ga_from_json(j.contains("ga") ? j.at("ga") : Json());
  c.solver = solver_from_json(j.contains("solver") ? j.at("solver") : Json());
  c.mu = field_or<double>(j, "mu", c.mu, w);
  c.max_dipoles = field_or<int>(j, "max_dipoles", c.max_dipoles, w);
  c.ground = field_or<bool>(j, "ground", c.ground, w);
  if (j.contains("frequency") && !j.at("frequency").is_null())
    c.frequency_hz = field<double>(j, "frequency", w);
  c.db_uv_m = field_or<bool>(j, "db_uv_m", false, w);
  for (const auto &p : field<std::vector<std::string>>(j, "datasets", w)) {
    std::filesystem::path path(p);
    c.datasets.push_back(path.is_absolute() ? path : base_dir / path);
  }
  if (c.datasets.empty() || c.datasets.size() > 2)
    throw SchemaError("config.datasets: expected one or two dataset paths");
  return c;
}

Json extraction_report_to_json(const ExtractionResult &r) {
  Json n_hist = Json::array();
  for (const auto &[n, re] : r.n_history)
    n_hist.push_back(Json{{"n", n}, {"re", re}});
  return Json{{"n_selected", r.dipoles.size()},
              {"re", r.re},
              {"re1", r.re1},
              {"re2", r.re2},
              {"capped", r.capped},
              {"seed", r.seed},
              {"n_history", n_hist},
              {"generation_history", r.generation_history},
              {"warnings", r.warnings},
              {"fit", fit_to_json(r.fit)},
              {"dipoles", dipoles_to_json(r.dipoles)}};
}

} // namespace dipex
