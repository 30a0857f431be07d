#include "dipex/source_oracles.hpp"

#include "dipex/errors.hpp"

#include <cmath>
#include <random>

namespace dipex {
namespace {

DipoleKind electric_kind_along(const Vec3 &axis) {
  if ((axis - Vec3::UnitX()).norm() < 1e-12)
    return DipoleKind::PX;
  if ((axis - Vec3::UnitY()).norm() < 1e-12)
    return DipoleKind::PY;
  if ((axis - Vec3::UnitZ()).norm() < 1e-12)
    return DipoleKind::PZ;
  throw ConfigError("wire axis must be +x, +y or +z to be segmented into dipoles");
}

} // namespace

void WireAntenna::validate() const {
  if (!(length > 0.0) || !std::isfinite(length))
    throw ConfigError("wire length must be positive");
  if (std::abs(axis.norm() - 1.0) > 1e-12)
    throw ConfigError("wire axis must be a unit vector");
  if (!center.allFinite())
    throw ConfigError("wire center must be finite");
  if (std::abs(input_impedance) == 0.0)
    throw ConfigError("wire input impedance must be non-zero");
}

Complex wire_current(const WireAntenna &ant, double z_local, double wavelength) {
  ant.validate();
  if (std::abs(z_local) > 0.5 * ant.length * (1.0 + 1e-12))
    throw ConfigError("wire_current: position outside the wire");
  const double k = 2.0 * constants::pi / wavelength;
  return ant.feed_current() * std::sin(k * (0.25 * wavelength - std::abs(z_local)));
}

Complex wire_moment(const WireAntenna &ant, double wavelength) {
  ant.validate();
  if (std::abs(ant.length - 0.5 * wavelength) > 1e-9 * wavelength)
    throw ConfigError("wire_moment: closed form only holds for a half-wave wire");
  return ant.feed_current() * wavelength / constants::pi;
}

std::vector<Dipole> wire_segments(const WireAntenna &ant, int n_segments, double wavelength) {
  ant.validate();
  if (n_segments < 1)
    throw ConfigError("wire_segments: need at least one segment");
  const DipoleKind kind = electric_kind_along(ant.axis);
  const double dz = ant.length / n_segments;
  std::vector<Dipole> out;
  out.reserve(static_cast<std::size_t>(n_segments));
  for (int i = 0; i < n_segments; ++i) {
    const double z = -0.5 * ant.length + (i + 0.5) * dz;
    out.push_back(Dipole{kind, ant.center + z * ant.axis, wire_current(ant, z, wavelength) * dz});
  }
  return out;
}

std::vector<Dipole> expand_sources(std::span<const Source> sources, double wavelength) {
  std::vector<Dipole> out;
  for (const auto &s : sources) {
    if (const auto *d = std::get_if<Dipole>(&s)) {
      out.push_back(*d);
    } else {
      const auto &w = std::get<WireSource>(s);
      auto segs = wire_segments(w.antenna, w.segments, wavelength);
      out.insert(out.end(), segs.begin(), segs.end());
    }
  }
  return out;
}

FieldDataset synth_dataset(std::span<const Source> sources, const ScanSurface &surface,
                           const Environment &env, const std::optional<NoiseModel> &noise) {
  env.validate();
  const auto dipoles = expand_sources(sources, env.wavelength());
  FieldDataset ds = forward_fields(dipoles, surface, env);
  if (!noise || noise->level == 0.0)
    return ds;
  if (!(noise->level > 0.0) || !std::isfinite(noise->level))
    throw ConfigError("noise level must be non-negative");

  std::mt19937_64 rng(noise->seed);
  if (noise->kind == NoiseModel::Kind::UniformDb) {
    std::uniform_real_distribution<double> db(-noise->level, noise->level);
    for (std::size_t i = 0; i < ds.mag_u.size(); ++i) {
      ds.mag_u[i] *= std::pow(10.0, db(rng) / 20.0);
      ds.mag_v[i] *= std::pow(10.0, db(rng) / 20.0);
    }
  } else {
    double power = 0.0;
    for (std::size_t i = 0; i < ds.mag_u.size(); ++i)
      power += ds.mag_u[i] * ds.mag_u[i] + ds.mag_v[i] * ds.mag_v[i];
    const double rms = std::sqrt(power / (2.0 * static_cast<double>(ds.mag_u.size())));
    std::normal_distribution<double> gauss(0.0, noise->level * rms);
    for (std::size_t i = 0; i < ds.mag_u.size(); ++i) {
      ds.mag_u[i] = std::max(0.0, ds.mag_u[i] + gauss(rng));
      ds.mag_v[i] = std::max(0.0, ds.mag_v[i] + gauss(rng));
    }
  }
  return ds;
}

namespace benchmark {

ScanSurface cylinder(double radius, std::size_t azimuth_count) {
  const auto heights = linspace_step(1.0, 4.0, 0.25);
  const auto azimuths = uniform_azimuths(azimuth_count);
  const std::string label = radius == 0.5 ? "surface1" : "surface2";
  return make_cylinder(radius, heights, azimuths, Vec3::Zero(), label);
}

std::vector<Dipole> two_dipoles() {
  const double deg = constants::pi / 180.0;
  return {Dipole{DipoleKind::PX, Vec3(0.25, 0.0, 1.5), std::polar(1.0, 90.0 * deg)},
          Dipole{DipoleKind::MY, Vec3(-0.25, 0.0, 1.5), std::polar(100.0, 0.0)}};
}

WireAntenna half_wave_wire() {
  WireAntenna w;
  w.center = Vec3(0.0, 0.0, 1.5);
  w.length = 0.5 * constants::c0 / kFrequencyHz;
  w.axis = Vec3::UnitZ();
  w.feed_voltage = Complex(5.0, 0.0);
  w.input_impedance = Complex(73.0, 42.5);
  return w;
}

} // namespace benchmark

} // namespace dipex
