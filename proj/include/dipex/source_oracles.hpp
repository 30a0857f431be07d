#pragma once

#include "dipex/em_forward.hpp"
#include "dipex/scan_model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace dipex {

/// Centre-fed thin wire with a standing-wave current.
struct WireAntenna {
  Vec3 center = Vec3::Zero();
  double length = 0.0;
  Vec3 axis = Vec3::UnitZ();
  Complex feed_voltage{0.0, 0.0};
  Complex input_impedance{73.0, 42.5};

  Complex feed_current() const { return feed_voltage / input_impedance; }
  void validate() const;
};

/// I0 sin(2 pi / lambda (lambda/4 - |z|)), I0 = V / Z_in.
Complex wire_current(const WireAntenna &ant, double z_local, double wavelength);

/// Integral of the current over a half-wave wire: I0 lambda / pi. Throws
/// ConfigError for any other length.
Complex wire_moment(const WireAntenna &ant, double wavelength);

/// Midpoint discretization into n collinear dipoles with moment I(z_i) dz.
/// The wire axis must be one of x, y, z.
std::vector<Dipole> wire_segments(const WireAntenna &ant, int n_segments, double wavelength);

struct WireSource {
  WireAntenna antenna;
  int segments = 101;
};

using Source = std::variant<Dipole, WireSource>;

/// Flattens sources to point dipoles (wires are segmented).
std::vector<Dipole> expand_sources(std::span<const Source> sources, double wavelength);

struct NoiseModel {
  enum class Kind { UniformDb, GaussianAdditive };
  Kind kind = Kind::UniformDb;
  /// UniformDb: half-width in dB of the multiplicative factor per sample.
  /// GaussianAdditive: standard deviation relative to the RMS magnitude.
  double level = 0.0;
  std::uint64_t seed = 0;
};

/// Forward fields of the scene. Phases always hold the noiseless truth; the
/// magnitudes are perturbed when a noise model is given.
FieldDataset synth_dataset(std::span<const Source> sources, const ScanSurface &surface,
                           const Environment &env,
                           const std::optional<NoiseModel> &noise = std::nullopt);

/// Reference scenes used by the benchmarks: 781.25 MHz, PEC ground,
/// cylinders r = 0.5 m and 1.0 m, heights 1..4 m step 0.25 m.
namespace benchmark {
inline constexpr double kFrequencyHz = 781.25e6;
ScanSurface cylinder(double radius, std::size_t azimuth_count = 36);
/// PX at (0.25, 0, 1.5), 1 A m at 90 deg; MY at (-0.25, 0, 1.5), 100 V m at 0 deg.
std::vector<Dipole> two_dipoles();
/// Half-wave z wire at (0, 0, 1.5), 5 V at 0 deg, Z_in = 73 + j42.5 ohm.
WireAntenna half_wave_wire();
} // namespace benchmark

} // namespace dipex
