#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dipex {

using Vec3 = Eigen::Vector3d;

/// A scan location plus the two tangential directions along which field
/// components are sampled. For cylinders tangent_u = z and tangent_v = phi.
struct ScanPoint {
  Vec3 position = Vec3::Zero();
  Vec3 tangent_u = Vec3::UnitZ();
  Vec3 tangent_v = Vec3::UnitY();
};

/// Ordered, validated point set. Construction enforces orthonormal tangents
/// and a minimum spacing of 1e-9 m between points.
class ScanSurface {
public:
  ScanSurface(std::vector<ScanPoint> points, std::string label);

  const std::vector<ScanPoint> &points() const noexcept { return points_; }
  const ScanPoint &operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const noexcept { return points_.size(); }
  const std::string &label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  /// True when both surfaces have the same point count and positions and
  /// tangents agree within `tol`.
  bool same_grid(const ScanSurface &other, double tol = 1e-9) const;
  /// Index of the first point that differs from `other`, or size() when the
  /// grids agree on the common prefix and sizes match.
  std::size_t first_mismatch(const ScanSurface &other, double tol = 1e-9) const;

private:
  std::vector<ScanPoint> points_;
  std::string label_;
};

/// Magnitude samples attached to a surface. Phases are present only for
/// synthetic ground truth.
struct FieldDataset {
  ScanSurface surface;
  double frequency_hz = 0.0;
  std::vector<double> mag_u;
  std::vector<double> mag_v;
  std::optional<std::vector<double>> phase_u;
  std::optional<std::vector<double>> phase_v;

  /// Throws SchemaError when sizes, signs or the frequency are invalid.
  void validate() const;
  bool has_phase() const noexcept { return phase_u.has_value() && phase_v.has_value(); }
  /// Interleaved magnitudes (u0, v0, u1, v1, ...) matching transfer-matrix rows.
  Eigen::VectorXd interleaved_magnitudes() const;
};

enum class MagnitudeUnit { VoltPerMeter, DbMicroVoltPerMeter };

/// Heights outer, azimuths inner. tangent_u = z, tangent_v = phi.
ScanSurface make_cylinder(double radius, std::span<const double> heights,
                          std::span<const double> azimuths,
                          const Vec3 &axis_origin = Vec3::Zero(),
                          std::string label = "surface");

/// Grid origin + u*u_axis + v*v_axis with u outer, v inner. The tangents are
/// the Gram-Schmidt orthonormalization of (u_axis, v_axis).
ScanSurface make_plane(const Vec3 &origin, const Vec3 &u_axis, const Vec3 &v_axis,
                       std::span<const double> u_samples, std::span<const double> v_samples,
                       std::string label = "surface");

/// `count` values start, start+step, ... (inclusive stop when it lands on the grid).
std::vector<double> linspace_step(double start, double stop, double step);
/// `count` uniform azimuths in [0, 2pi).
std::vector<double> uniform_azimuths(std::size_t count);

double db_microvolt_to_volt(double db_uv_m);

FieldDataset read_dataset(const std::filesystem::path &path,
                          MagnitudeUnit unit = MagnitudeUnit::VoltPerMeter,
                          const std::string &label = "");
void write_dataset(const FieldDataset &dataset, const std::filesystem::path &path);

} // namespace dipex
