#pragma once

#include "dipex/scan_model.hpp"

#include <Eigen/Core>

#include <array>
#include <complex>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace dipex {

using Complex = std::complex<double>;
using Vec3c = Eigen::Vector3cd;

namespace constants {
inline constexpr double c0 = 299792458.0;
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double mu0 = 4.0e-7 * pi;
inline constexpr double eps0 = 1.0 / (mu0 * c0 * c0);
inline constexpr double eta0 = mu0 * c0;
} // namespace constants

/// Axis-aligned infinitesimal dipole kinds. P* are electric current elements
/// (A m), M* magnetic current elements (V m).
enum class DipoleKind : int { PX = 0, PY, PZ, MX, MY, MZ };

inline constexpr std::array<DipoleKind, 6> kAllKinds = {
    DipoleKind::PX, DipoleKind::PY, DipoleKind::PZ,
    DipoleKind::MX, DipoleKind::MY, DipoleKind::MZ};

constexpr bool is_magnetic(DipoleKind k) noexcept { return static_cast<int>(k) >= 3; }
Vec3 dipole_axis(DipoleKind k);
std::string_view to_string(DipoleKind k);
/// Accepts "PX".."MZ" (case-insensitive). Throws SchemaError otherwise.
DipoleKind parse_kind(std::string_view text);

struct Dipole {
  DipoleKind kind = DipoleKind::PZ;
  Vec3 position = Vec3::Zero();
  Complex moment{0.0, 0.0};
};

/// Kind and location without a moment: one column of a transfer matrix.
struct DipoleSlot {
  DipoleKind kind = DipoleKind::PZ;
  Vec3 position = Vec3::Zero();
};

struct Environment {
  double frequency_hz = 0.0;
  /// PEC plane at z = 0.
  bool ground = false;

  double wavenumber() const noexcept { return 2.0 * constants::pi * frequency_hz / constants::c0; }
  double wavelength() const noexcept { return constants::c0 / frequency_hz; }
  void validate() const;
};

/// Image of a dipole in the PEC plane z = 0, including the moment sign.
Dipole ground_image(const Dipole &d);

/// Total complex E (V/m, Cartesian) with 1/r, 1/r^2 and 1/r^3 terms,
/// time convention e^{+jwt}. With ground enabled the image source is added.
Vec3c dipole_efield(DipoleKind kind, const Vec3 &position, Complex moment, const Vec3 &obs,
                    const Environment &env);

/// (E . tangent_u, E . tangent_v)
std::pair<Complex, Complex> project_components(const Vec3c &e, const ScanPoint &point);

struct RowRef {
  std::size_t point = 0;
  /// 0 -> tangent_u, 1 -> tangent_v
  int component = 0;
};

/// Linear map from dipole moments to sampled tangential fields. Row 2i holds
/// the tangent_u component of point i, row 2i+1 its tangent_v component.
struct TransferMatrix {
  Eigen::MatrixXcd entries;
  std::vector<RowRef> row_map;

  Eigen::Index rows() const noexcept { return entries.rows(); }
  Eigen::Index cols() const noexcept { return entries.cols(); }
};

TransferMatrix build_transfer_matrix(std::span<const DipoleSlot> layout, const ScanSurface &surface,
                                     const Environment &env);

std::vector<DipoleSlot> layout_of(std::span<const Dipole> dipoles);
Eigen::VectorXcd moments_of(std::span<const Dipole> dipoles);

/// Dataset with magnitudes and phases of T*D on the surface.
FieldDataset forward_fields(std::span<const Dipole> dipoles, const ScanSurface &surface,
                            const Environment &env);

/// Packs an interleaved complex field vector (as produced by T*D) into a
/// dataset with phases.
FieldDataset dataset_from_field(const Eigen::VectorXcd &field, const ScanSurface &surface,
                                double frequency_hz);

} // namespace dipex
