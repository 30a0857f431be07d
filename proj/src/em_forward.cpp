#include "dipex/em_forward.hpp"

#include "dipex/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace dipex {
namespace {

constexpr double kSingularDistance = 1e-9;
constexpr Complex kJ{0.0, 1.0};

// Free-space field of one axis-aligned dipole. Closed forms are those of a
// z-directed element evaluated in the dipole's own frame:
//   electric: E_r  = eta Il cos(t) / (2 pi r^2) (1 + 1/(jkr)) e^{-jkr}
//             E_t  = j eta k Il sin(t) / (4 pi r) (1 + 1/(jkr) - 1/(kr)^2) e^{-jkr}
//   magnetic: E_ph = -j k K sin(t) / (4 pi r) (1 + 1/(jkr)) e^{-jkr}
// and rotated back via r_hat, sin(t) theta_hat = cos(t) r_hat - a and
// sin(t) phi_hat = a x r_hat.
Vec3c free_space_efield(DipoleKind kind, const Vec3 &position, Complex moment, const Vec3 &obs,
                        double k) {
  const Vec3 d = obs - position;
  const double r = d.norm();
  if (r < kSingularDistance)
    throw SingularityError("observation point coincides with a dipole source");
  const Vec3 n = d / r;
  const Vec3 a = dipole_axis(kind);
  const double kr = k * r;
  const Complex phase = std::exp(Complex(0.0, -kr));
  const Complex inv_jkr = 1.0 / (kJ * kr);
  using constants::eta0;
  using constants::pi;

  Vec3c e;
  if (!is_magnetic(kind)) {
    const double cos_t = a.dot(n);
    const Complex radial = eta0 * moment / (2.0 * pi * r * r) * (1.0 + inv_jkr) * phase;
    const Complex transverse =
        kJ * eta0 * k * moment / (4.0 * pi * r) * (1.0 + inv_jkr - 1.0 / (kr * kr)) * phase;
    const Vec3 theta_dir = cos_t * n - a; // sin(t) * theta_hat
    e = (radial * cos_t) * n.cast<Complex>() + transverse * theta_dir.cast<Complex>();
  } else {
    const Complex azimuthal = -kJ * k * moment / (4.0 * pi * r) * (1.0 + inv_jkr) * phase;
    e = azimuthal * a.cross(n).cast<Complex>();
  }
  return e;
}

} // namespace

Vec3 dipole_axis(DipoleKind k) {
  switch (k) {
  case DipoleKind::PX:
  case DipoleKind::MX:
    return Vec3::UnitX();
  case DipoleKind::PY:
  case DipoleKind::MY:
    return Vec3::UnitY();
  case DipoleKind::PZ:
  case DipoleKind::MZ:
    return Vec3::UnitZ();
  }
  return Vec3::UnitZ();
}

std::string_view to_string(DipoleKind k) {
  static constexpr std::array<std::string_view, 6> names = {"PX", "PY", "PZ", "MX", "MY", "MZ"};
  return names[static_cast<std::size_t>(k)];
}

DipoleKind parse_kind(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (DipoleKind k : kAllKinds)
    if (to_string(k) == upper)
      return k;
  throw SchemaError("unknown dipole kind '" + std::string(text) + "'");
}

void Environment::validate() const {
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz))
    throw ConfigError("frequency must be positive and finite");
}

Dipole ground_image(const Dipole &d) {
  // Horizontal electric and vertical magnetic images flip sign.
  double sign = 1.0;
  switch (d.kind) {
  case DipoleKind::PX:
  case DipoleKind::PY:
  case DipoleKind::MZ:
    sign = -1.0;
    break;
  default:
    break;
  }
  return Dipole{d.kind, Vec3(d.position.x(), d.position.y(), -d.position.z()), sign * d.moment};
}

Vec3c dipole_efield(DipoleKind kind, const Vec3 &position, Complex moment, const Vec3 &obs,
                    const Environment &env) {
  env.validate();
  if (!position.allFinite() || !obs.allFinite() || !std::isfinite(moment.real()) ||
      !std::isfinite(moment.imag()))
    throw GeometryError("dipole and observation must be finite");
  const double k = env.wavenumber();
  Vec3c e = free_space_efield(kind, position, moment, obs, k);
  if (env.ground) {
    if (!(position.z() > 0.0))
      throw GeometryError("dipoles must lie above the ground plane (z > 0)");
    if (obs.z() < 0.0)
      throw GeometryError("observation point below the ground plane");
    const Dipole img = ground_image(Dipole{kind, position, moment});
    e += free_space_efield(img.kind, img.position, img.moment, obs, k);
  }
  return e;
}

std::pair<Complex, Complex> project_components(const Vec3c &e, const ScanPoint &point) {
  const Complex u = e.x() * point.tangent_u.x() + e.y() * point.tangent_u.y() +
                    e.z() * point.tangent_u.z();
  const Complex v = e.x() * point.tangent_v.x() + e.y() * point.tangent_v.y() +
                    e.z() * point.tangent_v.z();
  return {u, v};
}

TransferMatrix build_transfer_matrix(std::span<const DipoleSlot> layout, const ScanSurface &surface,
                                     const Environment &env) {
  env.validate();
  if (env.ground) {
    for (const auto &p : surface.points())
      if (!(p.position.z() > 0.0))
        throw GeometryError("scan points must lie above the ground plane (z > 0)");
  }
  const auto n_points = static_cast<Eigen::Index>(surface.size());
  TransferMatrix t;
  t.entries.resize(2 * n_points, static_cast<Eigen::Index>(layout.size()));
  t.row_map.resize(static_cast<std::size_t>(2 * n_points));
  for (Eigen::Index i = 0; i < n_points; ++i) {
    t.row_map[static_cast<std::size_t>(2 * i)] = RowRef{static_cast<std::size_t>(i), 0};
    t.row_map[static_cast<std::size_t>(2 * i + 1)] = RowRef{static_cast<std::size_t>(i), 1};
  }
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    for (Eigen::Index i = 0; i < n_points; ++i) {
      const ScanPoint &p = surface[static_cast<std::size_t>(i)];
      const Vec3c e = dipole_efield(layout[j].kind, layout[j].position, Complex(1.0, 0.0),
                                    p.position, env);
      const auto [u, v] = project_components(e, p);
      t.entries(2 * i, col) = u;
      t.entries(2 * i + 1, col) = v;
    }
  }
  return t;
}

std::vector<DipoleSlot> layout_of(std::span<const Dipole> dipoles) {
  std::vector<DipoleSlot> out;
  out.reserve(dipoles.size());
  for (const auto &d : dipoles)
    out.push_back(DipoleSlot{d.kind, d.position});
  return out;
}

Eigen::VectorXcd moments_of(std::span<const Dipole> dipoles) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(dipoles.size()));
  for (std::size_t i = 0; i < dipoles.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = dipoles[i].moment;
  return out;
}

FieldDataset dataset_from_field(const Eigen::VectorXcd &field, const ScanSurface &surface,
                                double frequency_hz) {
  const std::size_t n = surface.size();
  if (static_cast<std::size_t>(field.size()) != 2 * n)
    throw GeometryError("field vector length does not match the surface");
  std::vector<double> mag_u(n), mag_v(n), ph_u(n), ph_v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex u = field[static_cast<Eigen::Index>(2 * i)];
    const Complex v = field[static_cast<Eigen::Index>(2 * i + 1)];
    mag_u[i] = std::abs(u);
    mag_v[i] = std::abs(v);
    ph_u[i] = std::arg(u);
    ph_v[i] = std::arg(v);
  }
  return FieldDataset{surface, frequency_hz, std::move(mag_u), std::move(mag_v),
                      std::move(ph_u), std::move(ph_v)};
}

FieldDataset forward_fields(std::span<const Dipole> dipoles, const ScanSurface &surface,
                            const Environment &env) {
  const auto layout = layout_of(dipoles);
  const TransferMatrix t = build_transfer_matrix(layout, surface, env);
  const Eigen::VectorXcd field = t.entries * moments_of(dipoles);
  return dataset_from_field(field, surface, env.frequency_hz);
}

} // namespace dipex
