#include "dipex/scan_model.hpp"

#include "dipex/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <utility>
#include <sstream>

namespace dipex {
namespace {

constexpr double kOrthoTol = 1e-12;
constexpr double kMinSpacing = 1e-9;
constexpr double kReadTol = 1e-6;
constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_point(const ScanPoint &p, std::size_t index) {
  const bool finite = p.position.allFinite() && p.tangent_u.allFinite() &&
                      p.tangent_v.allFinite();
  if (!finite)
    throw GeometryError("scan point " + std::to_string(index) + " is not finite");
  if (std::abs(p.tangent_u.norm() - 1.0) > kOrthoTol ||
      std::abs(p.tangent_v.norm() - 1.0) > kOrthoTol)
    throw GeometryError("scan point " + std::to_string(index) +
                        ": tangents must have unit length");
  if (std::abs(p.tangent_u.dot(p.tangent_v)) > kOrthoTol)
    throw GeometryError("scan point " + std::to_string(index) +
                        ": tangents must be orthogonal");
}

// Sweep over x-sorted points; only neighbours within kMinSpacing in x can
// collide. Returns the lower/higher index of the first coincident pair found.
std::optional<std::pair<std::size_t, std::size_t>>
find_coincident(const std::vector<ScanPoint> &points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].position.x() < points[b].position.x();
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Vec3 &pi = points[order[i]].position;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Vec3 &pj = points[order[j]].position;
      if (pj.x() - pi.x() >= kMinSpacing)
        break;
      if ((pj - pi).norm() < kMinSpacing)
        return std::pair{std::min(order[i], order[j]), std::max(order[i], order[j])};
    }
  }
  return std::nullopt;
}

void check_axis(std::span<const double> values, const char *name) {
  if (values.empty())
    throw GeometryError(std::string(name) + " must be non-empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw GeometryError(std::string(name) + " contains a non-finite value");
    if (i > 0 && !(values[i] > values[i - 1]))
      throw GeometryError(std::string(name) + " must be strictly increasing");
  }
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc())
    throw SchemaError("cannot format value");
  return std::string(buf, end);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ','))
    out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

double parse_double(const std::string &text, const std::string &where) {
  double value = 0.0;
  const char *first = text.data();
  const char *last = text.data() + text.size();
  if (!text.empty() && *first == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw SchemaError(where + ": cannot parse '" + text + "' as a number");
  return value;
}

const std::vector<std::string> kBaseColumns = {"x",   "y",   "z",   "tux",   "tuy",  "tuz",
                                               "tvx", "tvy", "tvz", "mag_u", "mag_v"};

} // namespace

ScanSurface::ScanSurface(std::vector<ScanPoint> points, std::string label)
    : points_(std::move(points)), label_(std::move(label)) {
  if (points_.empty())
    throw GeometryError("scan surface must contain at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i)
    check_point(points_[i], i);
  if (auto dup = find_coincident(points_))
    throw GeometryError("scan points " + std::to_string(dup->first) + " and " +
                        std::to_string(dup->second) + " coincide");
}

std::size_t ScanSurface::first_mismatch(const ScanSurface &other, double tol) const {
  const std::size_t n = std::min(size(), other.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto &a = points_[i];
    const auto &b = other.points_[i];
    if ((a.position - b.position).norm() > tol || (a.tangent_u - b.tangent_u).norm() > tol ||
        (a.tangent_v - b.tangent_v).norm() > tol)
      return i;
  }
  return n;
}

bool ScanSurface::same_grid(const ScanSurface &other, double tol) const {
  return size() == other.size() && first_mismatch(other, tol) == size();
}

void FieldDataset::validate() const {
  const std::size_t n = surface.size();
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz))
    throw SchemaError("frequency must be positive and finite");
  if (mag_u.size() != n || mag_v.size() != n)
    throw SchemaError("magnitude arrays must match the point count");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(mag_u[i]) || !std::isfinite(mag_v[i]) || mag_u[i] < 0.0 || mag_v[i] < 0.0)
      throw SchemaError("row " + std::to_string(i + 1) + ": magnitudes must be finite and >= 0");
  }
  if (phase_u.has_value() != phase_v.has_value())
    throw SchemaError("phase_u and phase_v must be given together");
  if (phase_u && (phase_u->size() != n || phase_v->size() != n))
    throw SchemaError("phase arrays must match the point count");
}

Eigen::VectorXd FieldDataset::interleaved_magnitudes() const {
  Eigen::VectorXd out(2 * mag_u.size());
  for (std::size_t i = 0; i < mag_u.size(); ++i) {
    out[2 * i] = mag_u[i];
    out[2 * i + 1] = mag_v[i];
  }
  return out;
}

ScanSurface make_cylinder(double radius, std::span<const double> heights,
                          std::span<const double> azimuths, const Vec3 &axis_origin,
                          std::string label) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw GeometryError("cylinder radius must be positive");
  check_axis(heights, "heights");
  check_axis(azimuths, "azimuths");

  std::vector<ScanPoint> points;
  points.reserve(heights.size() * azimuths.size());
  for (double z : heights) {
    for (double phi : azimuths) {
      const double c = std::cos(phi);
      const double s = std::sin(phi);
      ScanPoint p;
      p.position = axis_origin + Vec3(radius * c, radius * s, z);
      p.tangent_u = Vec3::UnitZ();
      p.tangent_v = Vec3(-s, c, 0.0);
      points.push_back(p);
    }
  }
  return ScanSurface(std::move(points), std::move(label));
}

ScanSurface make_plane(const Vec3 &origin, const Vec3 &u_axis, const Vec3 &v_axis,
                       std::span<const double> u_samples, std::span<const double> v_samples,
                       std::string label) {
  if (u_samples.empty() || v_samples.empty())
    throw GeometryError("plane sample lists must be non-empty");
  const double nu = u_axis.norm();
  const double nv = v_axis.norm();
  if (!(nu > 0.0) || !(nv > 0.0) || u_axis.cross(v_axis).norm() <= 1e-12 * nu * nv)
    throw GeometryError("plane axes must be non-zero and non-parallel");

  const Vec3 tu = u_axis / nu;
  const Vec3 tv = (v_axis - tu * tu.dot(v_axis)).normalized();

  std::vector<ScanPoint> points;
  points.reserve(u_samples.size() * v_samples.size());
  for (double u : u_samples) {
    for (double v : v_samples) {
      ScanPoint p;
      p.position = origin + u * u_axis + v * v_axis;
      p.tangent_u = tu;
      p.tangent_v = tv;
      points.push_back(p);
    }
  }
  return ScanSurface(std::move(points), std::move(label));
}

std::vector<double> linspace_step(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start)
    throw GeometryError("invalid range: need step > 0 and stop >= start");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = start + static_cast<double>(i) * step;
  return out;
}

std::vector<double> uniform_azimuths(std::size_t count) {
  if (count == 0)
    throw GeometryError("azimuth count must be positive");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(count);
  return out;
}

double db_microvolt_to_volt(double db_uv_m) { return std::pow(10.0, db_uv_m / 20.0) * 1e-6; }

FieldDataset read_dataset(const std::filesystem::path &path, MagnitudeUnit unit,
                          const std::string &label) {
  std::ifstream in(path);
  if (!in)
    throw SchemaError(path.string() + ": cannot open dataset");
  const std::string file = path.string();

  std::string line;
  double frequency = 0.0;
  bool have_frequency = false;
  std::vector<std::string> columns;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty())
      continue;
    if (t.front() == '#') {
      const auto pos = t.find("frequency_hz=");
      if (pos != std::string::npos) {
        frequency = parse_double(trim(t.substr(pos + 13)), file + ": frequency header");
        have_frequency = true;
      }
      continue;
    }
    columns = split_csv(t);
    break;
  }
  if (!have_frequency)
    throw SchemaError(file + ": missing '# frequency_hz=<float>' header");
  if (!(frequency > 0.0) || !std::isfinite(frequency))
    throw SchemaError(file + ": frequency must be positive");
  if (columns.size() < kBaseColumns.size() ||
      !std::equal(kBaseColumns.begin(), kBaseColumns.end(), columns.begin()))
    throw SchemaError(file + ": column header must start with "
                             "x,y,z,tux,tuy,tuz,tvx,tvy,tvz,mag_u,mag_v");
  bool with_phase = false;
  if (columns.size() == kBaseColumns.size() + 2 && columns[11] == "phase_u" &&
      columns[12] == "phase_v")
    with_phase = true;
  else if (columns.size() != kBaseColumns.size())
    throw SchemaError(file + ": unexpected columns after mag_v (only phase_u,phase_v allowed)");

  const std::size_t ncol = columns.size();
  std::vector<ScanPoint> points;
  std::vector<double> mag_u, mag_v, phase_u, phase_v;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    ++row;
    const std::string where = file + ": row " + std::to_string(row);
    const auto cells = split_csv(t);
    if (cells.size() != ncol)
      throw SchemaError(where + ": expected " + std::to_string(ncol) + " columns, got " +
                        std::to_string(cells.size()));
    double v[13];
    for (std::size_t c = 0; c < ncol; ++c) {
      v[c] = parse_double(cells[c], where);
      if (!std::isfinite(v[c]))
        throw SchemaError(where + ": non-finite value in column '" + columns[c] + "'");
    }
    ScanPoint p;
    p.position = Vec3(v[0], v[1], v[2]);
    p.tangent_u = Vec3(v[3], v[4], v[5]);
    p.tangent_v = Vec3(v[6], v[7], v[8]);
    double mu = v[9];
    double mv = v[10];
    if (unit == MagnitudeUnit::DbMicroVoltPerMeter) {
      mu = db_microvolt_to_volt(mu);
      mv = db_microvolt_to_volt(mv);
    } else if (mu < 0.0 || mv < 0.0) {
      throw SchemaError(where + ": negative magnitude");
    }
    // Hand-written files often carry 4-6 digit tangents; repair small
    // deviations, reject anything else.
    try {
      check_point(p, row);
    } catch (const GeometryError &) {
      if (std::abs(p.tangent_u.norm() - 1.0) > kReadTol ||
          std::abs(p.tangent_v.norm() - 1.0) > kReadTol ||
          std::abs(p.tangent_u.dot(p.tangent_v)) > kReadTol)
        throw SchemaError(where + ": tangents must be orthonormal");
      p.tangent_u.normalize();
      p.tangent_v = (p.tangent_v - p.tangent_u * p.tangent_u.dot(p.tangent_v)).normalized();
    }
    points.push_back(p);
    mag_u.push_back(mu);
    mag_v.push_back(mv);
    if (with_phase) {
      phase_u.push_back(v[11]);
      phase_v.push_back(v[12]);
    }
  }
  if (points.empty())
    throw SchemaError(file + ": no data rows");

  if (auto dup = find_coincident(points))
    throw SchemaError(file + ": row " + std::to_string(dup->second + 1) +
                      ": duplicate point (same position as row " +
                      std::to_string(dup->first + 1) + ")");
  ScanSurface surface(std::move(points), label.empty() ? path.stem().string() : label);
  FieldDataset ds{std::move(surface), frequency, std::move(mag_u), std::move(mag_v),
                  std::nullopt, std::nullopt};
  if (with_phase) {
    ds.phase_u = std::move(phase_u);
    ds.phase_v = std::move(phase_v);
  }
  ds.validate();
  return ds;
}

void write_dataset(const FieldDataset &dataset, const std::filesystem::path &path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw SchemaError(path.string() + ": cannot open for writing");
  const bool with_phase = dataset.has_phase();
  out << "# frequency_hz=" << format_double(dataset.frequency_hz) << '\n';
  out << "x,y,z,tux,tuy,tuz,tvx,tvy,tvz,mag_u,mag_v";
  if (with_phase)
    out << ",phase_u,phase_v";
  out << '\n';
  const auto &pts = dataset.surface.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto &p = pts[i];
    const double vals[] = {p.position.x(),  p.position.y(),  p.position.z(),
                           p.tangent_u.x(), p.tangent_u.y(), p.tangent_u.z(),
                           p.tangent_v.x(), p.tangent_v.y(), p.tangent_v.z(),
                           dataset.mag_u[i], dataset.mag_v[i]};
    for (std::size_t c = 0; c < std::size(vals); ++c) {
      if (c)
        out << ',';
      out << format_double(vals[c]);
    }
    if (with_phase)
      out << ',' << format_double((*dataset.phase_u)[i]) << ','
          << format_double((*dataset.phase_v)[i]);
    out << '\n';
  }
  if (!out)
    throw SchemaError(path.string() + ": write failed");
}

} // namespace dipex
