#pragma once

#include "dipex/em_forward.hpp"
#include "dipex/ga_optimizer.hpp"
#include "dipex/inverse_solver.hpp"
#include "dipex/source_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

namespace testing {

using namespace dipex;

inline double deg(double rad) { return rad * 180.0 / constants::pi; }

// Dipole field evaluated the textbook way: rotate into a frame whose z axis
// is the dipole axis, evaluate the spherical components, rotate back. Kept
// independent of the library's vector-form evaluation.
inline Vec3c frame_field(DipoleKind kind, const Vec3 &src, Complex moment, const Vec3 &obs,
                         double k) {
  using constants::pi;
  const Complex j(0.0, 1.0);
  const double eta = constants::eta0;
  Vec3 e3 = dipole_axis(kind);
  Vec3 e1 = (std::abs(e3.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
  e1 = (e1 - e3 * e3.dot(e1)).normalized();
  Vec3 e2 = e3.cross(e1);

  const Vec3 d = obs - src;
  const double lx = d.dot(e1), ly = d.dot(e2), lz = d.dot(e3);
  const double r = d.norm();
  const double theta = std::acos(std::clamp(lz / r, -1.0, 1.0));
  const double phi = std::atan2(ly, lx);
  const double kr = k * r;
  const Complex prop = std::exp(-j * kr);

  Complex er(0), et(0), ep(0);
  if (!is_magnetic(kind)) {
    er = eta * moment * std::cos(theta) / (2.0 * pi * r * r) * (1.0 + 1.0 / (j * kr)) * prop;
    et = j * eta * k * moment * std::sin(theta) / (4.0 * pi * r) *
         (1.0 + 1.0 / (j * kr) - 1.0 / (kr * kr)) * prop;
  } else {
    ep = -j * k * moment * std::sin(theta) / (4.0 * pi * r) * (1.0 + 1.0 / (j * kr)) * prop;
  }
  const Vec3 rh(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
  const Vec3 th(std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta));
  const Vec3 ph(-std::sin(phi), std::cos(phi), 0.0);
  Vec3c local = rh.cast<Complex>() * er + th.cast<Complex>() * et + ph.cast<Complex>() * ep;
  return e1.cast<Complex>() * local.x() + e2.cast<Complex>() * local.y() +
         e3.cast<Complex>() * local.z();
}

// H_phi of a z-directed electric dipole, used for the duality check.
inline Vec3c pz_hfield(const Vec3 &src, Complex moment, const Vec3 &obs, double k) {
  using constants::pi;
  const Complex j(0.0, 1.0);
  const Vec3 d = obs - src;
  const double r = d.norm();
  const double kr = k * r;
  const double sin_t = std::hypot(d.x(), d.y()) / r;
  const Complex hp =
      j * k * moment * sin_t / (4.0 * pi * r) * (1.0 + 1.0 / (j * kr)) * std::exp(-j * kr);
  const Vec3 ph = Vec3(-d.y(), d.x(), 0.0).normalized();
  return ph.cast<Complex>() * hp;
}

inline double rel_diff(const Vec3c &a, const Vec3c &b) { return (a - b).norm() / b.norm(); }

inline std::vector<Source> as_sources(const std::vector<Dipole> &ds) {
  return std::vector<Source>(ds.begin(), ds.end());
}

inline Environment bench_env() { return Environment{benchmark::kFrequencyHz, true}; }

// Magnitude-only two-surface problem for a scene.
inline Problem bench_problem(const std::vector<Source> &sources, bool single = false,
                             const std::optional<NoiseModel> &noise = std::nullopt) {
  const Environment env = bench_env();
  Problem p;
  p.env = env;
  std::optional<NoiseModel> n1 = noise, n2 = noise;
  if (n2)
    n2->seed += 7919;
  if (!single)
    p.surfaces.push_back(synth_dataset(sources, benchmark::cylinder(0.5), env, n1));
  p.surfaces.push_back(synth_dataset(sources, benchmark::cylinder(1.0), env, n2));
  return p;
}

inline Problem two_dipole_problem() { return bench_problem(as_sources(benchmark::two_dipoles())); }

inline std::vector<Source> wire_scene() {
  return {WireSource{benchmark::half_wave_wire(), 101}};
}

inline SearchBounds bench_bounds() { return SearchBounds{{-0.5, 0.5}, {-0.5, 0.5}, {1.0, 2.0}}; }

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string &tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("dipex_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string &name) const { return path / name; }
};

inline std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline Complex random_complex(std::mt19937_64 &rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Complex(n(rng), n(rng));
}

} // namespace testing
