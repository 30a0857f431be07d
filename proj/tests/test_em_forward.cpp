#include "support.hpp"

#include "dipex/errors.hpp"
#include "dipex/lstsq.hpp"

#include <doctest.h>

using namespace dipex;
using testing::frame_field;
using testing::rel_diff;

namespace {

Vec3 random_point(std::mt19937_64 &rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Vec3(u(rng), u(rng), u(rng));
}

} // namespace

TEST_CASE("kinds are classified and parsed") {
  CHECK(kAllKinds.size() == 6);
  int magnetic = 0;
  for (auto k : kAllKinds) {
    magnetic += is_magnetic(k);
    CHECK(parse_kind(to_string(k)) == k);
    CHECK(dipole_axis(k).norm() == 1.0);
  }
  CHECK(magnetic == 3);
  CHECK_THROWS_AS(parse_kind("QZ"), SchemaError);
}

TEST_CASE("free-space field matches the rotated-frame closed forms") {
  std::mt19937_64 rng(11);
  const Environment env{781.25e6, false};
  const double k = env.wavenumber();
  for (auto kind : kAllKinds) {
    for (int i = 0; i < 20; ++i) {
      const Vec3 src = random_point(rng, -0.5, 0.5);
      Vec3 obs = random_point(rng, -2.0, 2.0);
      if ((obs - src).norm() < 0.05)
        continue;
      const Complex m = testing::random_complex(rng);
      const Vec3c got = dipole_efield(kind, src, m, obs, env);
      CHECK(rel_diff(got, frame_field(kind, src, m, obs, k)) <= 1e-12);
    }
  }
}

TEST_CASE("PX over ground equals the explicit image-superposition sum") {
  const Environment env{benchmark::kFrequencyHz, true};
  const double k = env.wavenumber();
  const Vec3 src(0.25, 0.0, 1.5);
  const double a = 10.0 * constants::pi / 180.0;
  const Vec3 obs(0.5 * std::cos(a), 0.5 * std::sin(a), 1.25);
  const Complex m(0.0, 1.0);
  const Vec3c oracle = frame_field(DipoleKind::PX, src, m, obs, k) +
                       frame_field(DipoleKind::PX, Vec3(0.25, 0.0, -1.5), -m, obs, k);
  CHECK(rel_diff(dipole_efield(DipoleKind::PX, src, m, obs, env), oracle) <= 1e-12);
}

TEST_CASE("benchmark dataset spot values match the image-superposition oracle") {
  const Environment env{benchmark::kFrequencyHz, true};
  const double k = env.wavenumber();
  const auto sources = benchmark::two_dipoles();
  const ScanSurface surface = benchmark::cylinder(0.5);
  const FieldDataset ds = forward_fields(sources, surface, env);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, surface.size() - 1);
  const double image_sign[] = {-1, -1, 1, 1, 1, -1};
  for (int t = 0; t < 10; ++t) {
    const std::size_t i = pick(rng);
    Vec3c e = Vec3c::Zero();
    for (const auto &d : sources) {
      const Vec3 img(d.position.x(), d.position.y(), -d.position.z());
      e += frame_field(d.kind, d.position, d.moment, surface[i].position, k);
      e += frame_field(d.kind, img, image_sign[static_cast<int>(d.kind)] * d.moment,
                       surface[i].position, k);
    }
    const Complex eu = surface[i].tangent_u.cast<Complex>().dot(e);
    const Complex ev = surface[i].tangent_v.cast<Complex>().dot(e);
    CHECK(ds.mag_u[i] == doctest::Approx(std::abs(eu)).epsilon(1e-12));
    CHECK(ds.mag_v[i] == doctest::Approx(std::abs(ev)).epsilon(1e-12));
    CHECK(std::abs(std::polar(1.0, (*ds.phase_u)[i]) - std::polar(1.0, std::arg(eu))) <= 1e-10);
  }
}

TEST_CASE("PEC ground: tangential E vanishes on the plane for all kinds") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0), h(0.2, 2.0);
  const Environment ground{781.25e6, true}, free{781.25e6, false};
  for (auto kind : kAllKinds) {
    for (int i = 0; i < 25; ++i) {
      const Vec3 src(u(rng), u(rng), h(rng));
      const Vec3 obs(u(rng), u(rng), 0.0);
      const Complex m = testing::random_complex(rng);
      const Vec3c total = dipole_efield(kind, src, m, obs, ground);
      const double single = dipole_efield(kind, src, m, obs, free).norm();
      CHECK(std::abs(total.x()) <= 1e-9 * single);
      CHECK(std::abs(total.y()) <= 1e-9 * single);
    }
  }
}

TEST_CASE("ground image sign table") {
  const Vec3 p(0.1, 0.2, 0.7);
  const double expected[] = {-1, -1, 1, 1, 1, -1};
  for (auto kind : kAllKinds) {
    const Dipole img = ground_image(Dipole{kind, p, Complex(2.0, 1.0)});
    CHECK(img.kind == kind);
    CHECK((img.position - Vec3(0.1, 0.2, -0.7)).norm() == 0.0);
    CHECK(img.moment == expected[static_cast<int>(kind)] * Complex(2.0, 1.0));
  }
}

TEST_CASE("far-field decay and the axial null") {
  const Environment env{781.25e6, false};
  const double lambda = env.wavelength();
  const Complex m(1.0, 0.0);
  SUBCASE("r|E_theta| is constant on the equator") {
    const double r1 = 100 * lambda, r2 = 200 * lambda;
    const double a = r1 * dipole_efield(DipoleKind::PZ, Vec3::Zero(), m, Vec3(r1, 0, 0), env).norm();
    const double b = r2 * dipole_efield(DipoleKind::PZ, Vec3::Zero(), m, Vec3(r2, 0, 0), env).norm();
    CHECK(std::abs(a - b) / a < 1e-3);
  }
  SUBCASE("on the axis only the radial term remains") {
    const Vec3c e = dipole_efield(DipoleKind::PZ, Vec3::Zero(), m, Vec3(0, 0, 0.4), env);
    CHECK(std::abs(e.x()) <= 1e-15 * e.norm());
    CHECK(std::abs(e.y()) <= 1e-15 * e.norm());
    CHECK(std::abs(e.z()) > 0.0);
  }
  SUBCASE("r|E| converges along arbitrary directions and E_r/E_theta vanishes") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i) {
      const Vec3 dir = random_point(rng, -1, 1).normalized();
      for (auto kind : kAllKinds) {
        const double a =
            100 * lambda * dipole_efield(kind, Vec3::Zero(), m, dir * 100 * lambda, env).norm();
        const double b =
            200 * lambda * dipole_efield(kind, Vec3::Zero(), m, dir * 200 * lambda, env).norm();
        if (a < 1e-9)
          continue;
        CHECK(std::abs(a - b) / a < 5e-3);
      }
      const Vec3c e = dipole_efield(DipoleKind::PZ, Vec3::Zero(), m, dir * 100 * lambda, env);
      const Complex er = dir.cast<Complex>().dot(e);
      const double et = std::sqrt(std::max(0.0, e.squaredNorm() - std::norm(er)));
      // |E_r / E_theta| = 2 |cot(theta)| |1 + 1/(jkr)| / (kr |1 + 1/(jkr) - 1/(kr)^2|) -> 0
      const double kr = env.wavenumber() * 100 * lambda;
      const Complex g = 1.0 + 1.0 / Complex(0.0, kr);
      const double cot = std::abs(dir.z()) / std::hypot(dir.x(), dir.y());
      const double want = 2 * cot * std::abs(g) / (kr * std::abs(g - 1.0 / (kr * kr)));
      CHECK(std::abs(er) / et == doctest::Approx(want).epsilon(1e-6));
      CHECK(want < 4 * cot / kr);
    }
  }
}

TEST_CASE("swapping source and observation keeps E_theta of a PZ dipole") {
  const Environment env{781.25e6, false};
  std::mt19937_64 rng(21);
  for (int i = 0; i < 20; ++i) {
    const Vec3 a = random_point(rng, -1, 1), b = random_point(rng, -1, 1);
    auto e_theta = [&](const Vec3 &src, const Vec3 &obs) {
      const Vec3 d = obs - src;
      const double r = d.norm();
      const double ct = d.z() / r, st = std::hypot(d.x(), d.y()) / r;
      const double cp = d.x() / std::hypot(d.x(), d.y()), sp = d.y() / std::hypot(d.x(), d.y());
      const Vec3 th(ct * cp, ct * sp, -st);
      return th.cast<Complex>().dot(dipole_efield(DipoleKind::PZ, src, Complex(1, 0), obs, env));
    };
    const Complex ab = e_theta(a, b), ba = e_theta(b, a);
    CHECK(std::abs(ab - ba) <= 1e-12 * std::abs(ab));
  }
}

TEST_CASE("MZ electric field is the dual of the PZ magnetic field") {
  const Environment env{781.25e6, false};
  const double k = env.wavenumber();
  const double eta2 = constants::eta0 * constants::eta0;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vec3 src = random_point(rng, -0.3, 0.3);
    const Vec3 obs = random_point(rng, -2, 2);
    const Complex K = testing::random_complex(rng);
    const Vec3c e = dipole_efield(DipoleKind::MZ, src, K, obs, env);
    const Vec3c h = testing::pz_hfield(src, K / eta2, obs, k);
    CHECK(rel_diff(e, -eta2 * h) <= 1e-12);
  }
}

TEST_CASE("singular and out-of-half-space geometry") {
  const Environment free{1e9, false}, ground{1e9, true};
  CHECK_THROWS_AS(dipole_efield(DipoleKind::PX, Vec3(0, 0, 1), 1.0, Vec3(0, 0, 1), free),
                  SingularityError);
  CHECK_THROWS_AS(dipole_efield(DipoleKind::PX, Vec3(0, 0, -1), 1.0, Vec3(0, 0, 1), ground),
                  GeometryError);
  CHECK_THROWS_AS(dipole_efield(DipoleKind::PX, Vec3(0, 0, 1), 1.0, Vec3(0, 0, -1), ground),
                  GeometryError);
  CHECK_THROWS(Environment{0.0, false}.validate());
}

TEST_CASE("projection onto the scan tangents") {
  const std::vector<double> h{1.0}, az{0.7};
  const ScanSurface s = make_cylinder(1.0, h, az);
  const auto [u, v] = project_components(Vec3c(0, 0, Complex(1, 0)), s[0]);
  CHECK(std::abs(u - Complex(1, 0)) <= 1e-15);
  CHECK(std::abs(v) <= 1e-15);
  const Vec3c ephi(-std::sin(0.7), std::cos(0.7), 0.0);
  const auto [u2, v2] = project_components(ephi, s[0]);
  CHECK(std::abs(u2) <= 1e-15);
  CHECK(std::abs(v2 - Complex(1, 0)) <= 1e-15);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const Vec3 a = random_point(rng, -1, 1).normalized();
    Vec3 b = random_point(rng, -1, 1);
    b = (b - a * a.dot(b)).normalized();
    ScanPoint p;
    p.tangent_u = a;
    p.tangent_v = b;
    const Vec3c e(testing::random_complex(rng), testing::random_complex(rng),
                  testing::random_complex(rng));
    const auto [eu, ev] = project_components(e, p);
    CHECK(std::norm(eu) + std::norm(ev) <= e.squaredNorm() * (1 + 1e-12));
    const Vec3c tangential = a.cast<Complex>() * eu + b.cast<Complex>() * ev;
    const auto [tu, tv] = project_components(tangential, p);
    CHECK(std::norm(tu) + std::norm(tv) == doctest::Approx(tangential.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("transfer matrix shape, row map and consistency with forward fields") {
  const Environment env = testing::bench_env();
  const ScanSurface s = benchmark::cylinder(0.5);
  const std::vector<DipoleSlot> one{{DipoleKind::PZ, Vec3(0, 0, 1.5)}};
  const TransferMatrix t1 = build_transfer_matrix(one, s, env);
  CHECK(t1.rows() == 936);
  CHECK(t1.cols() == 1);
  REQUIRE(t1.row_map.size() == 936);
  CHECK(t1.row_map[5].point == 2);
  CHECK(t1.row_map[5].component == 1);

  const auto sources = benchmark::two_dipoles();
  const TransferMatrix t = build_transfer_matrix(layout_of(sources), s, env);
  const Eigen::VectorXcd f = t.entries * moments_of(sources);
  const FieldDataset ds = forward_fields(sources, s, env);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(std::abs(f[2 * i]) == ds.mag_u[i]);
    CHECK(std::abs(f[2 * i + 1]) == ds.mag_v[i]);
  }
  // column j is the projected unit-moment field of dipole j
  const Vec3c e = dipole_efield(DipoleKind::MY, Vec3(-0.25, 0, 1.5), 1.0, s[17].position, env);
  const auto [eu, ev] = project_components(e, s[17]);
  CHECK(std::abs(t.entries(34, 1) - eu) <= 1e-15 * std::abs(eu));
  CHECK(std::abs(t.entries(35, 1) - ev) <= 1e-15 * std::abs(ev) + 1e-300);
}

TEST_CASE("duplicate dipoles give a rank-deficient transfer matrix") {
  const std::vector<DipoleSlot> dup{{DipoleKind::PX, Vec3(0.1, 0, 1.5)},
                                    {DipoleKind::PX, Vec3(0.1, 0, 1.5)}};
  const TransferMatrix t = build_transfer_matrix(dup, benchmark::cylinder(0.5), testing::bench_env());
  try {
    LeastSquares ls(t.entries);
    FAIL("expected an ill-conditioned error");
  } catch (const IllConditionedError &e) {
    CHECK(e.condition() > 1e12);
  }
}

TEST_CASE("forward fields are linear") {
  const Environment env = testing::bench_env();
  const ScanSurface s = benchmark::cylinder(1.0);
  const std::vector<DipoleSlot> layout{{DipoleKind::PX, Vec3(0.2, 0, 1.4)},
                                       {DipoleKind::MZ, Vec3(-0.1, 0.3, 1.7)},
                                       {DipoleKind::PY, Vec3(0, -0.2, 1.2)}};
  const TransferMatrix t = build_transfer_matrix(layout, s, env);
  std::mt19937_64 rng(9);
  Eigen::VectorXcd a(3), b(3);
  for (int i = 0; i < 3; ++i) {
    a[i] = testing::random_complex(rng);
    b[i] = testing::random_complex(rng);
  }
  const Complex al(0.3, -1.2), be(-2.0, 0.5);
  const Eigen::VectorXcd lhs = t.entries * (al * a + be * b);
  const Eigen::VectorXcd rhs = al * (t.entries * a) + be * (t.entries * b);
  CHECK((lhs - rhs).norm() <= 1e-13 * rhs.norm());

  // superposition of two dipole lists
  const std::vector<Dipole> d1{{DipoleKind::PX, Vec3(0.2, 0, 1.4), a[0]}};
  const std::vector<Dipole> d2{{DipoleKind::MZ, Vec3(-0.1, 0.3, 1.7), a[1]}};
  std::vector<Dipole> both = d1;
  both.push_back(d2[0]);
  const TransferMatrix t12 = build_transfer_matrix(layout_of(both), s, env);
  const Eigen::VectorXcd f12 = t12.entries * moments_of(both);
  const Eigen::VectorXcd f1 = build_transfer_matrix(layout_of(d1), s, env).entries * moments_of(d1);
  const Eigen::VectorXcd f2 = build_transfer_matrix(layout_of(d2), s, env).entries * moments_of(d2);
  CHECK((f12 - f1 - f2).norm() <= 1e-13 * f12.norm());

  const std::vector<Dipole> zero{{DipoleKind::PZ, Vec3(0, 0, 1.5), 0.0}};
  const FieldDataset z = forward_fields(zero, s, env);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(z.mag_u[i] == 0.0);
    CHECK(z.mag_v[i] == 0.0);
  }
}

TEST_CASE("ground requires scan points above the plane") {
  const std::vector<double> h{0.0}, az{0.0};
  const ScanSurface s = make_cylinder(1.0, h, az);
  const std::vector<DipoleSlot> one{{DipoleKind::PZ, Vec3(0, 0, 1.5)}};
  CHECK_THROWS_AS(build_transfer_matrix(one, s, testing::bench_env()), GeometryError);
}
