#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <mowave/errors.hpp>
#include <mowave/forward.hpp>
#include <mowave/incident.hpp>

#include "oracles.hpp"

using namespace mowave;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kC = 340.0;
const double kOmega0 = 2 * kPi / 14;

struct Scene2d {
  Trajectory traj = Trajectory::circle(60.0, kOmega0);
  Signal sig = Signal::lambda_n(10, 14.0);
  TimeGrid grid{14.0, 640};
  BoundaryMesh mesh = build_boundary_mesh({ShapeKind::circle, {0, 0, 0}, 10.0}, 64);
  MeasurementArray receivers = make_receivers({ReceiverLayout::circle, 72.0, 16});
};

WaveRecord scaled(WaveRecord rec, double alpha) {
  for (double& v : rec.values) v *= alpha;
  return rec;
}
}  // namespace

TEST_CASE("zero incident field gives zero density and zero scattered field") {
  const Scene2d s;
  const auto inc = incident_on_mesh(s.traj, Signal::zero(), Medium(kC), s.mesh, s.grid);
  const auto g = march_density(s.mesh, inc, Medium(kC));
  for (double v : g.values) REQUIRE(v == 0.0);
  const auto u = evaluate_scattered(s.mesh, g, s.receivers, s.grid, Medium(kC));
  CHECK(u.kind == RecordKind::scattered);
  CHECK(u.max_abs() == 0.0);
}

TEST_CASE("marched density satisfies the collocation equations") {
  const Scene2d s;
  const auto inc = incident_on_mesh(s.traj, s.sig, Medium(kC), s.mesh, s.grid);
  const auto g = march_density(s.mesh, inc, Medium(kC));
  CHECK_FALSE(g.filtered);
  CHECK(collocation_residual(s.mesh, inc, g, Medium(kC)) < 1e-8 * inc.max_abs());
}

TEST_CASE("density vanishes before the first incident arrival") {
  const Scene2d s;
  const auto inc = incident_on_mesh(s.traj, s.sig, Medium(kC), s.mesh, s.grid);
  const auto g = march_density(s.mesh, inc, Medium(kC));
  // The field reaches no panel before (60 - 10) / c.
  const int first = static_cast<int>(std::floor(50.0 / kC / s.grid.dt()));
  for (int k = 0; k < first; ++k) {
    for (std::size_t j = 0; j < s.mesh.size(); ++j) REQUIRE(g.at(k, j) == 0.0);
  }
  CHECK(g.sample(-1.0, 0) == 0.0);
}

TEST_CASE("density samples interpolate linearly in time") {
  DensityHistory g(TimeGrid(1.0, 4), 1);
  for (int k = 0; k <= 4; ++k) g.at(k, 0) = k * k;
  CHECK(g.sample(0.25, 0) == doctest::Approx(1.0));
  CHECK(g.sample(0.375, 0) == doctest::Approx(2.5));
  CHECK(g.sample(-0.1, 0) == 0.0);
  CHECK(g.sample(2.0, 0) == doctest::Approx(16.0));
}

namespace {

/// Integral of 1/(4 pi |x - y|) over the straight segment [a, b], from the
/// antiderivative asinh((s - p) / h) along the segment direction.
double segment_oracle(const Vec3& a, const Vec3& b, const Vec3& x) {
  const double len = distance(a, b);
  const Vec3 e = (b - a) * (1.0 / len);
  const double p = dot(x - a, e);
  const double h = norm(x - a - e * p);
  return (std::asinh((len - p) / h) + std::asinh(p / h)) / (4 * kPi);
}

}  // namespace

TEST_CASE("operator assembly is symmetric in distance") {
  const auto mesh = build_boundary_mesh({ShapeKind::acorn, {0, 0, 0}, 2.0}, 48);
  const auto op = assemble_operator(mesh, Medium(kC), TimeGrid(14.0, 2560));
  int near = 0;
  for (std::size_t i = 0; i < op.size; ++i) {
    for (std::size_t j = 0; j < op.size; ++j) {
      REQUIRE(op.lag[i * op.size + j] == op.lag[j * op.size + i]);
      REQUIRE(op.frac[i * op.size + j] == op.frac[j * op.size + i]);
      if (i == j) continue;
      const auto& pj = mesh.panels[j];
      const double r = distance(mesh.panels[i].centroid, pj.centroid);
      const double w = op.weight[i * op.size + j];
      if (r >= 3.0 * mesh.panel_size) {
        REQUIRE(w == doctest::Approx(pj.measure / (4 * kPi * r)).epsilon(1e-14));
      } else {
        ++near;
        const double exact = segment_oracle(pj.vertices[0], pj.vertices[1], mesh.panels[i].centroid);
        REQUIRE(w == doctest::Approx(exact).epsilon(1e-12));
      }
    }
  }
  CHECK(near > 0);
}

TEST_CASE("panel self-integrals match closed forms") {
  Panel seg;
  seg.measure = 0.4;
  const double h = 0.2;
  const double delta = 0.04;
  CHECK(panel_self_integral(seg, 2) ==
        doctest::Approx(std::log((h + std::sqrt(h * h + delta * delta)) / delta) / (2 * kPi))
            .epsilon(1e-14));
  // Equilateral triangle with side a seen from its centroid:
  // integral of 1/r = a sqrt(3) ln(2 + sqrt 3) / 2... via three sub-triangles.
  const double a = 0.3;
  Panel tri;
  tri.vertices = {Vec3{0, 0, 0}, Vec3{a, 0, 0}, Vec3{a / 2, a * std::sqrt(3.0) / 2, 0}};
  tri.centroid = (tri.vertices[0] + tri.vertices[1] + tri.vertices[2]) / 3.0;
  tri.measure = a * a * std::sqrt(3.0) / 4;
  // Numerical oracle: polar integration over the triangle about the centroid.
  double ref = 0.0;
  const int n = 200000;
  for (int e = 0; e < 3; ++e) {
    const Vec3 p = tri.vertices[e] - tri.centroid;
    const Vec3 q = tri.vertices[(e + 1) % 3] - tri.centroid;
    for (int m = 0; m < n; ++m) {
      const double s = (m + 0.5) / n;
      const Vec3 edge = p + (q - p) * s;
      // d(theta) * rho_max, with dtheta = |p x q| ds / |edge|^2 and rho_max = |edge|.
      const Vec3 cr = cross(p, q);
      ref += norm(cr) / norm(edge) / n;
    }
  }
  CHECK(panel_self_integral(tri, 3) == doctest::Approx(ref / (4 * kPi)).epsilon(1e-8));
}

TEST_CASE("single panel with a prescribed density") {
  BoundaryMesh one;
  Panel p;
  p.centroid = {0, 0, 0};
  p.measure = 0.05;
  p.normal = {1, 0, 0};
  p.vertices = {Vec3{0, -0.025, 0}, Vec3{0, 0.025, 0}, Vec3{}};
  one.panels.push_back(p);
  one.total_measure = p.measure;
  one.panel_size = p.measure;
  const auto rx = custom_receivers({{30, 40, 0}}, {1.0}, 2);
  const double r = 50.0;
  for (int steps : {200, 400}) {
    const TimeGrid grid(10.0, steps);
    DensityHistory g(grid, 1);
    for (int k = 0; k <= steps; ++k) g.at(k, 0) = std::sin(grid.time(k));
    const auto u = evaluate_scattered(one, g, rx, grid, Medium(kC));
    double err = 0.0;
    for (int k = 0; k <= steps; ++k) {
      const double t = grid.time(k);
      const double exact = t < r / kC ? 0.0 : p.measure * std::sin(t - r / kC) / (4 * kPi * r);
      err = std::max(err, std::abs(u.at(0, k) - exact));
    }
    // Linear interpolation at fraction f errs by f (1 - f) dt^2 |g''| / 2 <= dt^2 / 8.
    const double f = r / kC / grid.dt() - std::floor(r / kC / grid.dt());
    const double bound = 0.5 * f * (1 - f) * grid.dt() * grid.dt() * p.measure / (4 * kPi * r);
    CHECK(err <= 1.01 * bound + 1e-17);
    CHECK(err >= 0.5 * bound);
  }
}

TEST_CASE("scattered field respects finite propagation speed") {
  const Scene2d s;
  const auto inc = incident_on_mesh(s.traj, s.sig, Medium(kC), s.mesh, s.grid);
  const auto g = march_density(s.mesh, inc, Medium(kC));
  const auto u = evaluate_scattered(s.mesh, g, s.receivers, s.grid, Medium(kC));
  // The emitter circle of radius 60 stays 50 away from the obstacle.
  const double src = 50.0;
  for (std::size_t i = 0; i < s.receivers.size(); ++i) {
    double rx = 1e300;
    for (const auto& p : s.mesh.panels) rx = std::min(rx, distance(p.centroid, s.receivers.points[i]));
    for (int k = 0; k <= s.grid.steps(); ++k) {
      // Linear interpolation in time can lead the first arrival by one step.
      if (s.grid.time(k) < (src + rx) / kC - s.grid.dt()) REQUIRE(u.at(i, k) == 0.0);
    }
  }
  CHECK(u.max_abs() > 0.0);
}

TEST_CASE("receivers touching the mesh are rejected") {
  const Scene2d s;
  DensityHistory g(s.grid, s.mesh.size());
  const auto rx = custom_receivers({s.mesh.panels[3].centroid}, {1.0}, 2);
  CHECK_THROWS_AS(evaluate_scattered(s.mesh, g, rx, s.grid, Medium(kC)), GeometryError);
}

TEST_CASE("forward map is linear in the incident field") {
  const Scene2d s;
  const auto inc = incident_on_mesh(s.traj, s.sig, Medium(kC), s.mesh, s.grid);
  const auto u = evaluate_scattered(s.mesh, march_density(s.mesh, inc, Medium(kC)), s.receivers,
                                    s.grid, Medium(kC));
  for (double alpha : {2.0, -1.0}) {
    const auto ua = evaluate_scattered(s.mesh, march_density(s.mesh, scaled(inc, alpha), Medium(kC)),
                                       s.receivers, s.grid, Medium(kC));
    double err = 0.0;
    for (std::size_t n = 0; n < u.values.size(); ++n) {
      err = std::max(err, std::abs(ua.values[n] - alpha * u.values[n]));
    }
    CHECK(err <= 1e-10 * u.max_abs());
  }
}

TEST_CASE("delaying the signal delays the record") {
  const Scene2d s;
  const auto traj = Trajectory::stationary({60, 0, 0}, 2);
  const int m = 40;
  const double dt = s.grid.dt();
  const auto a = Signal::gaussian(0.3, 0.03);
  const auto b = Signal::gaussian(0.3 + m * dt, 0.03);
  auto run = [&](const Signal& sig) {
    const auto inc = incident_on_mesh(traj, sig, Medium(kC), s.mesh, s.grid);
    return evaluate_scattered(s.mesh, march_density(s.mesh, inc, Medium(kC)), s.receivers, s.grid,
                              Medium(kC));
  };
  const auto ua = run(a);
  const auto ub = run(b);
  double err = 0.0;
  for (std::size_t i = 0; i < ua.receiver_count(); ++i) {
    for (int k = m; k <= s.grid.steps(); ++k) err = std::max(err, std::abs(ub.at(i, k) - ua.at(i, k - m)));
  }
  CHECK(err <= 1e-9 * ua.max_abs());
}

TEST_CASE("small sphere density collapses onto one time profile") {
  const auto traj = Trajectory::spiral(60.0, 5, 42.0);
  const auto sig = Signal::lambda_n(1, 14.0);
  const TimeGrid grid(14.0, 2560);
  const auto mesh = build_boundary_mesh({ShapeKind::sphere, {8, -16, 4}, 0.01}, 2);
  const auto inc = incident_on_mesh(traj, sig, Medium(kC), mesh, grid);
  const auto g = march_density(mesh, inc, Medium(kC));
  double spread = 0.0;
  double peak = 0.0;
  for (int k = 0; k <= grid.steps(); ++k) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t j = 0; j < mesh.size(); ++j) {
      lo = std::min(lo, g.at(k, j));
      hi = std::max(hi, g.at(k, j));
      peak = std::max(peak, std::abs(g.at(k, j)));
    }
    spread = std::max(spread, hi - lo);
  }
  REQUIRE(peak > 0.0);
  CHECK(spread / peak < 0.05);
}

TEST_CASE("approximate model without motion ignores the Doppler switch") {
  const auto traj = Trajectory::stationary({0, 60, 0}, 2);
  const auto sig = Signal::lambda_n(1, 14.0);
  const TimeGrid grid(14.0, 512);
  const auto mesh = build_boundary_mesh({ShapeKind::circle, {5, 5, 0}, 0.05}, 16);
  const auto rx = make_receivers({ReceiverLayout::circle, 72.0, 8});
  const auto a = approx_scattered(mesh, traj, sig, Medium(kC), rx, grid, true);
  const auto b = approx_scattered(mesh, traj, sig, Medium(kC), rx, grid, false);
  CHECK(a.values == b.values);
  CHECK(a.max_abs() > 0.0);
}

TEST_CASE("approximate model matches its closed form and superposes") {
  const auto traj = Trajectory::circle(60.0, 3 * kOmega0);
  const auto sig = Signal::lambda_n(1, 14.0);
  const TimeGrid grid(14.0, 256);
  const auto mesh = build_boundary_mesh({ShapeKind::circle, {-24, -24, 0}, 0.05}, 16);
  const auto rx = make_receivers({ReceiverLayout::circle, 72.0, 6});
  for (auto which : {ApproxConstant::nearest_panel, ApproxConstant::capacitance}) {
    ApproxInfo info;
    const auto u = approx_scattered(mesh, traj, sig, Medium(kC), rx, grid, true, &info, which);
    REQUIRE(info.obstacles.size() == 1);
    const auto& ob = info.obstacles[0];
    CHECK(ob.constant == doctest::Approx(ob.area / ob.self));
    CHECK(ob.area == doctest::Approx(mesh.total_measure));
    const Vec3 y0 = mesh.center;
    for (std::size_t i = 0; i < rx.size(); ++i) {
      for (int k = 0; k <= grid.steps(); k += 13) {
        const double tt = grid.time(k) - distance(rx.points[i], y0) / kC;
        double expected = 0.0;
        if (tt >= 0.0) {
          const double tau = oracle::retarded_time(traj, kC, y0, tt, 60.0);
          const Vec3 d = y0 - traj.position(tau);
          const double r = norm(d);
          const double dop = 1.0 - dot(traj.velocity(tau), d) / (kC * r);
          expected = -ob.constant * sig(tau) /
                     (16 * kPi * kPi * distance(rx.points[i], y0) * r * dop);
        }
        CHECK(u.at(i, k) == doctest::Approx(expected).epsilon(1e-9).scale(1e-12 * u.max_abs()));
      }
    }
    const std::vector<BoundaryMesh> twice{mesh, mesh};
    const auto u2 = approx_scattered(twice, traj, sig, Medium(kC), rx, grid, true, nullptr, which);
    for (std::size_t n = 0; n < u.values.size(); ++n) CHECK(u2.values[n] == 2.0 * u.values[n]);
  }
}

TEST_CASE("noise injection") {
  WaveRecord rec(RecordKind::scattered, make_receivers({ReceiverLayout::circle, 72.0, 5}),
                 TimeGrid(1.0, 50), kC);
  for (std::size_t n = 0; n < rec.values.size(); ++n) rec.values[n] = std::sin(0.37 * n) - 0.2;

  SUBCASE("zero level is the identity") {
    const auto out = add_noise(rec, {0.0, 9});
    CHECK(out.kind == RecordKind::noisy_scattered);
    CHECK(out.values == rec.values);
  }
  SUBCASE("entrywise bound and determinism") {
    for (double sigma : {0.05, 0.2, 1.0}) {
      const auto a = add_noise(rec, {sigma, 42});
      const auto b = add_noise(rec, {sigma, 42});
      CHECK(a.values == b.values);
      CHECK(a.seed == 42);
      CHECK(a.sigma == sigma);
      for (std::size_t n = 0; n < rec.values.size(); ++n) {
        REQUIRE(std::abs(a.values[n] - rec.values[n]) <= sigma * std::abs(rec.values[n]));
      }
    }
    CHECK(add_noise(rec, {0.05, 1}).values != add_noise(rec, {0.05, 2}).values);
  }
  SUBCASE("draws follow mt19937_64 in receiver-major order") {
    std::mt19937_64 gen(5);
    const auto out = add_noise(rec, {0.1, 5});
    for (std::size_t n = 0; n < rec.values.size(); ++n) {
      const double r = 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
      // Compiled code may fuse 1 + sigma r into one rounding.
      REQUIRE(std::abs(out.values[n] - (1.0 + 0.1 * r) * rec.values[n]) <= 4e-16 * std::abs(rec.values[n]));
    }
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(add_noise(rec, {-0.1, 1}), ConfigError);
    WaveRecord inc = rec;
    inc.kind = RecordKind::incident;
    CHECK_THROWS_AS(add_noise(inc, {0.1, 1}), ConfigError);
  }
}

TEST_CASE("record CSV round trip") {
  WaveRecord rec(RecordKind::noisy_scattered, make_receivers({ReceiverLayout::sphere, 72.0, 3}),
                 TimeGrid(2.0, 7), kC);
  rec.sigma = 0.05;
  rec.seed = 77;
  for (std::size_t n = 0; n < rec.values.size(); ++n) rec.values[n] = std::exp(-0.3 * n) * (n % 2 ? -1 : 1) / 3.0;
  std::stringstream ss;
  write_record_csv(rec, ss, "abc");
  const std::string text = ss.str();
  CHECK(text.rfind("# mowave-record v1, kind=noisy_scattered, c=340, Nt=7, dt=", 0) == 0);
  CHECK(text.find("Nm=3, sigma=0.050000000000000003, seed=77, config=abc") != std::string::npos);
  const auto back = read_record_csv(ss);
  CHECK(back.kind == rec.kind);
  CHECK(back.values == rec.values);
  CHECK(back.grid == rec.grid);
  CHECK(back.sigma == rec.sigma);
  CHECK(back.seed == rec.seed);
  REQUIRE(back.receivers.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back.receivers.points[i] == rec.receivers.points[i]);
  std::stringstream bad("# something else\n");
  CHECK_THROWS_AS(read_record_csv(bad), IoError);
}
