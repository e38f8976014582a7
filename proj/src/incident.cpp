#include <mowave/incident.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <mowave/errors.hpp>
#include <mowave/parallel.hpp>

namespace mowave {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

double residual_at(const Trajectory& traj, double c, const Vec3& x, double t, double tau) {
  return t - tau - distance(x, traj.position(tau)) / c;
}

/// Bisection on f(tau) = t - tau - |x - s(tau)|/c, which is strictly
/// decreasing for a subsonic emitter. The lower end is widened until f >= 0.
double bisect(const Trajectory& traj, double c, const Vec3& x, double t, double tol) {
  double hi = t;
  double span = std::max(distance(x, traj.position(t)) / c, tol);
  double lo = t - span;
  for (int grow = 0; residual_at(traj, c, x, t, lo) < 0.0; ++grow) {
    if (grow > 200) throw SolverError("retarded time: no bracket found", span);
    span *= 2.0;
    lo = t - span;
  }
  for (int it = 0; it < 400 && hi - lo > 0.25 * tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (residual_at(traj, c, x, t, mid) >= 0.0 ? lo : hi) = mid;
  }
  const double rl = residual_at(traj, c, x, t, lo);
  const double rh = residual_at(traj, c, x, t, hi);
  return std::abs(rl) <= std::abs(rh) ? lo : hi;
}

}  // namespace

void require_subsonic(const Trajectory& traj, const Medium& medium) {
  if (!(traj.speed_bound() < medium.sound_speed())) {
    throw SubsonicError("emitter speed " + std::to_string(traj.speed_bound()) +
                        " is not below the sound speed " +
                        std::to_string(medium.sound_speed()));
  }
}

RetardedSolve solve_retarded_time(const Trajectory& traj, const Medium& medium, const Vec3& x,
                                  double t, std::vector<double>* trace) {
  require_subsonic(traj, medium);
  const double c = medium.sound_speed();
  const double tol = retarded_tolerance(t);

  RetardedSolve out{x, t, t, 0.0, 0, false};
  double tau = t;
  double r = residual_at(traj, c, x, t, tau);
  if (trace) trace->push_back(r);
  int m = 0;
  while (std::abs(r) >= tol && m < kRetardedMaxIterations) {
    tau += r;
    r = residual_at(traj, c, x, t, tau);
    if (trace) trace->push_back(r);
    ++m;
  }
  if (std::abs(r) < tol) {
    // Polish while the iteration still gains accuracy, stopping at rounding
    // level so that an exact first iterate (a resting source) is kept.
    const double noise = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    while (std::abs(r) > noise && m < kRetardedMaxIterations) {
      const double next_tau = tau + r;
      const double next_r = residual_at(traj, c, x, t, next_tau);
      if (!(std::abs(next_r) < std::abs(r))) break;
      tau = next_tau;
      r = next_r;
      if (trace) trace->push_back(r);
      ++m;
    }
  } else {
    tau = bisect(traj, c, x, t, tol);
    r = residual_at(traj, c, x, t, tau);
    out.bisection = true;
    if (!(std::abs(r) < tol)) {
      throw SolverError("retarded time did not converge at t = " + std::to_string(t), r);
    }
  }
  out.tau = tau;
  out.residual = r;
  out.iterations = m;
  return out;
}

EmissionState solve_retarded_time_newton(const Trajectory& traj, double c, const Vec3& x,
                                         double t, double guess) {
  const double tol = retarded_tolerance(t);
  EmissionState st;
  st.tau = std::min(guess, t);
  for (int it = 0; it < 12; ++it) {
    traj.state(st.tau, st.position, st.velocity);
    const Vec3 d = x - st.position;
    const double r = norm(d);
    const double g = t - st.tau - r / c;
    if (std::abs(g) < tol) return st;
    const double slope = 1.0 - (r > 0.0 ? dot(st.velocity, d) / (c * r) : 0.0);
    if (!(slope > 0.0)) break;
    st.tau += g / slope;
    if (!std::isfinite(st.tau)) break;
  }
  st.tau = solve_retarded_time(traj, Medium(c), x, t).tau;
  traj.state(st.tau, st.position, st.velocity);
  return st;
}

double incident_field(const Trajectory& traj, const Signal& sig, const Medium& medium,
                      const Vec3& x, double t) {
  require_subsonic(traj, medium);
  if (sig.is_zero()) return 0.0;
  // tau <= t, so a causal signal vanishes before the emission clock starts.
  if (sig.causal() && t < 0.0) return 0.0;
  const double c = medium.sound_speed();
  const double tau = solve_retarded_time(traj, medium, x, t).tau;
  const Vec3 s = traj.position(tau);
  const Vec3 d = x - s;
  const double r = norm(d);
  if (r < kSingularDistance) {
    throw GeometryError("observation point lies on the emitter path at the retarded time");
  }
  const double doppler = 1.0 - dot(traj.velocity(tau), d) / (c * r);
  return sig(tau) / (kFourPi * r * doppler);
}

WaveRecord incident_on_mesh(const Trajectory& traj, const Signal& sig, const Medium& medium,
                            const BoundaryMesh& mesh, const TimeGrid& grid) {
  require_subsonic(traj, medium);
  std::vector<Vec3> centroids;
  std::vector<double> measures;
  centroids.reserve(mesh.size());
  measures.reserve(mesh.size());
  for (const Panel& p : mesh.panels) {
    centroids.push_back(p.centroid);
    measures.push_back(p.measure);
  }

  double closest = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= grid.steps(); ++k) {
    const Vec3 s = traj.position(grid.time(k));
    for (const Vec3& y : centroids) closest = std::min(closest, distance(s, y));
  }
  if (!(closest > mesh.panel_size)) {
    throw GeometryError("emitter path comes within " + std::to_string(closest) +
                        " of the scatterer (panel size " + std::to_string(mesh.panel_size) +
                        ")");
  }

  WaveRecord rec(RecordKind::incident,
                 custom_receivers(std::move(centroids), std::move(measures), mesh.dimension),
                 grid, medium.sound_speed());
  if (sig.is_zero()) return rec;
  parallel_for(mesh.size(), [&](std::size_t j) {
    const Vec3 y = rec.receivers.points[j];
    auto row = rec.series(j);
    for (int k = 0; k <= grid.steps(); ++k) row[k] = incident_field(traj, sig, medium, y, grid.time(k));
  });
  return rec;
}

}  // namespace mowave
