#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <mowave/scene.hpp>

/// Independent reference implementations used by the tests.
namespace oracle {

/// Relative closeness that also accepts two zeros and subnormal noise.
inline bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + 1e-300;
}

/// Root of f(tau) = t - tau - |x - s(tau)|/c on [t - (|s|max + |x|)/c, t] by bisection.
inline double retarded_time(const mowave::Trajectory& traj, double c, const mowave::Vec3& x,
                            double t, double reach) {
  double lo = t - (reach + mowave::norm(x)) / c - 1.0;
  double hi = t;
  auto f = [&](double tau) { return t - tau - mowave::norm(x - traj.position(tau)) / c; };
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Moving point-source field evaluated directly from its closed form.
inline double moving_source_field(const mowave::Trajectory& traj, const mowave::Signal& sig,
                                  double c, const mowave::Vec3& x, double t, double reach) {
  const double tau = retarded_time(traj, c, x, t, reach);
  const mowave::Vec3 d = x - traj.position(tau);
  const double r = mowave::norm(d);
  const double doppler = 1.0 - mowave::dot(traj.velocity(tau), d) / (c * r);
  return sig(tau) / (4.0 * std::numbers::pi * r * doppler);
}

}  // namespace oracle
