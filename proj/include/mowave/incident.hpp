#pragma once

#include <vector>

#include <mowave/record.hpp>
#include <mowave/scene.hpp>
#include <mowave/vec3.hpp>

namespace mowave {

inline constexpr int kRetardedMaxIterations = 200;

/// Convergence target for the retarded-time equation at observation time t.
inline double retarded_tolerance(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

/// Observation points closer than this to the emitter are singular.
inline constexpr double kSingularDistance = 1e-9;

struct RetardedSolve {
  Vec3 x;
  double t = 0.0;
  double tau = 0.0;
  double residual = 0.0;  ///< t - tau - |x - s(tau)| / c
  int iterations = 0;
  bool bisection = false;
};

/// Solve t = tau + |x - s(tau)| / c by fixed-point iteration from tau = t,
/// with a bisection pass if the iteration has not converged after
/// kRetardedMaxIterations steps. When `trace` is given, the residual of
/// every fixed-point iterate is appended to it.
RetardedSolve solve_retarded_time(const Trajectory& traj, const Medium& medium, const Vec3& x,
                                  double t, std::vector<double>* trace = nullptr);

/// Emission time with the emitter position and velocity at that time.
struct EmissionState {
  double tau = 0.0;
  Vec3 position;
  Vec3 velocity;
};

/// Newton iteration for the same equation from a caller-supplied guess,
/// stopping at the first iterate within retarded_tolerance(t). Used by
/// sweeps over increasing t where the previous root is an excellent start.
/// Falls back to solve_retarded_time when Newton stalls. The subsonic check
/// is the caller's responsibility.
EmissionState solve_retarded_time_newton(const Trajectory& traj, double sound_speed,
                                         const Vec3& x, double t, double guess);

/// Field of the moving point source at (x, t).
double incident_field(const Trajectory& traj, const Signal& sig, const Medium& medium,
                      const Vec3& x, double t);

/// Incident field at every panel centroid and grid time. The record's
/// receivers are the panel centroids with panel measures as weights.
WaveRecord incident_on_mesh(const Trajectory& traj, const Signal& sig, const Medium& medium,
                            const BoundaryMesh& mesh, const TimeGrid& grid);

/// Throws SubsonicError unless the trajectory's speed bound is below c.
void require_subsonic(const Trajectory& traj, const Medium& medium);

}  // namespace mowave
