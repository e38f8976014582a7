#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include <mowave/vec3.hpp>

namespace mowave {

/// Homogeneous background medium.
class Medium {
 public:
  explicit Medium(double sound_speed);

  double sound_speed() const { return c_; }

 private:
  double c_;
};

/// Uniform time grid t_k = k * dt, k = 0..steps, dt = total_time / steps.
class TimeGrid {
 public:
  TimeGrid(double total_time, int steps);

  double total_time() const { return total_time_; }
  int steps() const { return steps_; }
  int samples() const { return steps_ + 1; }
  double dt() const { return dt_; }
  double time(int k) const { return k * dt_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  double total_time_;
  int steps_;
  double dt_;
};

// ---------------------------------------------------------------------------
// Emitter trajectories
// ---------------------------------------------------------------------------

struct StationaryPath {
  Vec3 point;
};

/// s(t) = R (cos(w t + phase), sin(w t + phase)).
struct CirclePath {
  double radius;
  double angular_speed;
  double phase = 0.0;
};

/// Spherical spiral with alpha = arccos(1 - 2p), beta = 2 n pi p, p = t / total_time.
/// Outside [0, total_time] the emitter rests at the nearest end point.
struct SpiralPath {
  double radius;
  int turns;
  double total_time;
};

/// Piecewise-linear path through sampled points. Velocity is a central
/// difference with step `fd_step`.
struct PolylinePath {
  std::vector<double> times;
  std::vector<Vec3> points;
  double fd_step;
};

class Trajectory {
 public:
  using Kind = std::variant<StationaryPath, CirclePath, SpiralPath, PolylinePath>;

  static Trajectory stationary(Vec3 point, int dimension);
  static Trajectory circle(double radius, double angular_speed, double phase = 0.0);
  static Trajectory spiral(double radius, int turns, double total_time);
  static Trajectory polyline(std::vector<double> times, std::vector<Vec3> points, double fd_step,
                             int dimension);

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  /// Position and velocity together, sharing the trigonometric work.
  void state(double t, Vec3& position, Vec3& velocity) const;

  int dimension() const { return dim_; }
  const Kind& kind() const { return kind_; }

  /// Bound on |v| used by the retarded-time solver. Exact for analytic kinds
  /// with constant speed; for the spiral it is the largest speed over 4096
  /// interior samples (the pole end points carry a removable-in-practice
  /// velocity singularity).
  double speed_bound() const { return speed_bound_; }

  /// Largest |v(t_k)| over the interior samples k = 1..steps-1 of `grid`
  /// (all samples when the grid has fewer than three).
  double max_sampled_speed(const TimeGrid& grid) const;

 private:
  Trajectory(Kind kind, int dim);

  Kind kind_;
  int dim_;
  double speed_bound_ = 0.0;
};

Vec3 trajectory_position(const Trajectory& traj, double t);
Vec3 trajectory_velocity(const Trajectory& traj, double t);

// ---------------------------------------------------------------------------
// Signal functions
// ---------------------------------------------------------------------------

/// Periodic pulse with period T/N; on [0, T/N) it is
/// sin(10 N t) exp(-15 N^2 (t - T/(3N))^2).
struct LambdaN {
  int periods;
  double base_period;
};

/// exp(-(t - center)^2 / (2 width^2)); truncated to zero for t < 0 when causal.
struct GaussianPulse {
  double center;
  double width;
  bool causal = true;
};

struct ZeroSignal {};

class Signal {
 public:
  using Kind = std::variant<LambdaN, GaussianPulse, ZeroSignal>;

  static Signal lambda_n(int periods, double base_period);
  static Signal gaussian(double center, double width, bool causal = true);
  static Signal zero();

  double operator()(double t) const;

  bool is_zero() const { return std::holds_alternative<ZeroSignal>(kind_); }
  bool causal() const;
  /// Period of a periodic signal on t >= 0, zero otherwise.
  double period() const { return period_; }
  const Kind& kind() const { return kind_; }

 private:
  explicit Signal(Kind kind);

  Kind kind_;
  // Cached LambdaN constants.
  double period_ = 0.0;
  double omega_ = 0.0;
  double decay_ = 0.0;
  double peak_ = 0.0;
};

double signal_eval(const Signal& sig, double t);

// ---------------------------------------------------------------------------
// Scatterer geometry
// ---------------------------------------------------------------------------

enum class ShapeKind { circle, acorn, square, kite, sphere, cube };

/// Scatterer description. `scale` is R_b, R_a, R_q, R_k, the sphere radius
/// or the cube half-width.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::circle;
  Vec3 center;
  double scale = 1.0;

  int dimension() const { return kind == ShapeKind::sphere || kind == ShapeKind::cube ? 3 : 2; }
  bool operator==(const ShapeSpec&) const = default;
};

/// Point on a planar boundary parameterization at angle theta.
Vec3 curve_point(const ShapeSpec& shape, double theta);

struct Panel {
  Vec3 centroid;
  double measure = 0.0;  ///< arc length (2-D) or area (3-D)
  Vec3 normal;           ///< outward unit normal
  std::array<Vec3, 3> vertices{};  ///< segments use the first two
  int component = 0;
};

struct BoundaryMesh {
  int dimension = 2;
  std::vector<Panel> panels;
  Vec3 center;               ///< measure-weighted mean of panel centroids
  double diameter = 0.0;     ///< max pairwise centroid distance
  double total_measure = 0.0;
  double panel_size = 0.0;   ///< longest panel edge
  int component_count = 1;

  std::size_t size() const { return panels.size(); }
};

/// Discretize a shape. `resolution` is the segment count for planar curves,
/// the icosahedron subdivision level for spheres and the per-edge square
/// count for cubes (two triangles per square).
BoundaryMesh build_boundary_mesh(const ShapeSpec& shape, int resolution);

/// Merge disconnected obstacles into one mesh, tagging panel components.
BoundaryMesh combine_meshes(std::span<const BoundaryMesh> parts);

// ---------------------------------------------------------------------------
// Receivers
// ---------------------------------------------------------------------------

enum class ReceiverLayout { circle, sphere, arc, custom };

struct ReceiverSpec {
  ReceiverLayout layout = ReceiverLayout::circle;
  double radius = 72.0;
  int count = 64;
  double span = 2.0 * std::numbers::pi;  ///< arc only
  double start_angle = 0.0;              ///< arc only

  bool operator==(const ReceiverSpec&) const = default;
};

struct MeasurementArray {
  ReceiverLayout layout = ReceiverLayout::custom;
  int dimension = 2;
  double radius = 0.0;
  double span = 0.0;
  double start_angle = 0.0;
  std::vector<Vec3> points;
  std::vector<double> weights;  ///< control measures

  std::size_t size() const { return points.size(); }
};

MeasurementArray make_receivers(const ReceiverSpec& spec);

/// Receivers at arbitrary points with explicit control measures.
MeasurementArray custom_receivers(std::vector<Vec3> points, std::vector<double> weights,
                                  int dimension);

/// Quadrature of the surface integral of 1/|x - z| over a spherical array.
double surface_inverse_distance_integral(const MeasurementArray& arr, const Vec3& z);

// ---------------------------------------------------------------------------
// Sampling grid
// ---------------------------------------------------------------------------

/// Tensor grid of sampling points, end points included on every axis.
/// Linear index is row-major: the last axis varies fastest.
class SamplingGrid {
 public:
  SamplingGrid(int dimension, std::array<double, 3> lo, std::array<double, 3> hi,
               std::array<int, 3> counts);

  int dimension() const { return dim_; }
  std::size_t size() const { return size_; }
  const std::array<double, 3>& lo() const { return lo_; }
  const std::array<double, 3>& hi() const { return hi_; }
  const std::array<int, 3>& counts() const { return counts_; }

  double coordinate(int axis, int index) const;
  double spacing(int axis) const;
  std::array<int, 3> index(std::size_t linear) const;
  std::size_t linear(const std::array<int, 3>& idx) const;
  Vec3 point(std::size_t linear) const;

  bool operator==(const SamplingGrid&) const = default;

 private:
  int dim_;
  std::array<double, 3> lo_;
  std::array<double, 3> hi_;
  std::array<int, 3> counts_;
  std::size_t size_;
};

}  // namespace mowave
