#include <mowave/scene.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include <mowave/errors.hpp>

namespace mowave {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

Medium::Medium(double sound_speed) : c_(sound_speed) {
  if (!(sound_speed > 0.0) || !std::isfinite(sound_speed)) {
    throw ConfigError("sound speed must be positive", "sound_speed");
  }
}

TimeGrid::TimeGrid(double total_time, int steps)
    : total_time_(total_time), steps_(steps), dt_(total_time / steps) {
  if (!(total_time > 0.0) || !std::isfinite(total_time)) {
    throw ConfigError("terminal time must be positive", "total_time");
  }
  if (steps < 1) throw ConfigError("step count must be at least 1", "steps");
}

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

Trajectory::Trajectory(Kind kind, int dim) : kind_(std::move(kind)), dim_(dim) {
  speed_bound_ = std::visit(
      Overloaded{
          [](const StationaryPath&) { return 0.0; },
          [](const CirclePath& c) { return std::abs(c.angular_speed) * c.radius; },
          [this](const SpiralPath& s) {
            constexpr int kSamples = 4096;
            double vmax = 0.0;
            for (int k = 1; k < kSamples; ++k) {
              vmax = std::max(vmax, norm(velocity(s.total_time * k / kSamples)));
            }
            return vmax;
          },
          [](const PolylinePath& p) {
            double vmax = 0.0;
            for (std::size_t k = 0; k + 1 < p.times.size(); ++k) {
              vmax = std::max(vmax, distance(p.points[k + 1], p.points[k]) /
                                        (p.times[k + 1] - p.times[k]));
            }
            return vmax;
          },
      },
      kind_);
}

Trajectory Trajectory::stationary(Vec3 point, int dimension) {
  if (dimension != 2 && dimension != 3) throw ConfigError("dimension must be 2 or 3", "dimension");
  return Trajectory(StationaryPath{point}, dimension);
}

Trajectory Trajectory::circle(double radius, double angular_speed, double phase) {
  if (!(radius > 0.0)) throw ConfigError("circle radius must be positive", "trajectory.radius");
  return Trajectory(CirclePath{radius, angular_speed, phase}, 2);
}

Trajectory Trajectory::spiral(double radius, int turns, double total_time) {
  if (!(radius > 0.0)) throw ConfigError("spiral radius must be positive", "trajectory.radius");
  if (!(total_time > 0.0)) {
    throw ConfigError("spiral duration must be positive", "trajectory.total_time");
  }
  return Trajectory(SpiralPath{radius, turns, total_time}, 3);
}

Trajectory Trajectory::polyline(std::vector<double> times, std::vector<Vec3> points,
                                double fd_step, int dimension) {
  if (times.size() < 2 || times.size() != points.size()) {
    throw ConfigError("polyline needs matching times and points (at least two)",
                      "trajectory.times");
  }
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    if (!(times[k + 1] > times[k])) {
      throw ConfigError("polyline times must be strictly increasing", "trajectory.times");
    }
  }
  if (!(fd_step > 0.0)) throw ConfigError("finite-difference step must be positive", "fd_step");
  if (dimension != 2 && dimension != 3) throw ConfigError("dimension must be 2 or 3", "dimension");
  return Trajectory(PolylinePath{std::move(times), std::move(points), fd_step}, dimension);
}

namespace {

Vec3 polyline_position(const PolylinePath& p, double t) {
  const double t0 = p.times.front();
  const double t1 = p.times.back();
  if (t < t0 || t > t1 || std::isnan(t)) {
    throw DomainError("time " + std::to_string(t) + " outside polyline domain [" +
                      std::to_string(t0) + ", " + std::to_string(t1) + "]");
  }
  auto it = std::upper_bound(p.times.begin(), p.times.end(), t);
  std::size_t k = it == p.times.end() ? p.times.size() - 2
                                      : static_cast<std::size_t>(it - p.times.begin()) - 1;
  const double w = (t - p.times[k]) / (p.times[k + 1] - p.times[k]);
  return p.points[k] * (1.0 - w) + p.points[k + 1] * w;
}

}  // namespace

Vec3 Trajectory::position(double t) const {
  return std::visit(
      Overloaded{
          [](const StationaryPath& s) { return s.point; },
          [t](const CirclePath& c) {
            const double a = c.angular_speed * t + c.phase;
            return Vec3{c.radius * std::cos(a), c.radius * std::sin(a), 0.0};
          },
          [t](const SpiralPath& s) {
            const double p = std::clamp(t / s.total_time, 0.0, 1.0);
            const double cos_a = 1.0 - 2.0 * p;
            const double sin_a = 2.0 * std::sqrt(p * (1.0 - p));
            const double beta = 2.0 * s.turns * kPi * p;
            return Vec3{s.radius * sin_a * std::cos(beta), s.radius * sin_a * std::sin(beta),
                        s.radius * cos_a};
          },
          [t](const PolylinePath& p) { return polyline_position(p, t); },
      },
      kind_);
}

Vec3 Trajectory::velocity(double t) const {
  return std::visit(
      Overloaded{
          [](const StationaryPath&) { return Vec3{}; },
          [t](const CirclePath& c) {
            const double a = c.angular_speed * t + c.phase;
            const double s = c.radius * c.angular_speed;
            return Vec3{-s * std::sin(a), s * std::cos(a), 0.0};
          },
          [t](const SpiralPath& s) {
            const double p = t / s.total_time;
            // At rest outside the sweep; the derivative of sin(alpha) is
            // unbounded at the poles, so the end points take the resting value.
            if (!(p > 0.0 && p < 1.0)) return Vec3{};
            const double T = s.total_time;
            const double root = std::sqrt(p * (1.0 - p));
            const double sin_a = 2.0 * root;
            const double dsin_a = (1.0 - 2.0 * p) / (root * T);
            const double beta = 2.0 * s.turns * kPi * p;
            const double dbeta = 2.0 * s.turns * kPi / T;
            const double cb = std::cos(beta);
            const double sb = std::sin(beta);
            return Vec3{s.radius * (dsin_a * cb - sin_a * sb * dbeta),
                        s.radius * (dsin_a * sb + sin_a * cb * dbeta), -2.0 * s.radius / T};
          },
          [t](const PolylinePath& p) {
            const double tl = std::max(t - p.fd_step, p.times.front());
            const double tr = std::min(t + p.fd_step, p.times.back());
            if (t < p.times.front() || t > p.times.back() || std::isnan(t)) {
              throw DomainError("time " + std::to_string(t) + " outside polyline domain");
            }
            return (polyline_position(p, tr) - polyline_position(p, tl)) / (tr - tl);
          },
      },
      kind_);
}

void Trajectory::state(double t, Vec3& pos, Vec3& vel) const {
  if (const auto* c = std::get_if<CirclePath>(&kind_)) {
    const double a = c->angular_speed * t + c->phase;
    const double ca = std::cos(a);
    const double sa = std::sin(a);
    const double s = c->radius * c->angular_speed;
    pos = Vec3{c->radius * ca, c->radius * sa, 0.0};
    vel = Vec3{-s * sa, s * ca, 0.0};
    return;
  }
  pos = position(t);
  vel = velocity(t);
}

double Trajectory::max_sampled_speed(const TimeGrid& grid) const {
  int first = 1;
  int last = grid.steps() - 1;
  if (last < first) {
    first = 0;
    last = grid.steps();
  }
  double vmax = 0.0;
  for (int k = first; k <= last; ++k) vmax = std::max(vmax, norm(velocity(grid.time(k))));
  return vmax;
}

Vec3 trajectory_position(const Trajectory& traj, double t) { return traj.position(t); }
Vec3 trajectory_velocity(const Trajectory& traj, double t) { return traj.velocity(t); }

// ---------------------------------------------------------------------------
// Signal
// ---------------------------------------------------------------------------

Signal::Signal(Kind kind) : kind_(std::move(kind)) {
  if (const auto* l = std::get_if<LambdaN>(&kind_)) {
    const double n = l->periods;
    period_ = l->base_period / n;
    omega_ = 10.0 * n;
    decay_ = 15.0 * n * n;
    peak_ = l->base_period / (3.0 * n);
  }
}

Signal Signal::lambda_n(int periods, double base_period) {
  if (periods < 1) throw ConfigError("period count must be positive", "signal.periods");
  if (!(base_period > 0.0)) throw ConfigError("base period must be positive", "signal.base_period");
  return Signal(LambdaN{periods, base_period});
}

Signal Signal::gaussian(double center, double width, bool causal) {
  if (!(width > 0.0)) throw ConfigError("pulse width must be positive", "signal.width");
  return Signal(GaussianPulse{center, width, causal});
}

Signal Signal::zero() { return Signal(ZeroSignal{}); }

bool Signal::causal() const {
  if (const auto* g = std::get_if<GaussianPulse>(&kind_)) return g->causal;
  return true;
}

double Signal::operator()(double t) const {
  switch (kind_.index()) {
    case 0: {
      if (t < 0.0) return 0.0;
      const double tf = std::fmod(t, period_);
      const double d = tf - peak_;
      const double envelope = std::exp(-decay_ * d * d);
      return envelope == 0.0 ? 0.0 : std::sin(omega_ * tf) * envelope;
    }
    case 1: {
      const auto& g = std::get<GaussianPulse>(kind_);
      if (g.causal && t < 0.0) return 0.0;
      const double d = (t - g.center) / g.width;
      return std::exp(-0.5 * d * d);
    }
    default:
      return 0.0;
  }
}

double signal_eval(const Signal& sig, double t) { return sig(t); }

// ---------------------------------------------------------------------------
// Shapes and meshes
// ---------------------------------------------------------------------------

Vec3 curve_point(const ShapeSpec& shape, double theta) {
  const double a = shape.center.x;
  const double b = shape.center.y;
  const double r = shape.scale;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  switch (shape.kind) {
    case ShapeKind::circle:
      return {a + r * c, b + r * s, 0.0};
    case ShapeKind::acorn:
      return {a + r * c * std::sqrt(17.0 / 4.0 + 2.0 * std::cos(3.0 * theta)),
              b + r * s * std::sqrt(17.0 / 4.0 + 2.0 * std::sin(3.0 * theta)), 0.0};
    case ShapeKind::square: {
      const double s3 = s * s * s;
      const double c3 = c * c * c;
      return {a + r * (s3 + s + c3 + c), b + r * (s3 + s - c3 - c), 0.0};
    }
    case ShapeKind::kite:
      return {a + r * (c + 0.65 * std::cos(2.0 * theta) - 0.65), b + r * 1.5 * s, 0.0};
    default:
      throw GeometryError("shape has no planar parameterization");
  }
}

namespace {

void finalize_mesh(BoundaryMesh& mesh) {
  double total = 0.0;
  Vec3 weighted{};
  double longest = 0.0;
  for (const auto& p : mesh.panels) {
    if (!(p.measure > 0.0)) throw GeometryError("mesh contains a degenerate panel");
    total += p.measure;
    weighted += p.centroid * p.measure;
    const int nv = mesh.dimension == 2 ? 2 : 3;
    for (int a = 0; a < nv; ++a) {
      const int b = (a + 1) % nv;
      longest = std::max(longest, distance(p.vertices[a], p.vertices[b]));
    }
  }
  mesh.total_measure = total;
  mesh.center = weighted / total;
  mesh.panel_size = longest;
  double diam = 0.0;
  const std::size_t n = mesh.panels.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      diam = std::max(diam, distance(mesh.panels[i].centroid, mesh.panels[j].centroid));
    }
  }
  mesh.diameter = diam;
}

BoundaryMesh curve_mesh(const ShapeSpec& shape, int segments) {
  if (segments < 8) throw DomainError("planar curves need at least 8 segments");
  std::vector<Vec3> pts(segments + 1);
  for (int m = 0; m < segments; ++m) pts[m] = curve_point(shape, 2.0 * kPi * m / segments);
  pts[segments] = pts[0];

  double signed_area = 0.0;
  for (int m = 0; m < segments; ++m) {
    signed_area += pts[m].x * pts[m + 1].y - pts[m + 1].x * pts[m].y;
  }
  const double orient = signed_area >= 0.0 ? 1.0 : -1.0;

  BoundaryMesh mesh;
  mesh.dimension = 2;
  mesh.panels.reserve(segments);
  for (int m = 0; m < segments; ++m) {
    Panel p;
    p.vertices = {pts[m], pts[m + 1], Vec3{}};
    p.centroid = (pts[m] + pts[m + 1]) * 0.5;
    const Vec3 d = pts[m + 1] - pts[m];
    p.measure = norm(d);
    p.normal = Vec3{d.y, -d.x, 0.0} * (orient / p.measure);
    mesh.panels.push_back(p);
  }
  return mesh;
}

void push_triangle(BoundaryMesh& mesh, Vec3 a, Vec3 b, Vec3 c, const Vec3& inside) {
  Vec3 n = cross(b - a, c - a);
  const Vec3 centroid = (a + b + c) / 3.0;
  if (dot(n, centroid - inside) < 0.0) {
    std::swap(b, c);
    n = -n;
  }
  const double twice_area = norm(n);
  Panel p;
  p.vertices = {a, b, c};
  p.centroid = centroid;
  p.measure = 0.5 * twice_area;
  p.normal = n / twice_area;
  mesh.panels.push_back(p);
}

void subdivide(BoundaryMesh& mesh, const Vec3& a, const Vec3& b, const Vec3& c, int level,
               const ShapeSpec& shape) {
  if (level == 0) {
    push_triangle(mesh, shape.center + a * shape.scale, shape.center + b * shape.scale,
                  shape.center + c * shape.scale, shape.center);
    return;
  }
  auto mid = [](const Vec3& u, const Vec3& v) {
    const Vec3 m = (u + v) * 0.5;
    return m / norm(m);
  };
  const Vec3 ab = mid(a, b);
  const Vec3 bc = mid(b, c);
  const Vec3 ca = mid(c, a);
  subdivide(mesh, a, ab, ca, level - 1, shape);
  subdivide(mesh, ab, b, bc, level - 1, shape);
  subdivide(mesh, ca, bc, c, level - 1, shape);
  subdivide(mesh, ab, bc, ca, level - 1, shape);
}

BoundaryMesh sphere_mesh(const ShapeSpec& shape, int level) {
  if (level < 1) throw DomainError("sphere meshes need at least one subdivision level");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                         {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                         {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : v) p = p / norm(p);
  static constexpr int faces[20][3] = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  BoundaryMesh mesh;
  mesh.dimension = 3;
  mesh.panels.reserve(20u << (2 * level));
  for (const auto& f : faces) subdivide(mesh, v[f[0]], v[f[1]], v[f[2]], level, shape);
  return mesh;
}

BoundaryMesh cube_mesh(const ShapeSpec& shape, int n) {
  if (n < 1) throw DomainError("cube meshes need at least one square per edge");
  const double h = shape.scale;
  BoundaryMesh mesh;
  mesh.dimension = 3;
  mesh.panels.reserve(12 * n * n);
  for (int axis = 0; axis < 3; ++axis) {
    const int ua = (axis + 1) % 3;
    const int va = (axis + 2) % 3;
    for (double side : {-1.0, 1.0}) {
      auto corner = [&](int i, int j) {
        double c[3];
        c[axis] = side * h;
        c[ua] = -h + 2.0 * h * i / n;
        c[va] = -h + 2.0 * h * j / n;
        return shape.center + Vec3{c[0], c[1], c[2]};
      };
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const Vec3 p00 = corner(i, j);
          const Vec3 p10 = corner(i + 1, j);
          const Vec3 p11 = corner(i + 1, j + 1);
          const Vec3 p01 = corner(i, j + 1);
          push_triangle(mesh, p00, p10, p11, shape.center);
          push_triangle(mesh, p00, p11, p01, shape.center);
        }
      }
    }
  }
  return mesh;
}

}  // namespace

BoundaryMesh build_boundary_mesh(const ShapeSpec& shape, int resolution) {
  if (!(shape.scale > 0.0) || !std::isfinite(shape.scale)) {
    throw GeometryError("invalid shape: scale must be positive");
  }
  BoundaryMesh mesh;
  switch (shape.kind) {
    case ShapeKind::sphere:
      mesh = sphere_mesh(shape, resolution);
      break;
    case ShapeKind::cube:
      mesh = cube_mesh(shape, resolution);
      break;
    default:
      mesh = curve_mesh(shape, resolution);
      break;
  }
  finalize_mesh(mesh);
  return mesh;
}

BoundaryMesh combine_meshes(std::span<const BoundaryMesh> parts) {
  if (parts.empty()) throw GeometryError("no obstacles to combine");
  BoundaryMesh out;
  out.dimension = parts.front().dimension;
  int component = 0;
  for (const auto& part : parts) {
    if (part.dimension != out.dimension) throw GeometryError("obstacle dimensions differ");
    for (Panel p : part.panels) {
      p.component = component + p.component;
      out.panels.push_back(p);
    }
    component += part.component_count;
  }
  out.component_count = component;
  finalize_mesh(out);
  return out;
}

// ---------------------------------------------------------------------------
// Receivers
// ---------------------------------------------------------------------------

MeasurementArray make_receivers(const ReceiverSpec& spec) {
  if (spec.count < 1) throw ConfigError("receiver count must be at least 1", "receivers.count");
  if (!(spec.radius > 0.0)) throw ConfigError("receiver radius must be positive", "receivers.radius");
  MeasurementArray arr;
  arr.layout = spec.layout;
  arr.radius = spec.radius;
  const int n = spec.count;
  const double R = spec.radius;
  arr.points.reserve(n);
  switch (spec.layout) {
    case ReceiverLayout::circle:
      arr.dimension = 2;
      arr.span = 2.0 * kPi;
      for (int m = 0; m < n; ++m) {
        const double a = 2.0 * kPi * m / n;
        arr.points.push_back({R * std::cos(a), R * std::sin(a), 0.0});
      }
      arr.weights.assign(n, 2.0 * kPi * R / n);
      break;
    case ReceiverLayout::arc: {
      if (!(spec.span > 0.0) || spec.span > 2.0 * kPi + 1e-12) {
        throw ConfigError("arc span must lie in (0, 2 pi]", "receivers.span");
      }
      arr.dimension = 2;
      arr.span = spec.span;
      arr.start_angle = spec.start_angle;
      for (int m = 0; m < n; ++m) {
        const double a = spec.start_angle + (m + 0.5) * spec.span / n;
        arr.points.push_back({R * std::cos(a), R * std::sin(a), 0.0});
      }
      arr.weights.assign(n, spec.span * R / n);
      break;
    }
    case ReceiverLayout::sphere: {
      // Fibonacci lattice.
      arr.dimension = 3;
      arr.span = 4.0 * kPi;
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      for (int m = 0; m < n; ++m) {
        const double zc = 1.0 - (2.0 * m + 1.0) / n;
        const double rc = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        const double a = golden * m;
        arr.points.push_back({R * rc * std::cos(a), R * rc * std::sin(a), R * zc});
      }
      arr.weights.assign(n, 4.0 * kPi * R * R / n);
      break;
    }
    case ReceiverLayout::custom:
      throw ConfigError("custom layouts are built with custom_receivers", "receivers.layout");
  }
  return arr;
}

MeasurementArray custom_receivers(std::vector<Vec3> points, std::vector<double> weights,
                                  int dimension) {
  if (points.empty() || points.size() != weights.size()) {
    throw ConfigError("receivers need one positive weight per point", "receivers");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("receiver weights must be positive", "receivers");
  }
  MeasurementArray arr;
  arr.layout = ReceiverLayout::custom;
  arr.dimension = dimension;
  arr.points = std::move(points);
  arr.weights = std::move(weights);
  return arr;
}

double surface_inverse_distance_integral(const MeasurementArray& arr, const Vec3& z) {
  if (arr.layout != ReceiverLayout::sphere) {
    throw DomainError("inverse-distance identity requires a spherical array");
  }
  if (norm(z) > arr.radius * (1.0 + 1e-12)) {
    throw DomainError("sampling point lies outside the measurement sphere");
  }
  const double guard = 1e-12 * arr.radius;
  double sum = 0.0;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const double r = distance(arr.points[i], z);
    if (r <= guard) throw GeometryError("sampling point coincides with a receiver");
    sum += arr.weights[i] / r;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Sampling grid
// ---------------------------------------------------------------------------

SamplingGrid::SamplingGrid(int dimension, std::array<double, 3> lo, std::array<double, 3> hi,
                           std::array<int, 3> counts)
    : dim_(dimension), lo_(lo), hi_(hi), counts_(counts) {
  if (dimension != 2 && dimension != 3) {
    throw ConfigError("dimension must be 2 or 3", "sampling_grid");
  }
  if (dimension == 2) {
    lo_[2] = hi_[2] = 0.0;
    counts_[2] = 1;
  }
  size_ = 1;
  for (int a = 0; a < 3; ++a) {
    if (counts_[a] < 1) throw ConfigError("grid counts must be positive", "sampling_grid.counts");
    if (hi_[a] < lo_[a]) throw ConfigError("grid box has hi < lo", "sampling_grid");
    size_ *= static_cast<std::size_t>(counts_[a]);
  }
}

double SamplingGrid::coordinate(int axis, int index) const {
  const int n = counts_[axis];
  if (n == 1) return 0.5 * (lo_[axis] + hi_[axis]);
  return lo_[axis] + (hi_[axis] - lo_[axis]) * index / (n - 1);
}

double SamplingGrid::spacing(int axis) const {
  const int n = counts_[axis];
  return n > 1 ? (hi_[axis] - lo_[axis]) / (n - 1) : 0.0;
}

std::array<int, 3> SamplingGrid::index(std::size_t linear) const {
  std::array<int, 3> idx{};
  idx[2] = static_cast<int>(linear % counts_[2]);
  linear /= counts_[2];
  idx[1] = static_cast<int>(linear % counts_[1]);
  idx[0] = static_cast<int>(linear / counts_[1]);
  return idx;
}

std::size_t SamplingGrid::linear(const std::array<int, 3>& idx) const {
  return (static_cast<std::size_t>(idx[0]) * counts_[1] + idx[1]) * counts_[2] + idx[2];
}

Vec3 SamplingGrid::point(std::size_t l) const {
  const auto idx = index(l);
  return {coordinate(0, idx[0]), coordinate(1, idx[1]), dim_ == 3 ? coordinate(2, idx[2]) : 0.0};
}

}  // namespace mowave
