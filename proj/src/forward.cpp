#include <mowave/forward.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include <mowave/errors.hpp>
#include <mowave/incident.hpp>
#include <mowave/parallel.hpp>

namespace mowave {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

/// Smallest distance between any panel centroid and any of `points`.
double mesh_clearance(const BoundaryMesh& mesh, std::span<const Vec3> points) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& x : points) {
    for (const Panel& p : mesh.panels) best = std::min(best, distance(x, p.centroid));
  }
  return best;
}

void require_receiver_clearance(const BoundaryMesh& mesh, const MeasurementArray& receivers) {
  const double gap = mesh_clearance(mesh, receivers.points);
  if (!(gap > mesh.panel_size)) {
    throw GeometryError("receiver within " + std::to_string(gap) +
                        " of the scatterer (panel size " + std::to_string(mesh.panel_size) + ")");
  }
}

void require_path_clearance(const BoundaryMesh& mesh, const Trajectory& traj,
                            const TimeGrid& grid) {
  std::vector<Vec3> path;
  path.reserve(grid.samples());
  for (int k = 0; k <= grid.steps(); ++k) path.push_back(traj.position(grid.time(k)));
  const double gap = mesh_clearance(mesh, path);
  if (!(gap > mesh.panel_size)) {
    throw GeometryError("emitter path within " + std::to_string(gap) +
                        " of the scatterer (panel size " + std::to_string(mesh.panel_size) + ")");
  }
}

/// Value of the interpolated history sum_j A_ij g(t_k - r_ij/c) for row i,
/// leaving out the current-step part when `include_current` is false.
double history_row(const RetardedOperator& op, const DensityHistory& g, std::size_t i, int k,
                   bool include_current) {
  const std::size_t n = op.size;
  const double* w = op.weight.data() + i * n;
  const int* lag = op.lag.data() + i * n;
  const double* frac = op.frac.data() + i * n;
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const int m = k - lag[j];
    double v = 0.0;
    if (m >= 0 && (include_current || lag[j] > 0)) v += (1.0 - frac[j]) * g.at(m, j);
    if (m >= 1) v += frac[j] * g.at(m - 1, j);
    acc += w[j] * v;
  }
  return acc;
}

}  // namespace

DensityHistory::DensityHistory(TimeGrid grid_, std::size_t panels_)
    : grid(grid_), panels(panels_), values(static_cast<std::size_t>(grid.samples()) * panels, 0.0) {}

double DensityHistory::sample(double t, std::size_t j) const {
  if (t < 0.0) return 0.0;
  const double s = t / grid.dt();
  if (s >= grid.steps()) return at(grid.steps(), j);
  const int k = static_cast<int>(std::floor(s));
  const double w = s - k;
  return (1.0 - w) * at(k, j) + w * at(k + 1, j);
}

double panel_self_integral(const Panel& panel, int dimension) {
  if (dimension == 2) {
    const double half = 0.5 * panel.measure;
    const double delta = panel.measure / 10.0;
    return std::log((half + std::hypot(half, delta)) / delta) / (2.0 * std::numbers::pi);
  }
  // In-plane 1/r integral over a flat triangle seen from an interior point:
  // sum over edges of h (asinh(s_b / h) - asinh(s_a / h)).
  const Vec3& x = panel.centroid;
  double total = 0.0;
  for (int e = 0; e < 3; ++e) {
    const Vec3& a = panel.vertices[e];
    const Vec3& b = panel.vertices[(e + 1) % 3];
    const Vec3 edge = b - a;
    const double len = norm(edge);
    const Vec3 dir = edge / len;
    const double sa = dot(a - x, dir);
    const double sb = dot(b - x, dir);
    const Vec3 foot = a - dir * sa;
    const double h = distance(foot, x);
    total += h * (std::asinh(sb / h) - std::asinh(sa / h));
  }
  return total / kFourPi;
}

namespace {

/// Midpoint rule on a triangle split `depth` times into four congruent parts.
double triangle_integral(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c, int depth) {
  if (depth == 0) {
    const double area = 0.5 * norm(cross(b - a, c - a));
    return area / norm(x - (a + b + c) / 3.0);
  }
  const Vec3 ab = (a + b) * 0.5;
  const Vec3 bc = (b + c) * 0.5;
  const Vec3 ca = (c + a) * 0.5;
  return triangle_integral(x, a, ab, ca, depth - 1) + triangle_integral(x, ab, b, bc, depth - 1) +
         triangle_integral(x, ca, bc, c, depth - 1) + triangle_integral(x, ab, bc, ca, depth - 1);
}

/// Exact integral of 1/|x - y| along the straight segment [a, b] for x off the segment.
double segment_integral(const Vec3& x, const Vec3& a, const Vec3& b) {
  const Vec3 edge = b - a;
  const double len = norm(edge);
  const Vec3 dir = edge / len;
  const double sa = dot(a - x, dir);
  const double sb = dot(b - x, dir);
  const double h = norm((a - x) - dir * sa);
  if (h <= 1e-12 * len) return std::abs(std::log(std::abs(sb) / std::abs(sa)));
  return std::asinh(sb / h) - std::asinh(sa / h);
}

constexpr int kNearSubdivision = 4;
constexpr double kNearRange = 3.0;

}  // namespace

double panel_integral(const BoundaryMesh& mesh, std::size_t j, const Vec3& x) {
  const Panel& p = mesh.panels[j];
  const double r = distance(x, p.centroid);
  if (r >= kNearRange * mesh.panel_size) return p.measure / (kFourPi * r);
  if (mesh.dimension == 2) return segment_integral(x, p.vertices[0], p.vertices[1]) / kFourPi;
  return triangle_integral(x, p.vertices[0], p.vertices[1], p.vertices[2], kNearSubdivision) /
         kFourPi;
}

double panel_weight(const BoundaryMesh& mesh, std::size_t i, std::size_t j) {
  if (i == j) return panel_self_integral(mesh.panels[i], mesh.dimension);
  return panel_integral(mesh, j, mesh.panels[i].centroid);
}

RetardedOperator assemble_operator(const BoundaryMesh& mesh, const Medium& medium,
                                   const TimeGrid& grid) {
  const std::size_t n = mesh.size();
  const double step = medium.sound_speed() * grid.dt();
  RetardedOperator op;
  op.size = n;
  op.dt = grid.dt();
  op.weight.assign(n * n, 0.0);
  op.lag.assign(n * n, 0);
  op.frac.assign(n * n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const Panel& pi = mesh.panels[i];
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t ij = i * n + j;
      if (i == j) {
        op.weight[ij] = panel_weight(mesh, i, i);
        continue;
      }
      const Panel& pj = mesh.panels[j];
      const double r = distance(pi.centroid, pj.centroid);
      if (r != distance(pj.centroid, pi.centroid)) {
        throw AssemblyError("asymmetric panel distance", 0);
      }
      if (!(r > 0.0)) throw GeometryError("coincident panel centroids");
      const double delay = r / step;
      const double whole = std::floor(delay);
      op.weight[ij] = panel_weight(mesh, i, j);
      op.lag[ij] = static_cast<int>(whole);
      op.frac[ij] = delay - whole;
    }
  });
  return op;
}

DensityHistory march_density(const BoundaryMesh& mesh, const WaveRecord& incident,
                             const Medium& medium, const MarchOptions& options) {
  if (incident.kind != RecordKind::incident) {
    throw ConfigError("density march needs an incident record", "incident.kind");
  }
  if (incident.receiver_count() != mesh.size()) {
    throw ConfigError("incident record is not collocated on the mesh", "incident.receivers");
  }
  const TimeGrid& grid = incident.grid;
  const std::size_t n = mesh.size();
  const RetardedOperator op = assemble_operator(mesh, medium, grid);

  Eigen::MatrixXd step_matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t ij = i * n + j;
      step_matrix(i, j) = op.lag[ij] == 0 ? op.weight[ij] * (1.0 - op.frac[ij]) : 0.0;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(step_matrix);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-13)) throw AssemblyError("singular step matrix", 0);

  DensityHistory g(grid, n);
  Eigen::VectorXd rhs(n);
  for (int k = 0; k <= grid.steps(); ++k) {
    bool any = false;
    parallel_for(n, [&](std::size_t i) {
      rhs[i] = -incident.at(i, k) - history_row(op, g, i, k, false);
    });
    for (std::size_t i = 0; i < n; ++i) any = any || rhs[i] != 0.0;
    if (!any) continue;
    const Eigen::VectorXd gk = lu.solve(rhs);
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(gk[j])) throw AssemblyError("non-finite density", k);
      g.at(k, j) = gk[j];
    }
  }

  // Late-time growth check over the last tenth of the steps.
  const int samples = grid.samples();
  const int window = std::max(1, samples / 10);
  if (samples >= 2 * window) {
    auto energy = [&](int k) {
      double e = 0.0;
      for (std::size_t j = 0; j < n; ++j) e += g.at(k, j) * g.at(k, j) * mesh.panels[j].measure;
      return e;
    };
    double last = 0.0;
    double prev = 0.0;
    for (int k = samples - window; k < samples; ++k) last += energy(k);
    for (int k = samples - 2 * window; k < samples - window; ++k) prev += energy(k);
    g.energy_growth = prev > 0.0 ? last / prev : 0.0;
    if (options.allow_filter && prev > 0.0 && last > 10.0 * prev) {
      std::vector<double> raw = g.values;
      for (int k = 0; k < samples; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
          const double before = k > 0 ? raw[(k - 1) * n + j] : 0.0;
          const double after = k + 1 < samples ? raw[(k + 1) * n + j] : raw[k * n + j];
          g.at(k, j) = 0.25 * (before + 2.0 * raw[k * n + j] + after);
        }
      }
      g.filtered = true;
    }
  }
  return g;
}

double collocation_residual(const BoundaryMesh& mesh, const WaveRecord& incident,
                            const DensityHistory& density, const Medium& medium) {
  const RetardedOperator op = assemble_operator(mesh, medium, incident.grid);
  std::vector<double> worst(mesh.size(), 0.0);
  parallel_for(mesh.size(), [&](std::size_t i) {
    for (int k = 0; k <= incident.grid.steps(); ++k) {
      const double r = history_row(op, density, i, k, true) + incident.at(i, k);
      worst[i] = std::max(worst[i], std::abs(r));
    }
  });
  return worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
}

WaveRecord evaluate_scattered(const BoundaryMesh& mesh, const DensityHistory& density,
                              const MeasurementArray& receivers, const TimeGrid& grid,
                              const Medium& medium) {
  if (!(grid == density.grid)) throw ConfigError("density and record grids differ", "time_grid");
  require_receiver_clearance(mesh, receivers);
  WaveRecord rec(RecordKind::scattered, receivers, grid, medium.sound_speed());
  const std::size_t n = mesh.size();
  const double step = medium.sound_speed() * grid.dt();
  parallel_for(receivers.size(), [&](std::size_t i) {
    std::vector<double> w(n);
    std::vector<int> lag(n);
    std::vector<double> frac(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double r = distance(receivers.points[i], mesh.panels[j].centroid);
      const double delay = r / step;
      const double whole = std::floor(delay);
      w[j] = mesh.panels[j].measure / (kFourPi * r);
      lag[j] = static_cast<int>(whole);
      frac[j] = delay - whole;
    }
    auto row = rec.series(i);
    for (int k = 0; k <= grid.steps(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const int m = k - lag[j];
        if (m < 0) continue;
        double v = (1.0 - frac[j]) * density.at(m, j);
        if (m >= 1) v += frac[j] * density.at(m - 1, j);
        acc += w[j] * v;
      }
      row[k] = acc;
    }
  });
  return rec;
}

namespace {

ApproxObstacle obstacle_constants(const BoundaryMesh& mesh, ApproxConstant which) {
  ApproxObstacle ob;
  ob.center = mesh.center;
  ob.area = mesh.total_measure;
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    const double d = distance(mesh.panels[j].centroid, mesh.center);
    if (d < best) {
      best = d;
      nearest = j;
    }
  }
  double e = 0.0;
  for (std::size_t j = 0; j < mesh.size(); ++j) e += panel_weight(mesh, nearest, j);
  ob.nearest = e;

  const std::size_t n = mesh.size();
  Eigen::MatrixXd stat(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) stat(i, j) = panel_weight(mesh, i, j);
  }
  const Eigen::VectorXd q = stat.partialPivLu().solve(Eigen::VectorXd::Ones(n));
  double charge = 0.0;
  for (std::size_t j = 0; j < n; ++j) charge += q[j] * mesh.panels[j].measure;
  ob.charge = charge;

  ob.self = which == ApproxConstant::capacitance ? ob.area / charge : e;
  ob.constant = ob.area / ob.self;
  return ob;
}

}  // namespace

WaveRecord approx_scattered(std::span<const BoundaryMesh> obstacles, const Trajectory& traj,
                            const Signal& sig, const Medium& medium,
                            const MeasurementArray& receivers, const TimeGrid& grid,
                            bool doppler, ApproxInfo* info, ApproxConstant constant) {
  require_subsonic(traj, medium);
  std::vector<ApproxObstacle> consts;
  for (const BoundaryMesh& mesh : obstacles) {
    require_receiver_clearance(mesh, receivers);
    require_path_clearance(mesh, traj, grid);
    consts.push_back(obstacle_constants(mesh, constant));
  }
  if (info) info->obstacles = consts;

  WaveRecord rec(RecordKind::scattered, receivers, grid, medium.sound_speed());
  if (sig.is_zero()) return rec;
  const double c = medium.sound_speed();
  parallel_for(receivers.size(), [&](std::size_t i) {
    const Vec3& x = receivers.points[i];
    auto row = rec.series(i);
    for (const ApproxObstacle& ob : consts) {
      const double rx = distance(x, ob.center);
      for (int k = 0; k <= grid.steps(); ++k) {
        const double t_tilde = grid.time(k) - rx / c;
        if (sig.causal() && t_tilde < 0.0) continue;
        const double tau = solve_retarded_time(traj, medium, ob.center, t_tilde).tau;
        const Vec3 s = traj.position(tau);
        const Vec3 d = ob.center - s;
        const double rho = norm(d);
        const double factor = doppler ? 1.0 - dot(traj.velocity(tau), d) / (c * rho) : 1.0;
        row[k] += -ob.constant * sig(tau) / (kFourPi * kFourPi * rx * rho * factor);
      }
    }
  });
  return rec;
}

WaveRecord approx_scattered(const BoundaryMesh& mesh, const Trajectory& traj, const Signal& sig,
                            const Medium& medium, const MeasurementArray& receivers,
                            const TimeGrid& grid, bool doppler, ApproxInfo* info,
                            ApproxConstant constant) {
  return approx_scattered(std::span<const BoundaryMesh>(&mesh, 1), traj, sig, medium, receivers,
                          grid, doppler, info, constant);
}

WaveRecord add_noise(const WaveRecord& record, const NoiseSpec& noise) {
  if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) {
    throw ConfigError("noise level must be a nonnegative number", "noise.sigma");
  }
  if (record.kind != RecordKind::scattered) {
    throw ConfigError("noise applies to scattered records only", "record.kind");
  }
  WaveRecord out = record;
  out.kind = RecordKind::noisy_scattered;
  out.sigma = noise.sigma;
  out.seed = noise.seed;
  std::mt19937_64 gen(noise.seed);
  for (double& v : out.values) v *= 1.0 + noise.sigma * uniform_pm1(gen());
  return out;
}

}  // namespace mowave
