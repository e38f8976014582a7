#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <mowave/record.hpp>
#include <mowave/scene.hpp>

namespace mowave {

/// Boundary density g[k][j] on the time grid, piecewise linear in time and
/// zero before t = 0.
struct DensityHistory {
  TimeGrid grid{1.0, 1};
  std::size_t panels = 0;
  std::vector<double> values;  ///< step-major: values[k * panels + j]
  bool filtered = false;       ///< late-time smoothing pass was applied
  double energy_growth = 0.0;  ///< final-window energy over the preceding window

  DensityHistory() = default;
  DensityHistory(TimeGrid grid, std::size_t panels);

  double& at(int k, std::size_t j) { return values[k * panels + j]; }
  double at(int k, std::size_t j) const { return values[k * panels + j]; }

  /// Linear interpolant of panel j's samples; zero for t < 0, held at the
  /// last sample beyond the grid.
  double sample(double t, std::size_t j) const;
};

/// Retarded single-layer collocation operator: for every collocation point
/// i and panel j, the weight A_ij and the delay r_ij / (c dt) split into
/// whole steps and a fraction.
struct RetardedOperator {
  std::size_t size = 0;
  double dt = 0.0;
  std::vector<double> weight;  ///< A_ij, row-major
  std::vector<int> lag;        ///< floor of the delay in steps
  std::vector<double> frac;    ///< delay minus lag, in [0, 1)
};

/// Integral of 1/(4 pi |x - y|) over a flat panel observed at its own
/// centroid. Segments use an offset of one tenth of the panel length.
double panel_self_integral(const Panel& panel, int dimension);

/// Integral of 1/(4 pi |x - y|) over panel j. Panels within three panel
/// sizes of x are integrated accurately (exactly for segments, by 256-fold
/// subdivision for triangles); farther panels use the centroid rule.
double panel_integral(const BoundaryMesh& mesh, std::size_t j, const Vec3& x);

/// Collocation weight A_ij: the self-integral when i == j, else
/// panel_integral of panel j at centroid i.
double panel_weight(const BoundaryMesh& mesh, std::size_t i, std::size_t j);

RetardedOperator assemble_operator(const BoundaryMesh& mesh, const Medium& medium,
                                   const TimeGrid& grid);

struct MarchOptions {
  bool allow_filter = true;
};

/// Time-march the retarded-potential equation sum_j A_ij g(t_k - r_ij/c; y_j)
/// = -u^i(y_i, t_k). Unknowns reached with less than one step of delay are
/// solved implicitly with an LU factorization of the constant step matrix.
DensityHistory march_density(const BoundaryMesh& mesh, const WaveRecord& incident,
                             const Medium& medium, const MarchOptions& options = {});

/// Largest |sum_j A_ij g(t_k - r_ij/c) + u^i(y_i, t_k)| over all i and k.
double collocation_residual(const BoundaryMesh& mesh, const WaveRecord& incident,
                            const DensityHistory& density, const Medium& medium);

/// Retarded single-layer potential of `density` at the receivers.
WaveRecord evaluate_scattered(const BoundaryMesh& mesh, const DensityHistory& density,
                              const MeasurementArray& receivers, const TimeGrid& grid,
                              const Medium& medium);

/// Per-obstacle constants of the small-obstacle model.
struct ApproxObstacle {
  Vec3 center;          ///< y0
  double area = 0.0;    ///< A, total boundary measure
  double self = 0.0;      ///< E actually used
  double nearest = 0.0;   ///< E from the panel nearest y0
  double charge = 0.0;    ///< Q, discrete static charge for unit potential
  double constant = 0.0;  ///< C = A / E
};

struct ApproxInfo {
  std::vector<ApproxObstacle> obstacles;
};

/// How E is obtained. `nearest_panel` evaluates the single-layer quadrature
/// at the panel centroid nearest y0. `capacitance` takes E = A / Q where Q
/// is the total charge solving the discrete static single-layer system with
/// unit right-hand side, which matches the collocation operator exactly in
/// the static limit.
enum class ApproxConstant { nearest_panel, capacitance };

/// Closed-form field scattered by small obstacles:
/// u = -C lambda(tau') / ((4 pi)^2 |x - y0| |s(tau') - y0| D), where
/// tau' is the emission time of the wave reaching y0 at t - |x - y0|/c and D
/// is the Doppler factor at tau' (1 when `doppler` is false). Several
/// obstacles superpose.
WaveRecord approx_scattered(std::span<const BoundaryMesh> obstacles, const Trajectory& traj,
                            const Signal& sig, const Medium& medium,
                            const MeasurementArray& receivers, const TimeGrid& grid,
                            bool doppler, ApproxInfo* info = nullptr,
                            ApproxConstant constant = ApproxConstant::nearest_panel);

WaveRecord approx_scattered(const BoundaryMesh& mesh, const Trajectory& traj, const Signal& sig,
                            const Medium& medium, const MeasurementArray& receivers,
                            const TimeGrid& grid, bool doppler, ApproxInfo* info = nullptr,
                            ApproxConstant constant = ApproxConstant::nearest_panel);

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 1;
};

/// Uniform draw on [-1, 1) from the top 53 bits of a 64-bit word.
inline double uniform_pm1(std::uint64_t word) {
  return 2.0 * static_cast<double>(word >> 11) * 0x1.0p-53 - 1.0;
}

/// Multiplicative noise u (1 + sigma r) with r uniform on [-1, 1], drawn
/// from mt19937_64 seeded with `noise.seed` in receiver-major order.
WaveRecord add_noise(const WaveRecord& record, const NoiseSpec& noise);

}  // namespace mowave
