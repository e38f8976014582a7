#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <mowave/record.hpp>
#include <mowave/scene.hpp>

namespace mowave {

enum class IndicatorKind { I1, I2tilde, I2 };

std::string to_string(IndicatorKind kind);
IndicatorKind parse_indicator_kind(const std::string& text);

/// One indicator value per sampling point.
struct IndicatorImage {
  SamplingGrid grid;
  IndicatorKind kind = IndicatorKind::I2tilde;
  std::vector<double> values;
  double min = 0.0;  ///< range before normalization
  double max = 0.0;
  bool normalized = false;
  bool degenerate = false;           ///< normalization of a constant image
  std::vector<std::size_t> flagged;  ///< probes whose test function vanished

  IndicatorImage(SamplingGrid grid, IndicatorKind kind);

  /// Index of the largest value; the lowest index wins ties.
  std::size_t argmax() const;
};

/// Cached retarded chain of one sampling point z for every receiver i and
/// time index k < samples: t' = t_k - |x_i - z|/c and the emission time tau'
/// of the wave reaching z at t'. Storage is receiver-major.
struct ProbePrecomp {
  Vec3 z;
  std::size_t receivers = 0;
  int samples = 0;
  std::vector<double> distance;         ///< |x_i - z|
  std::vector<double> t_tilde;
  std::vector<double> tau_tilde;
  std::vector<double> source_distance;  ///< |s(tau') - z|
  std::vector<double> doppler;          ///< 1 - v(tau').(z - s(tau')) / (c |z - s(tau')|)
  std::vector<unsigned char> active;    ///< 0 when t' precedes a causal signal
};

/// Fill `out` for probe z, reusing its storage.
void precompute_probe(const Trajectory& traj, const Signal& sig, const Medium& medium,
                      const Vec3& z, const MeasurementArray& receivers, const TimeGrid& grid,
                      int samples, ProbePrecomp& out);

/// Test function U(x_i, t_k; z) from a precomputed chain.
double probe_value(const ProbePrecomp& pre, const Signal& sig, std::size_t i, int k);

/// U(x, t; z) = -lambda(tau') / (4 pi |x - z| |s(tau') - z| D(tau')).
double probe_U(const Trajectory& traj, const Signal& sig, const Medium& medium, const Vec3& z,
               const Vec3& x, double t);

/// G_z(x, t) = lambda(t + |x - z|/c) / (4 pi sqrt|x - z|).
double kernel_Gz(const Signal& sig, const Medium& medium, const Vec3& z, const Vec3& x, double t);

enum class ConvolutionMethod { direct, fft };

std::string to_string(ConvolutionMethod method);
ConvolutionMethod parse_convolution_method(const std::string& text);

/// Normalized correlation |<u, U>| / (|u| |U|) over time indices 0..N_t-1.
IndicatorImage indicator_I1(const WaveRecord& data, const Trajectory& traj, const Signal& sig,
                            const Medium& medium, const SamplingGrid& grid);

/// Energy of the receiver-summed causal convolution of the data with G_z.
IndicatorImage indicator_I2tilde(const WaveRecord& data, const Signal& sig, const Medium& medium,
                                 const SamplingGrid& grid, ConvolutionMethod method);

/// Same as indicator_I2tilde with the extra receiver weight sqrt|x_i - y0|.
IndicatorImage indicator_I2(const WaveRecord& data, const Signal& sig, const Medium& medium,
                            const SamplingGrid& grid, const Vec3& y0, ConvolutionMethod method);

/// Affine map onto [0, 1]; a constant image maps to 0.5 with the degenerate
/// flag set.
IndicatorImage normalize_image(const IndicatorImage& img);

/// max |a - b| / max |b|; zero when both images vanish.
double relative_difference(const IndicatorImage& a, const IndicatorImage& b);

struct Peak {
  std::size_t index = 0;
  Vec3 point;
  double value = 0.0;
};

/// Up to `count` grid-local maxima in decreasing order of value, each at
/// least `min_separation` away from the ones already chosen.
std::vector<Peak> dominant_maxima(const IndicatorImage& img, std::size_t count,
                                  double min_separation);

/// Largest relative deviation of the spherical-array quadrature of
/// integral |x - z|^-1 ds from 4 pi R over grid points with |z| <= R.
double lemma_quadrature_deviation(const MeasurementArray& arr, const SamplingGrid& grid);

/// CSV layout: a `# mowave-image v1, ...` header, then `z1,z2[,z3],value`
/// per grid point with the last axis varying fastest. A nonempty
/// `config_hash` is appended to the header as `config=<hash>`.
void write_image_csv(const IndicatorImage& img, std::ostream& out,
                     const std::string& config_hash = {});
void write_image_csv(const IndicatorImage& img, const std::filesystem::path& path,
                     const std::string& config_hash = {});
IndicatorImage read_image_csv(std::istream& in);
IndicatorImage read_image_csv(const std::filesystem::path& path);

}  // namespace mowave
