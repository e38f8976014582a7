#include <mowave/imaging.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include <mowave/errors.hpp>
#include <mowave/fft.hpp>
#include <mowave/incident.hpp>
#include <mowave/parallel.hpp>

namespace mowave {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

/// Relative magnitude below which signal and data samples are treated as
/// zero in the convolution indicators. Without it the tails of a Gaussian
/// envelope produce subnormal products, which are orders of magnitude
/// slower than normal arithmetic.
constexpr double kNegligible = 1e-100;

void require_data(const WaveRecord& data) {
  if (data.kind == RecordKind::incident) {
    throw ConfigError("imaging needs a scattered record", "record.kind");
  }
  if (data.grid.steps() < 1 || data.receiver_count() == 0) {
    throw ConfigError("record has no samples", "record");
  }
}

double data_energy(const WaveRecord& data) {
  const int nt = data.grid.steps();
  double total = 0.0;
  for (std::size_t i = 0; i < data.receiver_count(); ++i) {
    double acc = 0.0;
    for (int k = 0; k < nt; ++k) acc += data.at(i, k) * data.at(i, k);
    total += acc * data.receivers.weights[i] * data.grid.dt();
  }
  return total;
}

using Lanes = double __attribute__((vector_size(32)));

inline Lanes load_lanes(const double* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

/// Four causal convolution samples at once: out[m] = sum_{j <= k0 + m} a[j - m] b[j]
/// with `a` pointing at the reversed series entry aligned with sample k0.
/// Sharing the loads of `b` across outputs keeps the loop compute-bound.
void dot_block4(const double* a, const double* b, std::size_t k0, double* out) {
  Lanes acc[4][2] = {};
  const std::size_t len = k0 + 1;
  std::size_t j = 0;
  for (; j + 8 <= len; j += 8) {
    const Lanes b0 = load_lanes(b + j);
    const Lanes b1 = load_lanes(b + j + 4);
    for (std::size_t m = 0; m < 4; ++m) {
      acc[m][0] += load_lanes(a + j - m) * b0;
      acc[m][1] += load_lanes(a + j + 4 - m) * b1;
    }
  }
  double s[4];
  for (std::size_t m = 0; m < 4; ++m) {
    const Lanes v = acc[m][0] + acc[m][1];
    s[m] = (v[0] + v[1]) + (v[2] + v[3]);
  }
  for (; j < len; ++j) {
    for (std::size_t m = 0; m < 4; ++m) s[m] += a[j - m] * b[j];
  }
  // Terms with j > k0 exist only for the later outputs.
  for (std::size_t m = 1; m < 4; ++m) {
    for (std::size_t jj = len; jj <= k0 + m; ++jj) s[m] += a[jj - m] * b[jj];
  }
  for (std::size_t m = 0; m < 4; ++m) out[m] = s[m];
}

double dot_contiguous(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t j = 0; j < n; ++j) acc += a[j] * b[j];
  return acc;
}

/// Shared body of the two convolution indicators; `weights` carries the
/// per-receiver quadrature factor.
IndicatorImage convolution_indicator(const WaveRecord& data, const Signal& sig,
                                     const Medium& medium, const SamplingGrid& grid,
                                     const std::vector<double>& weights, IndicatorKind kind,
                                     ConvolutionMethod method) {
  require_data(data);
  IndicatorImage img(grid, kind);
  const std::size_t nm = data.receiver_count();
  const int nt = data.grid.steps();
  const std::size_t n = static_cast<std::size_t>(nt);
  const double dt = data.grid.dt();
  const double c = medium.sound_speed();
  if (sig.is_zero() || data.max_abs() == 0.0) return img;

  // A periodic signal whose period is a whole number of steps repeats along
  // the kernel, so one period is evaluated and then copied.
  std::size_t repeat = n;
  if (const double period = sig.period(); period > 0.0) {
    const double steps = std::round(period / dt);
    if (steps >= 1.0 && std::abs(steps * dt - period) <= 1e-12 * period) {
      repeat = std::min(n, static_cast<std::size_t>(steps));
    }
  }
  auto fill_kernel = [&](const Vec3& z, std::size_t i, double* out) {
    const double d = distance(data.receivers.points[i], z);
    if (d < kSingularDistance) throw GeometryError("sampling point coincides with a receiver");
    const double scale = 1.0 / (kFourPi * std::sqrt(d));
    const double shift = d / c;
    for (std::size_t j = 0; j < repeat; ++j) {
      const double v = sig(j * dt + shift);
      out[j] = std::abs(v) < kNegligible ? 0.0 : v * scale;
    }
    for (std::size_t j = repeat; j < n; ++j) out[j] = out[j - repeat];
  };

  if (method == ConvolutionMethod::direct) {
    // Reversed series make every causal convolution sample a contiguous dot.
    const double floor = kNegligible * data.max_abs();
    std::vector<double> reversed(nm * n);
    for (std::size_t i = 0; i < nm; ++i) {
      for (std::size_t m = 0; m < n; ++m) {
        const double v = data.at(i, nt - 1 - static_cast<int>(m));
        reversed[i * n + m] = std::abs(v) < floor ? 0.0 : v;
      }
    }
    parallel_for(grid.size(), [&](std::size_t l) {
      thread_local std::vector<double> kernel;
      thread_local std::vector<double> sum;
      kernel.assign(n, 0.0);
      sum.assign(n, 0.0);
      const Vec3 z = grid.point(l);
      for (std::size_t i = 0; i < nm; ++i) {
        fill_kernel(z, i, kernel.data());
        const double* ur = reversed.data() + i * n;
        std::size_t k = 0;
        double block[4];
        for (; k + 4 <= n; k += 4) {
          dot_block4(ur + (n - 1 - k), kernel.data(), k, block);
          for (std::size_t m = 0; m < 4; ++m) sum[k + m] += weights[i] * block[m];
        }
        for (; k < n; ++k) {
          sum[k] += weights[i] * dot_contiguous(ur + (n - 1 - k), kernel.data(), k + 1);
        }
      }
      double energy = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double s = sum[k] * dt;
        energy += s * s * dt;
      }
      img.values[l] = energy;
    });
    return img;
  }

  const std::size_t len = 2 * n;
  const RealFft fft(len);
  const std::size_t nf = fft.spectrum_size();
  std::vector<std::complex<double>> data_hat(nm * nf);
  {
    std::vector<double> padded(len, 0.0);
    for (std::size_t i = 0; i < nm; ++i) {
      for (std::size_t k = 0; k < n; ++k) padded[k] = data.at(i, static_cast<int>(k)) * weights[i];
      fft.forward(padded, std::span(data_hat.data() + i * nf, nf));
    }
  }
  parallel_for(grid.size(), [&](std::size_t l) {
    thread_local std::vector<double> kernel;
    thread_local std::vector<std::complex<double>> kernel_hat;
    thread_local std::vector<std::complex<double>> acc;
    thread_local std::vector<double> conv;
    kernel.assign(len, 0.0);
    kernel_hat.assign(nf, {});
    acc.assign(nf, {});
    conv.assign(len, 0.0);
    const Vec3 z = grid.point(l);
    for (std::size_t i = 0; i < nm; ++i) {
      fill_kernel(z, i, kernel.data());
      fft.forward(kernel, kernel_hat);
      const std::complex<double>* uh = data_hat.data() + i * nf;
      for (std::size_t f = 0; f < nf; ++f) acc[f] += uh[f] * kernel_hat[f];
    }
    fft.inverse(acc, conv);
    const double scale = dt / static_cast<double>(len);
    double energy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double s = conv[k] * scale;
      energy += s * s * dt;
    }
    img.values[l] = energy;
  });
  return img;
}

}  // namespace

std::string to_string(IndicatorKind kind) {
  switch (kind) {
    case IndicatorKind::I1: return "I1";
    case IndicatorKind::I2tilde: return "I2tilde";
    case IndicatorKind::I2: return "I2";
  }
  return "I2tilde";
}

IndicatorKind parse_indicator_kind(const std::string& text) {
  if (text == "I1") return IndicatorKind::I1;
  if (text == "I2tilde") return IndicatorKind::I2tilde;
  if (text == "I2") return IndicatorKind::I2;
  throw ConfigError("unknown indicator '" + text + "'", "indicator");
}

std::string to_string(ConvolutionMethod method) {
  return method == ConvolutionMethod::direct ? "direct" : "fft";
}

ConvolutionMethod parse_convolution_method(const std::string& text) {
  if (text == "direct") return ConvolutionMethod::direct;
  if (text == "fft") return ConvolutionMethod::fft;
  throw ConfigError("unknown convolution method '" + text + "'", "convolution");
}

IndicatorImage::IndicatorImage(SamplingGrid grid_, IndicatorKind kind_)
    : grid(std::move(grid_)), kind(kind_), values(grid.size(), 0.0) {}

std::size_t IndicatorImage::argmax() const {
  std::size_t best = 0;
  for (std::size_t l = 1; l < values.size(); ++l) {
    if (values[l] > values[best]) best = l;
  }
  return best;
}

void precompute_probe(const Trajectory& traj, const Signal& sig, const Medium& medium,
                      const Vec3& z, const MeasurementArray& receivers, const TimeGrid& grid,
                      int samples, ProbePrecomp& out) {
  const std::size_t nm = receivers.size();
  const std::size_t total = nm * static_cast<std::size_t>(samples);
  const double c = medium.sound_speed();
  out.z = z;
  out.receivers = nm;
  out.samples = samples;
  out.distance.assign(nm, 0.0);
  out.t_tilde.assign(total, 0.0);
  out.tau_tilde.assign(total, 0.0);
  out.source_distance.assign(total, 0.0);
  out.doppler.assign(total, 1.0);
  out.active.assign(total, 0);
  for (std::size_t i = 0; i < nm; ++i) {
    const double d = distance(receivers.points[i], z);
    if (d < kSingularDistance) throw GeometryError("sampling point coincides with a receiver");
    out.distance[i] = d;
    int warm = 0;
    double tau = 0.0;
    double prev = 0.0;
    for (int k = 0; k < samples; ++k) {
      const std::size_t ik = i * samples + k;
      const double tt = grid.time(k) - d / c;
      out.t_tilde[ik] = tt;
      if (sig.is_zero() || (sig.causal() && tt < 0.0)) continue;
      // Linear extrapolation of the two previous roots is within O(dt^2).
      const double guess = warm == 0 ? tt : warm == 1 ? tau + grid.dt() : 2.0 * tau - prev;
      const EmissionState st = solve_retarded_time_newton(traj, c, z, tt, guess);
      prev = tau;
      tau = st.tau;
      ++warm;
      const Vec3 dz = z - st.position;
      const double rho = norm(dz);
      if (rho < kSingularDistance) throw GeometryError("sampling point lies on the emitter path");
      out.tau_tilde[ik] = tau;
      out.source_distance[ik] = rho;
      out.doppler[ik] = 1.0 - dot(st.velocity, dz) / (c * rho);
      out.active[ik] = 1;
    }
  }
}

double probe_value(const ProbePrecomp& pre, const Signal& sig, std::size_t i, int k) {
  const std::size_t ik = i * pre.samples + k;
  if (!pre.active[ik]) return 0.0;
  return -sig(pre.tau_tilde[ik]) /
         (kFourPi * pre.distance[i] * pre.source_distance[ik] * pre.doppler[ik]);
}

double probe_U(const Trajectory& traj, const Signal& sig, const Medium& medium, const Vec3& z,
               const Vec3& x, double t) {
  require_subsonic(traj, medium);
  const double c = medium.sound_speed();
  const double d = distance(x, z);
  if (d < kSingularDistance) throw GeometryError("sampling point coincides with the receiver");
  const double tt = t - d / c;
  if (sig.is_zero() || (sig.causal() && tt < 0.0)) return 0.0;
  const double tau = solve_retarded_time(traj, medium, z, tt).tau;
  const Vec3 s = traj.position(tau);
  const Vec3 dz = z - s;
  const double rho = norm(dz);
  if (rho < kSingularDistance) throw GeometryError("sampling point lies on the emitter path");
  const double doppler = 1.0 - dot(traj.velocity(tau), dz) / (c * rho);
  return -sig(tau) / (kFourPi * d * rho * doppler);
}

double kernel_Gz(const Signal& sig, const Medium& medium, const Vec3& z, const Vec3& x,
                 double t) {
  const double d = distance(x, z);
  if (d < kSingularDistance) throw GeometryError("sampling point coincides with the receiver");
  if (sig.is_zero()) return 0.0;
  return sig(t + d / medium.sound_speed()) / (kFourPi * std::sqrt(d));
}

IndicatorImage indicator_I1(const WaveRecord& data, const Trajectory& traj, const Signal& sig,
                            const Medium& medium, const SamplingGrid& grid) {
  require_data(data);
  require_subsonic(traj, medium);
  const double data_sq = data_energy(data);
  if (!(data_sq > 0.0)) throw EmptyDataError("data record is identically zero");
  const double data_norm = std::sqrt(data_sq);
  const std::size_t nm = data.receiver_count();
  const int nt = data.grid.steps();
  const double dt = data.grid.dt();

  IndicatorImage img(grid, IndicatorKind::I1);
  std::vector<unsigned char> zero_probe(grid.size(), 0);
  parallel_for(grid.size(), [&](std::size_t l) {
    thread_local ProbePrecomp pre;
    precompute_probe(traj, sig, medium, grid.point(l), data.receivers, data.grid, nt, pre);
    double inner = 0.0;
    double probe_sq = 0.0;
    for (std::size_t i = 0; i < nm; ++i) {
      double a = 0.0;
      double b = 0.0;
      for (int k = 0; k < nt; ++k) {
        const double u = probe_value(pre, sig, i, k);
        a += data.at(i, k) * u;
        b += u * u;
      }
      const double w = data.receivers.weights[i] * dt;
      inner += a * w;
      probe_sq += b * w;
    }
    if (!(probe_sq > 0.0)) {
      zero_probe[l] = 1;
      img.values[l] = 0.0;
      return;
    }
    double v = std::abs(inner) / (data_norm * std::sqrt(probe_sq));
    if (v > 1.0) {
      if (v > 1.0 + 1e-12) throw Error("correlation indicator exceeds 1 beyond rounding");
      v = 1.0;
    }
    img.values[l] = v;
  });
  for (std::size_t l = 0; l < grid.size(); ++l) {
    if (zero_probe[l]) img.flagged.push_back(l);
  }
  return img;
}

IndicatorImage indicator_I2tilde(const WaveRecord& data, const Signal& sig, const Medium& medium,
                                 const SamplingGrid& grid, ConvolutionMethod method) {
  return convolution_indicator(data, sig, medium, grid, data.receivers.weights,
                               IndicatorKind::I2tilde, method);
}

IndicatorImage indicator_I2(const WaveRecord& data, const Signal& sig, const Medium& medium,
                            const SamplingGrid& grid, const Vec3& y0, ConvolutionMethod method) {
  std::vector<double> weights(data.receiver_count());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = data.receivers.weights[i] * std::sqrt(distance(data.receivers.points[i], y0));
  }
  return convolution_indicator(data, sig, medium, grid, weights, IndicatorKind::I2, method);
}

IndicatorImage normalize_image(const IndicatorImage& img) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : img.values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo <= hi)) throw Error("image has no finite value");
  IndicatorImage out = img;
  out.min = lo;
  out.max = hi;
  out.normalized = true;
  if (hi == lo) {
    out.degenerate = true;
    std::fill(out.values.begin(), out.values.end(), 0.5);
    return out;
  }
  const double range = hi - lo;
  for (double& v : out.values) v = (v - lo) / range;
  return out;
}

double relative_difference(const IndicatorImage& a, const IndicatorImage& b) {
  if (a.values.size() != b.values.size()) throw Error("images differ in size");
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t l = 0; l < a.values.size(); ++l) {
    diff = std::max(diff, std::abs(a.values[l] - b.values[l]));
    scale = std::max(scale, std::abs(b.values[l]));
  }
  if (scale == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / scale;
}

std::vector<Peak> dominant_maxima(const IndicatorImage& img, std::size_t count,
                                  double min_separation) {
  const SamplingGrid& g = img.grid;
  const int dim = g.dimension();
  const auto& counts = g.counts();
  std::vector<Peak> candidates;
  for (std::size_t l = 0; l < g.size(); ++l) {
    const auto idx = g.index(l);
    const double v = img.values[l];
    bool is_max = true;
    for (int dx = -1; dx <= 1 && is_max; ++dx) {
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dz = (dim == 3 ? -1 : 0); dz <= (dim == 3 ? 1 : 0) && is_max; ++dz) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const std::array<int, 3> nb{idx[0] + dx, idx[1] + dy, idx[2] + dz};
          bool inside = true;
          for (int a = 0; a < 3; ++a) inside = inside && nb[a] >= 0 && nb[a] < counts[a];
          if (!inside) continue;
          const std::size_t m = g.linear(nb);
          const double w = img.values[m];
          // Plateaus keep only their lowest-index point.
          if (w > v || (w == v && m < l)) is_max = false;
        }
      }
    }
    if (is_max) candidates.push_back({l, g.point(l), v});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Peak& a, const Peak& b) { return a.value > b.value; });
  std::vector<Peak> chosen;
  for (const Peak& p : candidates) {
    if (chosen.size() == count) break;
    bool far = true;
    for (const Peak& q : chosen) far = far && distance(p.point, q.point) >= min_separation;
    if (far) chosen.push_back(p);
  }
  return chosen;
}

double lemma_quadrature_deviation(const MeasurementArray& arr, const SamplingGrid& grid) {
  const double exact = 4.0 * std::numbers::pi * arr.radius;
  double worst = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const Vec3 z = grid.point(l);
    if (norm(z) > arr.radius) continue;
    const double v = surface_inverse_distance_integral(arr, z);
    worst = std::max(worst, std::abs(v - exact) / exact);
  }
  return worst;
}

void write_image_csv(const IndicatorImage& img, std::ostream& out,
                     const std::string& config_hash) {
  const SamplingGrid& g = img.grid;
  const int dim = g.dimension();
  std::string dims;
  std::string box;
  for (int a = 0; a < dim; ++a) {
    if (a) {
      dims += ',';
      box += ',';
    }
    dims += std::to_string(g.counts()[a]);
    box += fmt::format("{:.17g}..{:.17g}", g.lo()[a], g.hi()[a]);
  }
  out << "# mowave-image v1, kind=" << to_string(img.kind) << ", dims=" << dims
      << ", box=" << box;
  if (!config_hash.empty()) out << ", config=" << config_hash;
  out << '\n';
  std::string line;
  for (std::size_t l = 0; l < g.size(); ++l) {
    const Vec3 z = g.point(l);
    line.clear();
    for (int a = 0; a < dim; ++a) line += fmt::format("{:.17g},", z[a]);
    line += fmt::format("{:.17g}\n", img.values[l]);
    out << line;
  }
  if (!out) throw IoError("failed to write image");
}

void write_image_csv(const IndicatorImage& img, const std::filesystem::path& path,
                     const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_image_csv(img, out, config_hash);
}

IndicatorImage read_image_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# mowave-image v1", 0) != 0) {
    throw IoError("not a mowave-image v1 file");
  }
  auto field = [&](const std::string& key, const std::string& stop) {
    const std::string tag = key + "=";
    auto pos = header.find(tag);
    if (pos == std::string::npos) throw IoError("image header lacks '" + key + "'");
    pos += tag.size();
    const auto end = stop.empty() ? std::string::npos : header.find(stop, pos);
    return header.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
  };
  const IndicatorKind kind = parse_indicator_kind(field("kind", ","));
  const std::string dims_text = field("dims", ", box=");
  const std::string box_text = field("box", ", config=");

  std::array<int, 3> counts{1, 1, 1};
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{0, 0, 0};
  int dim = 0;
  {
    std::stringstream ss(dims_text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (dim >= 3) throw IoError("image has more than three axes");
      counts[dim++] = std::stoi(cell);
    }
  }
  {
    std::stringstream ss(box_text);
    std::string cell;
    int a = 0;
    while (std::getline(ss, cell, ',') && a < dim) {
      const auto sep = cell.find("..");
      if (sep == std::string::npos) throw IoError("bad box entry '" + cell + "'");
      lo[a] = std::stod(cell.substr(0, sep));
      hi[a] = std::stod(cell.substr(sep + 2));
      ++a;
    }
    if (a != dim) throw IoError("box does not match dims");
  }
  if (dim != 2 && dim != 3) throw IoError("image must be 2-D or 3-D");
  IndicatorImage img(SamplingGrid(dim, lo, hi, counts), kind);
  std::string line;
  for (std::size_t l = 0; l < img.grid.size(); ++l) {
    if (!std::getline(in, line)) throw IoError("image ends early");
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw IoError("bad image row");
    img.values[l] = std::stod(line.substr(comma + 1));
  }
  return img;
}

IndicatorImage read_image_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_image_csv(in);
}

}  // namespace mowave
