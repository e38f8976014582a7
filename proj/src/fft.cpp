#include <mowave/fft.hpp>

#include <mutex>
#include <vector>

#include <fftw3.h>

#include <mowave/errors.hpp>

namespace mowave {

namespace {

// FFTW planning is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw ConfigError("transform length must be at least 2", "fft.size");
  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  const int len = static_cast<int>(n);
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c_1d(len, real.data(), cplx, FFTW_ESTIMATE | FFTW_UNALIGNED);
  inverse_plan_ = fftw_plan_dft_c2r_1d(len, cplx, real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!forward_plan_ || !inverse_plan_) throw Error("FFT planning failed");
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<std::complex<double>> in, std::span<double> out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

}  // namespace mowave
