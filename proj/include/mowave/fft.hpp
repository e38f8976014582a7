#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace mowave {

/// Real-to-complex transform pair of fixed length backed by FFTW. Plans are
/// created once (estimate mode, so results are deterministic) and executed
/// on caller buffers, which makes one instance usable from many threads.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2 + 1; }

  /// `in` has size(), `out` spectrum_size() entries.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Unnormalized inverse; `in` is overwritten.
  void inverse(std::span<std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t n_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace mowave
