#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vocalfit::detail {

// Thin FFTW wrapper. Plans are created under a global lock and cached per
// thread and size; execution uses the new-array interface so one plan serves
// any aligned buffers.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }

  // n real samples -> n/2 + 1 bins.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // n/2 + 1 bins -> n real samples, unnormalised (scaled by n).
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_;
  std::complex<double>* spec_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Per-thread cached instance for size n.
RealFft& real_fft(std::size_t n);

std::size_t next_pow2(std::size_t n) noexcept;

}  // namespace vocalfit::detail
