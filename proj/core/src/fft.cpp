#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include "vocalfit/error.hpp"

namespace vocalfit::detail {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw Error(Errc::InvalidArgument, "FFT size must be at least 2");
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(n);
  spec_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(n / 2 + 1));
  auto* spec = reinterpret_cast<fftw_complex*>(spec_);
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_);
  fftw_free(spec_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::size_t m = std::min(in.size(), n_);
  std::copy_n(in.begin(), m, real_);
  std::fill(real_ + m, real_ + n_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  std::copy_n(spec_, std::min(out.size(), n_ / 2 + 1), out.begin());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  std::size_t bins = n_ / 2 + 1;
  std::size_t m = std::min(in.size(), bins);
  std::copy_n(in.begin(), m, spec_);
  std::fill(spec_ + m, spec_ + bins, std::complex<double>{});
  // c2r destroys its input, which is our own scratch buffer.
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  std::copy_n(real_, std::min(out.size(), n_), out.begin());
}

RealFft& real_fft(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace vocalfit::detail
