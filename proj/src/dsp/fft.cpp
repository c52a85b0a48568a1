#include <fkws/dsp.hpp>
#include <fkws/errors.hpp>

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace fkws {
namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Impl {
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft::RealFft(std::size_t size) : size_(size), impl_(std::make_unique<Impl>()) {
  if (size == 0) throw ShapeError("FFT size must be positive");
  std::lock_guard lock(planner_mutex());
  const int n = static_cast<int>(size);
  impl_->real = fftw_alloc_real(size);
  impl_->spectrum = fftw_alloc_complex(size / 2 + 1);
  // ESTIMATE plans are chosen without timing, so results are reproducible.
  impl_->forward = fftw_plan_dft_r2c_1d(n, impl_->real, impl_->spectrum, FFTW_ESTIMATE);
  impl_->inverse = fftw_plan_dft_c2r_1d(n, impl_->spectrum, impl_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->forward);
  fftw_destroy_plan(impl_->inverse);
  fftw_free(impl_->real);
  fftw_free(impl_->spectrum);
}

std::vector<std::complex<double>> RealFft::forward(std::span<const double> input) {
  const std::size_t n = std::min(input.size(), size_);
  std::copy_n(input.begin(), n, impl_->real);
  std::fill(impl_->real + n, impl_->real + size_, 0.0);
  fftw_execute(impl_->forward);
  std::vector<std::complex<double>> out(size_ / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {impl_->spectrum[k][0], impl_->spectrum[k][1]};
  return out;
}

std::vector<double> RealFft::inverse(std::span<const std::complex<double>> spectrum) {
  if (spectrum.size() != size_ / 2 + 1) throw ShapeError("inverse FFT expects size/2+1 bins");
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    impl_->spectrum[k][0] = spectrum[k].real();
    impl_->spectrum[k][1] = spectrum[k].imag();
  }
  fftw_execute(impl_->inverse);  // c2r overwrites the spectrum buffer
  std::vector<double> out(impl_->real, impl_->real + size_);
  for (double& x : out) x /= static_cast<double>(size_);
  return out;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::size_t n = 1;
  while (n < out_len) n <<= 1;
  RealFft fft(n);
  auto fa = fft.forward(a);
  const auto fb = fft.forward(b);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  auto out = fft.inverse(fa);
  out.resize(out_len);
  return out;
}

}  // namespace fkws
