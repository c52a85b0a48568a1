#pragma once

// Log-Mel filterbank frontend.
//
// pre-emphasis -> 25 ms frames / 10 ms hop -> Hamming -> 512-point real DFT
// -> |X|^2 -> triangular Mel filters (HTK mel scale) -> natural log with floor.

#include <fkws/audio.hpp>
#include <fkws/types.hpp>

#include <complex>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace fkws {

/// T x num_bins log energies, one row per 10 ms frame.
using FeatureMatrix = RowMatrix;

inline constexpr std::size_t kNumMelBins = 40;

struct FrontendConfig {
  int sample_rate = kSampleRate;
  std::size_t frame_length = 400;
  std::size_t frame_shift = 160;
  std::size_t fft_size = 512;
  std::size_t num_bins = kNumMelBins;
  double preemphasis = 0.97;
  double low_hz = 20.0;
  double high_hz = 7600.0;
  double log_floor = 1e-10;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// floor((N - frame_length) / frame_shift) + 1, or 0 when N < frame_length.
std::size_t num_frames(std::size_t num_samples, const FrontendConfig& cfg = {});

/// Center frequency (Hz) of each Mel filter.
std::vector<double> mel_center_frequencies(const FrontendConfig& cfg = {});

/// Filter weights, num_bins x (fft_size/2 + 1).
RowMatrix mel_filterbank(const FrontendConfig& cfg = {});

std::vector<double> hamming_window(std::size_t length);

/// Throws TooShortError when fewer than frame_length samples are given.
FeatureMatrix compute_fbank(std::span<const double> samples, const FrontendConfig& cfg = {});
FeatureMatrix compute_fbank(const AudioClip& clip, const FrontendConfig& cfg = {});

/// Real-input FFT of a fixed size backed by an FFTW plan.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return size_; }
  /// input is zero-padded or truncated to size(); returns size()/2 + 1 bins.
  std::vector<std::complex<double>> forward(std::span<const double> input);
  /// Inverse of forward (unnormalized by FFTW; this divides by size()).
  std::vector<double> inverse(std::span<const std::complex<double>> spectrum);

 private:
  struct Impl;
  std::size_t size_;
  std::unique_ptr<Impl> impl_;
};

/// Linear convolution via FFT; output length a.size() + b.size() - 1.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

// Feature cache: "FKWSFEAT", u32 version, u32 T, u32 bins, T*bins f32 LE.
inline constexpr std::uint32_t kFeatureCacheVersion = 1;
void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& features);
FeatureMatrix read_feature_cache(const std::filesystem::path& path);

}  // namespace fkws
