#include <fkws/dsp.hpp>
#include <fkws/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fkws {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t num_frames(std::size_t num_samples, const FrontendConfig& cfg) {
  if (num_samples < cfg.frame_length) return 0;
  return (num_samples - cfg.frame_length) / cfg.frame_shift + 1;
}

std::vector<double> mel_center_frequencies(const FrontendConfig& cfg) {
  const double lo = hz_to_mel(cfg.low_hz), hi = hz_to_mel(cfg.high_hz);
  const double step = (hi - lo) / static_cast<double>(cfg.num_bins + 1);
  std::vector<double> centers(cfg.num_bins);
  for (std::size_t m = 0; m < cfg.num_bins; ++m) centers[m] = mel_to_hz(lo + step * static_cast<double>(m + 1));
  return centers;
}

RowMatrix mel_filterbank(const FrontendConfig& cfg) {
  const std::size_t bins = cfg.fft_size / 2 + 1;
  const double lo = hz_to_mel(cfg.low_hz), hi = hz_to_mel(cfg.high_hz);
  const double step = (hi - lo) / static_cast<double>(cfg.num_bins + 1);
  const double bin_hz = static_cast<double>(cfg.sample_rate) / static_cast<double>(cfg.fft_size);

  RowMatrix fb = RowMatrix::Zero(static_cast<Eigen::Index>(cfg.num_bins), static_cast<Eigen::Index>(bins));
  for (std::size_t m = 0; m < cfg.num_bins; ++m) {
    const double left = lo + step * static_cast<double>(m);
    const double center = left + step;
    const double right = center + step;
    for (std::size_t k = 0; k < bins; ++k) {
      const double mel = hz_to_mel(bin_hz * static_cast<double>(k));
      double w = 0.0;
      if (mel > left && mel <= center) w = (mel - left) / (center - left);
      else if (mel > center && mel < right) w = (right - mel) / (right - center);
      fb(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = w;
    }
  }
  return fb;
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(length - 1));
  return w;
}

FeatureMatrix compute_fbank(std::span<const double> samples, const FrontendConfig& cfg) {
  const std::size_t frames = num_frames(samples.size(), cfg);
  if (frames == 0)
    throw TooShortError("clip has " + std::to_string(samples.size()) + " samples, need at least " +
                        std::to_string(cfg.frame_length));
  if (cfg.fft_size < cfg.frame_length) throw ConfigError("fft_size smaller than frame_length");

  // Only samples that belong to some complete frame are read.
  const std::size_t used = (frames - 1) * cfg.frame_shift + cfg.frame_length;
  std::vector<double> emph(used);
  emph[0] = samples[0];
  for (std::size_t n = 1; n < used; ++n) emph[n] = samples[n] - cfg.preemphasis * samples[n - 1];

  const auto window = hamming_window(cfg.frame_length);
  const RowMatrix filters = mel_filterbank(cfg);
  const std::size_t bins = cfg.fft_size / 2 + 1;
  RealFft fft(cfg.fft_size);

  FeatureMatrix out(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(cfg.num_bins));
  std::vector<double> frame(cfg.frame_length);
  Eigen::VectorXd power(static_cast<Eigen::Index>(bins));
  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = emph.data() + t * cfg.frame_shift;
    for (std::size_t n = 0; n < cfg.frame_length; ++n) frame[n] = src[n] * window[n];
    const auto spec = fft.forward(frame);
    for (std::size_t k = 0; k < bins; ++k) power(static_cast<Eigen::Index>(k)) = std::norm(spec[k]);
    const Eigen::VectorXd energies = filters * power;
    for (std::size_t m = 0; m < cfg.num_bins; ++m) {
      const double e = energies(static_cast<Eigen::Index>(m));
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m)) = std::log(std::max(e, cfg.log_floor));
    }
  }
  return out;
}

FeatureMatrix compute_fbank(const AudioClip& clip, const FrontendConfig& cfg) {
  if (clip.sample_rate != cfg.sample_rate)
    throw UnsupportedFormatError("clip sample rate " + std::to_string(clip.sample_rate) + " Hz");
  return compute_fbank(std::span<const double>(clip.samples), cfg);
}

}  // namespace fkws
