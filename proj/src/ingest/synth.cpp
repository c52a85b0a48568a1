#include <fkws/errors.hpp>
#include <fkws/ingest.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

namespace fkws {
namespace {

struct Chirp {
  double f_start, f_end;
};

// The keyword: three rising/falling chirps in a fixed order.
constexpr std::array<Chirp, kDefaultWordCount> kKeywordWords{{{500.0, 850.0}, {1700.0, 1200.0}, {1000.0, 2600.0}}};

constexpr double kHarmonicGain = 0.35;
constexpr double kFadeSeconds = 0.01;

void add_chirp(std::vector<double>& out, std::size_t start, std::size_t length, Chirp c, double amplitude) {
  const double fs = kSampleRate;
  const double dur = static_cast<double>(length) / fs;
  const auto fade = static_cast<std::size_t>(kFadeSeconds * fs);
  for (std::size_t n = 0; n < length && start + n < out.size(); ++n) {
    const double t = static_cast<double>(n) / fs;
    const double phase = 2.0 * std::numbers::pi * (c.f_start * t + (c.f_end - c.f_start) * t * t / (2.0 * dur));
    double env = 1.0;
    if (n < fade) env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n) / static_cast<double>(fade));
    if (length - n <= fade)
      env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(length - n) / static_cast<double>(fade)));
    out[start + n] += amplitude * env * (std::sin(phase) + kHarmonicGain * std::sin(2.0 * phase));
  }
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t seconds_to_samples(double s) { return static_cast<std::size_t>(std::lround(s * kSampleRate)); }

double quantize(double x) { return std::clamp(std::round(x * 32768.0), -32768.0, 32767.0) / 32768.0; }

std::vector<double> impulse_response(const DomainAcoustics& a, std::mt19937_64& rng) {
  const std::size_t n = std::max<std::size_t>(1, seconds_to_samples(a.rt60_seconds));
  std::vector<double> h(n, 0.0);
  h[0] = 1.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  double tail_energy = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    // -60 dB after rt60 seconds
    h[k] = gauss(rng) * std::pow(10.0, -3.0 * static_cast<double>(k) / static_cast<double>(n));
    tail_energy += h[k] * h[k];
  }
  if (tail_energy > 0.0) {
    const double g = std::sqrt(a.reverb_ratio / tail_energy);
    for (std::size_t k = 1; k < n; ++k) h[k] *= g;
  }
  double energy = 0.0;
  for (double v : h) energy += v * v;
  for (double& v : h) v /= std::sqrt(energy);
  return h;
}

const char* domain_slug(DomainTag d) {
  switch (d) {
    case DomainTag::D025: return "025";
    case DomainTag::D1M: return "1m";
    case DomainTag::D3M: return "3m";
  }
  return "x";
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SynthCounts SynthCounts::uniform(std::size_t positives, std::size_t negatives) {
  SynthCounts c;
  c.positives.fill(positives);
  c.negatives.fill(negatives);
  return c;
}

DomainAcoustics acoustics_for(DomainTag domain) {
  switch (domain) {
    case DomainTag::D025: return {};
    case DomainTag::D1M: return {0.2, 20.0, 0.0, 1.0};
    case DomainTag::D3M: return {0.5, 10.0, 6.0, 1.0};
  }
  return {};
}

CleanSource synth_source(std::uint64_t seed, Polarity polarity, std::size_t index, const SynthOptions& options) {
  std::mt19937_64 rng(mix_seed(seed, (static_cast<std::uint64_t>(polarity) << 40) ^ index));
  const std::size_t total = seconds_to_samples(options.clip_seconds);
  CleanSource src;
  src.samples.assign(total, 0.0);

  if (polarity == Polarity::Positive) {
    const double pitch = uniform(rng, 0.92, 1.08);
    const double amplitude = uniform(rng, 0.25, 0.55);
    std::array<std::size_t, kDefaultWordCount> lengths{};
    std::array<std::size_t, kDefaultWordCount - 1> gaps{};
    for (auto& l : lengths) l = seconds_to_samples(uniform(rng, 0.18, 0.26));
    for (auto& g : gaps) g = seconds_to_samples(uniform(rng, 0.04, 0.10));
    std::size_t span = 0;
    for (auto l : lengths) span += l;
    for (auto g : gaps) span += g;
    // keep 0.25 s on both sides so every keyword window fits in the clip
    const std::size_t margin = seconds_to_samples(0.25);
    if (total < span + 2 * margin) throw ConfigError("clip too short for the keyword schedule");
    std::size_t pos = std::uniform_int_distribution<std::size_t>(margin, total - span - margin)(rng);
    for (std::size_t w = 0; w < kDefaultWordCount; ++w) {
      const Chirp c{kKeywordWords[w].f_start * pitch, kKeywordWords[w].f_end * pitch};
      add_chirp(src.samples, pos, lengths[w], c, amplitude * uniform(rng, 0.85, 1.15));
      pos += lengths[w];
      src.word_end_samples.push_back(pos);
      src.word_end_frames.push_back(static_cast<int>(pos / 160));
      if (w + 1 < kDefaultWordCount) pos += gaps[w];
    }
  } else {
    const int segments = std::uniform_int_distribution<int>(2, 4)(rng);
    // at most one keyword word may appear, never the full ordered sequence
    const int keyword_slot = uniform(rng, 0.0, 1.0) < 0.3 ? std::uniform_int_distribution<int>(0, segments - 1)(rng) : -1;
    std::size_t pos = seconds_to_samples(uniform(rng, 0.05, 0.3));
    for (int s = 0; s < segments && pos < total; ++s) {
      const std::size_t len = seconds_to_samples(uniform(rng, 0.12, 0.30));
      Chirp c{uniform(rng, 300.0, 3400.0), uniform(rng, 300.0, 3400.0)};
      if (s == keyword_slot) {
        const auto w = std::uniform_int_distribution<std::size_t>(0, kDefaultWordCount - 1)(rng);
        const double pitch = uniform(rng, 0.92, 1.08);
        c = {kKeywordWords[w].f_start * pitch, kKeywordWords[w].f_end * pitch};
      }
      add_chirp(src.samples, pos, len, c, uniform(rng, 0.2, 0.55));
      pos += len + seconds_to_samples(uniform(rng, 0.03, 0.25));
    }
  }
  for (double& x : src.samples) x = quantize(x);
  return src;
}

std::vector<double> render_domain(std::span<const double> clean, DomainTag domain, std::uint64_t seed,
                                  const SynthOptions& options) {
  const DomainAcoustics a = acoustics_for(domain);
  std::mt19937_64 rng(seed);
  std::vector<double> y(clean.begin(), clean.end());

  if (a.rt60_seconds > 0.0) {
    const auto h = impulse_response(a, rng);
    y = fft_convolve(clean, h);
    y.resize(clean.size());
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (std::isfinite(a.snr_db) && !y.empty()) {
    double power = 0.0;
    for (double v : y) power += v * v;
    power /= static_cast<double>(y.size());
    const double sigma = std::sqrt(power / std::pow(10.0, a.snr_db / 10.0));
    for (double& v : y) v += sigma * gauss(rng);
  }
  for (double& v : y) v += options.noise_floor_std * gauss(rng);
  const double gain = std::pow(10.0, -a.attenuation_db / 20.0);
  for (double& v : y) v = quantize(std::clamp(v * gain, -1.0, 1.0));
  return y;
}

void for_each_synth_clip(std::uint64_t seed, const SynthCounts& counts, const SynthOptions& options,
                         const std::function<void(AudioClip&&, ManifestEntry&&)>& sink) {
  for (DomainTag d : kAllDomains) {
    if (counts.positives[index_of(d)] == 0 || counts.negatives[index_of(d)] == 0)
      throw ValidationError("synth counts must be >= 1 for every domain/polarity cell (domain " +
                            std::string(to_string(d)) + ")");
  }
  for (DomainTag d : kAllDomains) {
    for (Polarity p : {Polarity::Positive, Polarity::Negative}) {
      const std::size_t n = p == Polarity::Positive ? counts.positives[index_of(d)] : counts.negatives[index_of(d)];
      for (std::size_t i = 0; i < n; ++i) {
        const CleanSource src = synth_source(seed, p, i, options);
        const std::uint64_t render_seed =
            mix_seed(seed, 0x5eed0000ULL + (index_of(d) << 48) + (static_cast<std::uint64_t>(p) << 40) + i);
        AudioClip clip;
        clip.samples = render_domain(src.samples, d, render_seed, options);
        clip.domain = d;
        clip.polarity = p;
        char id[64];
        std::snprintf(id, sizeof id, "%s_%s_%s_%05zu", options.id_prefix.c_str(), domain_slug(d),
                      p == Polarity::Positive ? "pos" : "neg", i);
        clip.clip_id = id;
        ManifestEntry entry{clip.clip_id + ".wav", d, p, src.word_end_frames};
        sink(std::move(clip), std::move(entry));
      }
    }
  }
}

SynthCorpus synth_corpus(std::uint64_t seed, const SynthCounts& counts, const SynthOptions& options) {
  SynthCorpus corpus;
  for_each_synth_clip(seed, counts, options, [&corpus](AudioClip&& clip, ManifestEntry&& entry) {
    corpus.clips.push_back(std::move(clip));
    corpus.manifest.push_back(std::move(entry));
  });
  return corpus;
}

}  // namespace fkws
