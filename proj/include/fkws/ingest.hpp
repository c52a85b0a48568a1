#pragma once

#include <fkws/audio.hpp>
#include <fkws/dsp.hpp>
#include <fkws/types.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fkws {

// ---- WAV ---------------------------------------------------------------------

/// RIFF/WAVE PCM16 mono 16 kHz only. Samples are scaled by 1/32768.
AudioClip read_wav(const std::filesystem::path& path);
/// Writes PCM16 mono; samples are rounded to the nearest k/32768 and clamped.
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate = kSampleRate);

// ---- manifests ---------------------------------------------------------------

inline constexpr std::size_t kDefaultWordCount = 3;

struct ManifestEntry {
  std::string path;
  DomainTag domain = DomainTag::D025;
  Polarity polarity = Polarity::Negative;
  std::vector<int> word_end_frames;  // M entries iff positive

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// One JSON object per line: {"path","domain","polarity","ends"}. Blank
/// lines are skipped. Missing fields raise ParseError naming the line;
/// non-increasing or miscounted ends raise ValidationError.
std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path,
                                          std::size_t word_count = kDefaultWordCount);
std::vector<ManifestEntry> parse_manifest_text(const std::string& text,
                                               std::size_t word_count = kDefaultWordCount);
std::string manifest_line(const ManifestEntry& entry);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

// ---- training windows --------------------------------------------------------

inline constexpr std::size_t kWindowFrames = 40;
/// A word ending at frame e owns frames [e - 20, e + 19].
inline constexpr int kWindowBefore = 20;
inline constexpr int kWindowAfter = 19;
/// Filler anchors stay at least this far from every word end.
inline constexpr int kFillerExclusion = 50;

struct TrainingWindow {
  RowMatrix features;  // 40 x 40
  int word_label = 0;  // 0 = filler, 1..M = keyword word
  DomainTag domain = DomainTag::D025;
  /// Index of the source utterance in whatever list produced the window.
  std::size_t source = std::numeric_limits<std::size_t>::max();
  int anchor = 0;  // the frame e of [e-20, e+19]
};

struct WindowSet {
  std::vector<TrainingWindow> windows;
  bool too_short = false;  // features had fewer than 40 frames
};

/// Copies frames [anchor-20, anchor+19]; the caller guarantees bounds.
RowMatrix window_at(const FeatureMatrix& features, int anchor);

/// Keyword windows for positive entries (out-of-bounds ones are discarded)
/// plus up to `negatives_per_clip` filler windows at distinct anchors drawn
/// uniformly from the admissible set.
WindowSet make_windows(const FeatureMatrix& features, const ManifestEntry& entry,
                       std::size_t negatives_per_clip, std::uint64_t seed);

// ---- synthetic three-domain corpus -------------------------------------------

struct SynthCounts {
  std::array<std::size_t, kNumDomains> positives{};
  std::array<std::size_t, kNumDomains> negatives{};

  static SynthCounts uniform(std::size_t positives, std::size_t negatives);
};

struct SynthOptions {
  double clip_seconds = 1.6;
  /// Background floor present in every domain, including the "clean" one.
  double noise_floor_std = 1e-4;
  std::string id_prefix = "clip";
};

/// Acoustic parameters of one simulated recording distance.
struct DomainAcoustics {
  double rt60_seconds = 0.0;  // 0 = no reverberation
  double snr_db = std::numeric_limits<double>::infinity();
  double attenuation_db = 0.0;
  double reverb_ratio = 1.0;  // tail energy relative to the direct path
};

DomainAcoustics acoustics_for(DomainTag domain);

/// A clean source signal before domain rendering.
struct CleanSource {
  std::vector<double> samples;
  std::vector<int> word_end_frames;  // empty for negatives
  std::vector<std::size_t> word_end_samples;
};

/// Deterministic given its arguments. Sources with equal (seed, polarity,
/// index) are shared across domains, giving parallel recordings.
CleanSource synth_source(std::uint64_t seed, Polarity polarity, std::size_t index,
                         const SynthOptions& options = {});

/// Reverberation, additive white noise and attenuation for `domain`;
/// the output has the same length as `clean` and is quantized to PCM16.
std::vector<double> render_domain(std::span<const double> clean, DomainTag domain,
                                  std::uint64_t seed, const SynthOptions& options = {});

struct SynthCorpus {
  std::vector<AudioClip> clips;
  std::vector<ManifestEntry> manifest;  // manifest[i] describes clips[i]; path = clip_id + ".wav"
};

/// Throws ValidationError if any domain/polarity cell count is zero.
SynthCorpus synth_corpus(std::uint64_t seed, const SynthCounts& counts,
                         const SynthOptions& options = {});

/// Same clips and order as synth_corpus, handed over one at a time.
void for_each_synth_clip(std::uint64_t seed, const SynthCounts& counts, const SynthOptions& options,
                         const std::function<void(AudioClip&&, ManifestEntry&&)>& sink);

/// 64-bit mixing used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace fkws
