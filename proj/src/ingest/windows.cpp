#include <fkws/errors.hpp>
#include <fkws/ingest.hpp>

#include <algorithm>
#include <cstdlib>
#include <numeric>

namespace fkws {

RowMatrix window_at(const FeatureMatrix& features, int anchor) {
  const int first = anchor - kWindowBefore;
  if (first < 0 || anchor + kWindowAfter >= features.rows())
    throw IndexError("window anchored at " + std::to_string(anchor) + " exceeds " +
                     std::to_string(features.rows()) + " frames");
  return features.middleRows(first, static_cast<Eigen::Index>(kWindowFrames));
}

WindowSet make_windows(const FeatureMatrix& features, const ManifestEntry& entry,
                       std::size_t negatives_per_clip, std::uint64_t seed) {
  WindowSet out;
  const int frames = static_cast<int>(features.rows());
  if (frames < static_cast<int>(kWindowFrames)) {
    out.too_short = true;
    return out;
  }
  auto in_bounds = [&](int anchor) { return anchor - kWindowBefore >= 0 && anchor + kWindowAfter < frames; };
  auto emit = [&](int anchor, int label) {
    out.windows.push_back({window_at(features, anchor), label, entry.domain,
                           std::numeric_limits<std::size_t>::max(), anchor});
  };

  const bool positive = entry.polarity == Polarity::Positive;
  if (positive) {
    for (std::size_t i = 0; i < entry.word_end_frames.size(); ++i) {
      const int e = entry.word_end_frames[i];
      if (in_bounds(e)) emit(e, static_cast<int>(i + 1));
    }
  }

  std::vector<int> candidates;
  for (int a = kWindowBefore; a + kWindowAfter < frames; ++a) {
    const bool clear = std::all_of(entry.word_end_frames.begin(), entry.word_end_frames.end(),
                                   [&](int e) { return std::abs(a - e) >= kFillerExclusion; });
    if (!positive || clear) candidates.push_back(a);
  }

  // partial Fisher-Yates: the first k entries are a uniform draw without replacement
  std::mt19937_64 rng(seed);
  const std::size_t take = std::min(negatives_per_clip, candidates.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
    emit(candidates[i], 0);
  }
  return out;
}

}  // namespace fkws
