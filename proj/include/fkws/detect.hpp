#pragma once

// Posterior smoothing, order-constrained keyword confidence and a streaming
// trigger with refractory suppression.

#include <fkws/types.hpp>

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace fkws {

/// Word class indices w_1..w_M into the M+1 network outputs (0 = filler).
struct KeywordSpec {
  std::vector<std::size_t> words;

  /// w_i = i for i = 1..M.
  static KeywordSpec sequential(std::size_t m);
  std::size_t size() const noexcept { return words.size(); }
  /// Throws ConfigError on repeated, filler or out-of-range indices.
  void validate(std::size_t classes) const;
};

struct DetectorConfig {
  std::size_t smoothing = 30;  // L
  std::size_t window = 100;    // T_s
  double threshold = 0.5;

  /// Throws ConfigError unless L >= 1 and M <= T_s.
  void validate(const KeywordSpec& spec) const;
};

struct TriggerEvent {
  std::size_t frame = 0;  // posterior row of the last frame of the scoring window
  double confidence = 0.0;

  friend bool operator==(const TriggerEvent&, const TriggerEvent&) = default;
};

/// s[t] = mean of p[j] over the last min(L, t+1) rows ending at t.
RowMatrix smooth(const RowMatrix& posteriors, std::size_t length);

/// h = (max over t_1 < ... < t_M of prod s_{w_i}(t_i))^(1/M) over all rows of
/// `window`, by the O(M T_s) prefix-max recurrence. Throws WindowTooShortError
/// when the window has fewer than M rows.
double confidence(Eigen::Ref<const RowMatrix> window, const KeywordSpec& spec);

/// Exhaustive enumeration of the same maximum. Throws OracleRangeError
/// beyond T_s = 16 or M = 4.
double confidence_bruteforce(Eigen::Ref<const RowMatrix> window, const KeywordSpec& spec);

/// Confidence of every T_s window over the smoothed sequence; entry k covers
/// rows [k, k + T_s). Throws SequenceTooShortError when T < T_s.
std::vector<double> confidence_trace(const RowMatrix& posteriors, const DetectorConfig& config,
                                     const KeywordSpec& spec);

/// Fires on every trace entry >= threshold that is at least `refractory`
/// entries after the previous event.
std::vector<TriggerEvent> triggers_from_trace(std::span<const double> trace, double threshold,
                                              std::size_t refractory, std::size_t frame_offset = 0);

/// Smooths once, slides the T_s window one frame at a time and suppresses
/// further events for T_s frames after each trigger.
std::vector<TriggerEvent> stream_detect(const RowMatrix& posteriors, const DetectorConfig& config,
                                        const KeywordSpec& spec);

/// CSV "frame,h": one row per trace entry, frame = index of the window end.
void write_score_dump(const std::filesystem::path& path, std::span<const double> trace, std::size_t window);

}  // namespace fkws
