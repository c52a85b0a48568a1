#pragma once

// False-reject rate at a fixed false-alarm rate, via threshold sweeps.

#include <fkws/detect.hpp>
#include <fkws/ingest.hpp>
#include <fkws/models.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fkws {

struct PositiveScore {
  std::string clip_id;
  double max_confidence = 0.0;
};

/// A negative clip keeps its whole confidence trace so the refractory
/// trigger rule can be replayed at any threshold.
struct NegativeScore {
  std::string clip_id;
  std::vector<double> trace;
};

struct ScoredSet {
  std::vector<PositiveScore> positives;
  std::vector<NegativeScore> negatives;
  double negative_audio_hours = 0.0;
  std::size_t refractory = 100;  // T_s
};

struct OperatingPoint {
  double threshold = 0.0;
  double fa_per_hour = 0.0;
  double fr_rate = 0.0;
  std::size_t false_alarms = 0;
  std::size_t false_rejects = 0;
};

/// stream_detect events at `threshold`, summed over the negatives.
std::size_t false_alarms(const ScoredSet& scored, double threshold);

/// n uniform points over [0, 1].
std::vector<double> default_grid(std::size_t points = 1001);

/// Throws ValidationError on empty positives/negatives, nonpositive hours or
/// an unsorted grid.
std::vector<OperatingPoint> sweep(const ScoredSet& scored, std::span<const double> grid);

struct FrAtFa {
  OperatingPoint point;
  bool saturated = false;  // no threshold met the target; point is the last one
  std::optional<OperatingPoint> below;  // the neighbor at the next lower threshold
  std::optional<OperatingPoint> above;
};

FrAtFa fr_at_fa(std::span<const OperatingPoint> points, double target_fa = 1.0);

/// "threshold,fa_per_hour,fr_rate", one row per point in threshold order.
std::string det_points_csv(std::span<const OperatingPoint> points);
void write_det_points(const std::filesystem::path& path, std::span<const OperatingPoint> points);

// ---- scoring helpers -----------------------------------------------------------

/// Confidence trace of one utterance through the frame posteriors.
std::vector<double> score_utterance(const KeywordNet& net, const FeatureMatrix& features,
                                    const DetectorConfig& config, const KeywordSpec& spec,
                                    const DomainEmbedding* embedding = nullptr);

struct ScoredClip {
  std::string clip_id;
  Polarity polarity = Polarity::Negative;
  double seconds = 0.0;
  std::vector<double> trace;
};

ScoredSet make_scored_set(std::span<const ScoredClip> clips, std::size_t refractory);

/// Argmax accuracy of the word head over labeled windows. `embeddings` is
/// indexed by TrainingWindow::source and must be given for EMB variants.
double window_accuracy(const KeywordNet& net, std::span<const TrainingWindow> windows,
                       std::span<const DomainEmbedding> embeddings = {});

/// MTL domain-head accuracy over windows.
double domain_head_accuracy(const KeywordNet& net, std::span<const TrainingWindow> windows);

/// Feature-layer (fc1 post-ReLU) rows for each window.
RowMatrix feature_layer_rows(const KeywordNet& net, std::span<const TrainingWindow> windows,
                             std::span<const DomainEmbedding> embeddings = {});

}  // namespace fkws
