#include <fkws/errors.hpp>
#include <fkws/eval.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fkws {

std::size_t false_alarms(const ScoredSet& scored, double threshold) {
  std::size_t n = 0;
  for (const NegativeScore& neg : scored.negatives)
    n += triggers_from_trace(neg.trace, threshold, scored.refractory).size();
  return n;
}

std::vector<double> default_grid(std::size_t points) {
  if (points < 2) throw ConfigError("threshold grid needs at least 2 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

std::vector<OperatingPoint> sweep(const ScoredSet& scored, std::span<const double> grid) {
  if (scored.positives.empty()) throw ValidationError("sweep needs positive clips");
  if (scored.negatives.empty()) throw ValidationError("sweep needs negative clips");
  if (!(scored.negative_audio_hours > 0.0)) throw ValidationError("negative audio duration must be positive");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ValidationError("threshold grid must be ascending");

  std::vector<double> pos;
  for (const PositiveScore& p : scored.positives) pos.push_back(p.max_confidence);
  std::sort(pos.begin(), pos.end());

  std::vector<OperatingPoint> out;
  out.reserve(grid.size());
  for (double theta : grid) {
    OperatingPoint op;
    op.threshold = theta;
    op.false_alarms = false_alarms(scored, theta);
    op.fa_per_hour = static_cast<double>(op.false_alarms) / scored.negative_audio_hours;
    op.false_rejects = static_cast<std::size_t>(std::lower_bound(pos.begin(), pos.end(), theta) - pos.begin());
    op.fr_rate = static_cast<double>(op.false_rejects) / static_cast<double>(pos.size());
    out.push_back(op);
  }
  return out;
}

FrAtFa fr_at_fa(std::span<const OperatingPoint> points, double target_fa) {
  if (points.empty()) throw ValidationError("no operating points");
  FrAtFa r;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].fa_per_hour <= target_fa) {
      r.point = points[i];
      if (i > 0) r.below = points[i - 1];
      if (i + 1 < points.size()) r.above = points[i + 1];
      return r;
    }
  }
  r.saturated = true;
  r.point = points.back();
  if (points.size() > 1) r.below = points[points.size() - 2];
  return r;
}

std::string det_points_csv(std::span<const OperatingPoint> points) {
  std::string out = "threshold,fa_per_hour,fr_rate\n";
  char buf[96];
  for (const OperatingPoint& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f,%.9g,%.9g\n", p.threshold, p.fa_per_hour, p.fr_rate);
    out += buf;
  }
  return out;
}

void write_det_points(const std::filesystem::path& path, std::span<const OperatingPoint> points) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << det_points_csv(points);
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<double> score_utterance(const KeywordNet& net, const FeatureMatrix& features,
                                    const DetectorConfig& config, const KeywordSpec& spec,
                                    const DomainEmbedding* embedding) {
  return confidence_trace(frame_posteriors(net, features, embedding), config, spec);
}

ScoredSet make_scored_set(std::span<const ScoredClip> clips, std::size_t refractory) {
  ScoredSet s;
  s.refractory = refractory;
  double seconds = 0.0;
  for (const ScoredClip& c : clips) {
    if (c.polarity == Polarity::Positive) {
      const double h = c.trace.empty() ? 0.0 : *std::max_element(c.trace.begin(), c.trace.end());
      s.positives.push_back({c.clip_id, h});
    } else {
      s.negatives.push_back({c.clip_id, c.trace});
      seconds += c.seconds;
    }
  }
  s.negative_audio_hours = seconds / 3600.0;
  return s;
}

namespace {

const DomainEmbedding* embedding_for(const KeywordNet& net, const TrainingWindow& w,
                                     std::span<const DomainEmbedding> embeddings) {
  if (!uses_embedding(net.variant)) return nullptr;
  if (w.source >= embeddings.size()) throw ConfigError("missing domain embedding for an evaluation window");
  return &embeddings[w.source];
}

std::size_t argmax(const Tensor& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[best]) best = i;
  return best;
}

}  // namespace

double window_accuracy(const KeywordNet& net, std::span<const TrainingWindow> windows,
                       std::span<const DomainEmbedding> embeddings) {
  if (windows.empty()) throw ValidationError("accuracy over an empty window set");
  std::size_t hits = 0;
  for (const TrainingWindow& w : windows) {
    const ForwardRecord r = forward_keyword(net, w.features, embedding_for(net, w, embeddings));
    hits += argmax(r.word_logits) == static_cast<std::size_t>(w.word_label);
  }
  return static_cast<double>(hits) / static_cast<double>(windows.size());
}

double domain_head_accuracy(const KeywordNet& net, std::span<const TrainingWindow> windows) {
  if (net.variant != Variant::Mtl) throw ConfigError("only MTL nets have a domain head");
  if (windows.empty()) throw ValidationError("accuracy over an empty window set");
  std::size_t hits = 0;
  for (const TrainingWindow& w : windows) {
    const ForwardRecord r = forward_keyword(net, w.features);
    hits += argmax(*r.domain_logits) == index_of(w.domain);
  }
  return static_cast<double>(hits) / static_cast<double>(windows.size());
}

RowMatrix feature_layer_rows(const KeywordNet& net, std::span<const TrainingWindow> windows,
                             std::span<const DomainEmbedding> embeddings) {
  RowMatrix out(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(net.config.fc1_width));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const ForwardRecord r = forward_keyword(net, windows[i].features, embedding_for(net, windows[i], embeddings));
    out.row(static_cast<Eigen::Index>(i)) = r.feature_layer.vector().transpose();
  }
  return out;
}

}  // namespace fkws
