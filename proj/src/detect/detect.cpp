#include <fkws/detect.hpp>
#include <fkws/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace fkws {

KeywordSpec KeywordSpec::sequential(std::size_t m) {
  KeywordSpec s;
  for (std::size_t i = 1; i <= m; ++i) s.words.push_back(i);
  return s;
}

void KeywordSpec::validate(std::size_t classes) const {
  if (words.empty()) throw ConfigError("keyword spec has no words");
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i] == 0) throw ConfigError("keyword word index 0 is the filler class");
    if (words[i] >= classes)
      throw ConfigError("keyword word index " + std::to_string(words[i]) + " >= " + std::to_string(classes) +
                        " classes");
    for (std::size_t j = 0; j < i; ++j)
      if (words[j] == words[i]) throw ConfigError("keyword word indices must be distinct");
  }
}

void DetectorConfig::validate(const KeywordSpec& spec) const {
  if (smoothing == 0) throw ConfigError("smoothing length must be >= 1");
  if (window < spec.size()) throw ConfigError("scoring window shorter than the keyword");
}

RowMatrix smooth(const RowMatrix& p, std::size_t length) {
  if (length == 0) throw ConfigError("smoothing length must be >= 1");
  const Eigen::Index t_len = p.rows();
  const auto l = static_cast<Eigen::Index>(length);
  RowMatrix s(t_len, p.cols());
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Eigen::Index first = std::max<Eigen::Index>(0, t - l + 1);
    s.row(t) = p.middleRows(first, t - first + 1).colwise().mean();
  }
  return s;
}

double confidence(Eigen::Ref<const RowMatrix> window, const KeywordSpec& spec) {
  const std::size_t m = spec.size();
  const auto t_len = static_cast<std::size_t>(window.rows());
  if (m == 0) throw ConfigError("keyword spec has no words");
  if (t_len < m)
    throw WindowTooShortError("scoring window of " + std::to_string(t_len) + " frames holds fewer than " +
                              std::to_string(m) + " words");
  for (std::size_t w : spec.words)
    if (w >= static_cast<std::size_t>(window.cols())) throw IndexError("word index beyond posterior columns");

  // b[t] = best product of words 1..i with word i at frame t
  std::vector<double> b(t_len), next(t_len);
  for (std::size_t t = 0; t < t_len; ++t) b[t] = window(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(spec.words[0]));
  for (std::size_t i = 1; i < m; ++i) {
    const auto col = static_cast<Eigen::Index>(spec.words[i]);
    double prefix = 0.0;  // max over t' < t
    for (std::size_t t = 0; t < t_len; ++t) {
      next[t] = t < i ? 0.0 : window(static_cast<Eigen::Index>(t), col) * prefix;
      prefix = std::max(prefix, b[t]);
    }
    std::swap(b, next);
  }
  const double best = *std::max_element(b.begin() + static_cast<std::ptrdiff_t>(m - 1), b.end());
  return std::pow(best, 1.0 / static_cast<double>(m));
}

namespace {

double best_product(Eigen::Ref<const RowMatrix> s, const KeywordSpec& spec, std::size_t word, std::size_t from) {
  if (word == spec.size()) return 1.0;
  double best = 0.0;
  const auto t_len = static_cast<std::size_t>(s.rows());
  for (std::size_t t = from; t + (spec.size() - word) <= t_len; ++t) {
    const double v = s(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(spec.words[word])) *
                     best_product(s, spec, word + 1, t + 1);
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

double confidence_bruteforce(Eigen::Ref<const RowMatrix> window, const KeywordSpec& spec) {
  const std::size_t m = spec.size();
  const auto t_len = static_cast<std::size_t>(window.rows());
  if (t_len > 16 || m > 4) throw OracleRangeError("brute-force confidence is limited to T_s <= 16 and M <= 4");
  if (m == 0) throw ConfigError("keyword spec has no words");
  if (t_len < m) throw WindowTooShortError("scoring window holds fewer frames than words");
  return std::pow(best_product(window, spec, 0, 0), 1.0 / static_cast<double>(m));
}

std::vector<double> confidence_trace(const RowMatrix& posteriors, const DetectorConfig& config,
                                     const KeywordSpec& spec) {
  config.validate(spec);
  const auto t_len = static_cast<std::size_t>(posteriors.rows());
  if (t_len < config.window)
    throw SequenceTooShortError("sequence of " + std::to_string(t_len) + " frames is shorter than the " +
                                std::to_string(config.window) + "-frame scoring window");
  const RowMatrix s = smooth(posteriors, config.smoothing);
  const auto ts = static_cast<Eigen::Index>(config.window);
  std::vector<double> trace(t_len - config.window + 1);
  for (std::size_t k = 0; k < trace.size(); ++k) trace[k] = confidence(s.middleRows(static_cast<Eigen::Index>(k), ts), spec);
  return trace;
}

std::vector<TriggerEvent> triggers_from_trace(std::span<const double> trace, double threshold,
                                              std::size_t refractory, std::size_t frame_offset) {
  std::vector<TriggerEvent> events;
  std::size_t next_allowed = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (k < next_allowed || !(trace[k] >= threshold)) continue;
    events.push_back({k + frame_offset, trace[k]});
    next_allowed = k + std::max<std::size_t>(refractory, 1);
  }
  return events;
}

std::vector<TriggerEvent> stream_detect(const RowMatrix& posteriors, const DetectorConfig& config,
                                        const KeywordSpec& spec) {
  const std::vector<double> trace = confidence_trace(posteriors, config, spec);
  return triggers_from_trace(trace, config.threshold, config.window, config.window - 1);
}

void write_score_dump(const std::filesystem::path& path, std::span<const double> trace, std::size_t window) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "frame,h\n";
  char buf[64];
  for (std::size_t k = 0; k < trace.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", k + window - 1, trace[k]);
    os << buf;
  }
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace fkws
