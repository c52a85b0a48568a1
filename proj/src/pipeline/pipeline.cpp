#include <fkws/errors.hpp>
#include <fkws/eval.hpp>
#include <fkws/pipeline.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace fkws {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Files written by one subcommand; removed again unless the run commits.
class Outputs {
 public:
  Outputs() = default;
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;
  ~Outputs() {
    if (committed_) return;
    for (const fs::path& p : files_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

  fs::path add(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    files_.push_back(p);
    return p;
  }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> files_;
  bool committed_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

std::string clip_id_of(const ManifestEntry& e) { return fs::path(e.path).stem().string(); }

fs::path audio_path(const fs::path& manifest, const ManifestEntry& e) {
  const fs::path p(e.path);
  return p.is_absolute() ? p : manifest.parent_path() / p;
}

fs::path feature_path(const ExperimentConfig& c, const std::string& split, const ManifestEntry& e) {
  return c.paths.root / "features" / split / (clip_id_of(e) + ".fea");
}

std::vector<ManifestEntry> read_split(const fs::path& manifest, std::size_t words) {
  if (!fs::exists(manifest)) throw IoError("manifest not found: " + manifest.string());
  return parse_manifest(manifest, words);
}

/// Cached features when present, else computed from the audio.
FeatureMatrix load_features(const ExperimentConfig& c, const std::string& split, const fs::path& manifest,
                            const ManifestEntry& e) {
  const fs::path cached = feature_path(c, split, e);
  if (fs::exists(cached)) return read_feature_cache(cached);
  return compute_fbank(read_wav(audio_path(manifest, e)), c.frontend);
}

double clip_seconds(const fs::path& manifest, const ManifestEntry& e) {
  return read_wav(audio_path(manifest, e)).seconds();
}

// ---- synth ---------------------------------------------------------------------

void run_synth(const ExperimentConfig& c, std::ostream& log) {
  Outputs out;
  const fs::path corpus = c.paths.root / "corpus";
  struct Split {
    const char* name;
    std::size_t pos, neg;
    std::uint64_t salt;
  };
  for (const Split& s : {Split{"train", c.synth.train_positives, c.synth.train_negatives, 1},
                         Split{"test", c.synth.test_positives, c.synth.test_negatives, 2}}) {
    SynthOptions opt;
    opt.clip_seconds = c.synth.clip_seconds;
    opt.noise_floor_std = c.synth.noise_floor_std;
    opt.id_prefix = s.name;
    std::vector<ManifestEntry> manifest;
    for_each_synth_clip(mix_seed(c.seed, s.salt), SynthCounts::uniform(s.pos, s.neg), opt,
                        [&](AudioClip&& clip, ManifestEntry&& entry) {
                          entry.path = std::string(s.name) + "/" + entry.path;
                          write_wav(out.add(corpus / entry.path), clip.samples);
                          manifest.push_back(std::move(entry));
                        });
    write_manifest(out.add(corpus / (std::string(s.name) + ".jsonl")), manifest);
    log << "synth: " << manifest.size() << " " << s.name << " clips\n";
  }
  out.commit();
}

// ---- features ------------------------------------------------------------------

void run_features(const ExperimentConfig& c, std::ostream& log) {
  Outputs out;
  for (const auto& [split, manifest] : {std::pair<std::string, fs::path>{"train", c.train_manifest()},
                                        std::pair<std::string, fs::path>{"test", c.test_manifest()}}) {
    if (!fs::exists(manifest)) continue;
    const auto entries = read_split(manifest, c.words);
    for (const ManifestEntry& e : entries)
      write_feature_cache(out.add(feature_path(c, split, e)),
                          compute_fbank(read_wav(audio_path(manifest, e)), c.frontend));
    log << "features: " << entries.size() << " " << split << " clips\n";
  }
  out.commit();
}

// ---- training ------------------------------------------------------------------

void run_train_domain(const ExperimentConfig& c, std::ostream& log) {
  const fs::path manifest = c.train_manifest();
  const auto entries = read_split(manifest, c.words);
  std::vector<LabeledUtterance> corpus;
  std::array<std::size_t, kNumDomains> taken{};
  for (const ManifestEntry& e : entries) {
    if (e.polarity != Polarity::Positive) continue;
    auto& n = taken[index_of(e.domain)];
    if (c.domain_max_clips > 0 && n >= c.domain_max_clips) continue;
    ++n;
    corpus.push_back({load_features(c, "train", manifest, e), e.domain, e.polarity});
  }
  TrainConfig tc = c.train;
  tc.batch = c.domain_batch;
  tc.max_epochs = c.domain_max_epochs;
  tc.checkpoint_every = 0;
  const DomainFit fit = fit_domain_classifier(corpus, tc);

  Outputs out;
  save_checkpoint(out.add(c.domain_net_path()), fit.net);
  fit.log.write_csv(out.add(c.paths.root / "logs" / "domain_train.csv"));
  out.commit();
  log << "train-domain: " << corpus.size() << " utterances, " << fit.log.epochs.size() << " epochs, final loss "
      << (fit.log.epochs.empty() ? 0.0 : fit.log.epochs.back().loss) << "\n";
}

void run_train_kws(const ExperimentConfig& c, std::ostream& log) {
  const fs::path manifest = c.train_manifest();
  const auto entries = read_split(manifest, c.words);
  std::optional<DomainNet> domain_net;
  if (uses_embedding(c.variant)) {
    domain_net = load_domain_checkpoint(c.paths.domain_net);
    if (domain_net->config.hidden != c.model.embedding_dim)
      throw ConfigError("domain net embeds into " + std::to_string(domain_net->config.hidden) +
                        " dims, model.embedding_dim is " + std::to_string(c.model.embedding_dim));
  }

  KeywordCorpus corpus;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = entries[i];
    if (std::find(c.train_domains.begin(), c.train_domains.end(), e.domain) == c.train_domains.end()) continue;
    FeatureMatrix f = load_features(c, "train", manifest, e);
    WindowSet ws = make_windows(f, e, c.negatives_per_clip, mix_seed(c.seed, 0x600000 + i));
    const std::size_t source = corpus.utterances.size();
    for (TrainingWindow& w : ws.windows) {
      w.source = source;
      corpus.windows.push_back(std::move(w));
    }
    corpus.utterances.push_back(std::move(f));
  }

  Outputs out;
  TrainConfig tc = c.train;
  if (tc.checkpoint_every > 0) {
    if (tc.checkpoint_dir.is_relative()) tc.checkpoint_dir = c.paths.root / tc.checkpoint_dir;
    fs::create_directories(tc.checkpoint_dir);
  }
  const KeywordFit fit = fit_keyword_classifier(corpus, c.variant, c.loss(), tc, domain_net ? &*domain_net : nullptr,
                                                c.words, c.model);
  save_checkpoint(out.add(c.model_path()), fit.net);
  fit.log.write_csv(out.add(c.paths.root / "logs" / "kws_train.csv"));
  out.commit();
  log << "train-kws: " << corpus.windows.size() << " windows, " << fit.log.epochs.size() << " epochs, final loss "
      << (fit.log.epochs.empty() ? 0.0 : fit.log.epochs.back().loss) << (fit.log.early_stopped ? " (early stop)" : "") << "\n";
}

// ---- scoring -------------------------------------------------------------------

struct ScoredTestSet {
  std::vector<ManifestEntry> entries;
  std::vector<ScoredClip> clips;
};

ScoredTestSet score_test_set(const ExperimentConfig& c) {
  const fs::path manifest = c.test_manifest();
  ScoredTestSet s;
  s.entries = read_split(manifest, c.words);
  const KeywordNet net = load_keyword_checkpoint(c.model_path());
  if (net.words != c.words) throw ConfigError("checkpoint has " + std::to_string(net.words) + " words, config " +
                                              std::to_string(c.words));
  std::optional<DomainNet> domain_net;
  if (uses_embedding(net.variant)) {
    if (c.paths.domain_net.empty()) throw ConfigError("scoring an embedding model needs paths.domain_net");
    domain_net = load_domain_checkpoint(c.paths.domain_net);
  }
  const KeywordSpec spec = KeywordSpec::sequential(c.words);
  for (const ManifestEntry& e : s.entries) {
    const FeatureMatrix f = load_features(c, "test", manifest, e);
    std::optional<DomainEmbedding> emb;
    if (domain_net) emb = extract_domain_embedding(*domain_net, f);
    ScoredClip clip{clip_id_of(e), e.polarity, clip_seconds(manifest, e), {}};
    clip.trace = score_utterance(net, f, c.detect, spec, emb ? &*emb : nullptr);
    s.clips.push_back(std::move(clip));
  }
  return s;
}

void dump_scores(const ExperimentConfig& c, const ScoredTestSet& s, Outputs& out) {
  for (const ScoredClip& clip : s.clips)
    write_score_dump(out.add(c.paths.root / "scores" / (clip.clip_id + ".csv")), clip.trace, c.detect.window);
}

void run_score(const ExperimentConfig& c, const RunFlags& flags, std::ostream& log) {
  const ScoredTestSet s = score_test_set(c);
  Outputs out;
  std::string lines;
  for (std::size_t i = 0; i < s.clips.size(); ++i) {
    const ScoredClip& clip = s.clips[i];
    Json j;
    j["clip_id"] = clip.clip_id;
    j["domain"] = to_string(s.entries[i].domain);
    j["polarity"] = to_string(clip.polarity);
    j["seconds"] = clip.seconds;
    j["max_h"] = clip.trace.empty() ? 0.0 : *std::max_element(clip.trace.begin(), clip.trace.end());
    j["trace"] = clip.trace;
    lines += j.dump() + "\n";
  }
  write_text(out.add(c.paths.root / "scores" / "scores.jsonl"), lines);
  if (flags.dump_scores) dump_scores(c, s, out);
  out.commit();
  log << "score: " << s.clips.size() << " clips\n";
}

Json point_json(const OperatingPoint& p) {
  Json j;
  j["threshold"] = p.threshold;
  j["fa_per_hour"] = p.fa_per_hour;
  j["fr_rate"] = p.fr_rate;
  return j;
}

const char* domain_file_slug(DomainTag d) {
  switch (d) {
    case DomainTag::D025: return "025";
    case DomainTag::D1M: return "1m";
    case DomainTag::D3M: return "3m";
  }
  return "x";
}

void run_evaluate(const ExperimentConfig& c, const RunFlags& flags, std::ostream& log) {
  const ScoredTestSet s = score_test_set(c);
  Outputs out;
  Json summary;
  const std::vector<double> grid = default_grid(c.grid_points);
  for (DomainTag d : kAllDomains) {
    std::vector<ScoredClip> clips;
    for (std::size_t i = 0; i < s.clips.size(); ++i)
      if (s.entries[i].domain == d) clips.push_back(s.clips[i]);
    const ScoredSet scored = make_scored_set(clips, c.detect.window);
    if (scored.positives.empty() || scored.negatives.empty())
      throw ValidationError("test split lacks positives or negatives for domain " + std::string(to_string(d)));
    const auto points = sweep(scored, grid);
    const FrAtFa r = fr_at_fa(points, c.target_fa);
    write_det_points(out.add(c.paths.root / "reports" / ("det_" + std::string(domain_file_slug(d)) + ".csv")), points);

    Json j = point_json(r.point);
    j["false_alarms"] = r.point.false_alarms;
    j["false_rejects"] = r.point.false_rejects;
    j["saturated"] = r.saturated;
    j["positives"] = scored.positives.size();
    j["negatives"] = scored.negatives.size();
    j["negative_hours"] = scored.negative_audio_hours;
    j["below"] = r.below ? point_json(*r.below) : Json(nullptr);
    j["above"] = r.above ? point_json(*r.above) : Json(nullptr);
    summary[std::string(to_string(d))] = j;
    log << "evaluate: " << to_string(d) << " FR " << r.point.fr_rate * 100.0 << "% at " << r.point.fa_per_hour
        << " FA/h (threshold " << r.point.threshold << (r.saturated ? ", saturated" : "") << ")\n";
  }
  write_text(out.add(c.paths.root / "reports" / "summary.json"), summary.dump(2) + "\n");
  if (flags.dump_scores) dump_scores(c, s, out);
  out.commit();
}

}  // namespace

void apply_flags(ExperimentConfig& c, const RunFlags& flags) {
  if (flags.seed) {
    c.seed = *flags.seed;
    c.train.seed = *flags.seed;
  }
  if (flags.variant) c.variant = parse_variant(*flags.variant);
  if (flags.strategy) c.strategy = parse_strategy(*flags.strategy);
  if (flags.lambda) c.lambda = *flags.lambda;
  if (flags.out) c.paths.root = *flags.out;
}

void run_subcommand(const std::string& name, const ExperimentConfig& c, const RunFlags& flags, std::ostream& log) {
  validate_config(c);
  if (name == "synth") return run_synth(c, log);
  if (name == "features") return run_features(c, log);
  if (name == "train-domain") return run_train_domain(c, log);
  if (name == "train-kws") return run_train_kws(c, log);
  if (name == "score") return run_score(c, flags, log);
  if (name == "evaluate") return run_evaluate(c, flags, log);
  throw UsageError("unknown subcommand '" + name + "'");
}

int exit_code_for(const std::string& kind) {
  if (kind == "config" || kind == "usage" || kind == "window-too-short") return 2;
  if (kind == "format" || kind == "unsupported-format" || kind == "parse" || kind == "validation" ||
      kind == "too-short" || kind == "io" || kind == "sequence-too-short")
    return 3;
  if (kind == "divergence") return 4;
  return 1;
}

int run_cli(const std::string& name, const std::optional<fs::path>& config_path, const RunFlags& flags,
            std::ostream& log, std::ostream& err) {
  auto one_line = [](std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
  };
  try {
    ExperimentConfig c = config_path ? load_config(*config_path) : ExperimentConfig{};
    apply_flags(c, flags);
    run_subcommand(name, c, flags, log);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: io: " << one_line(e.what()) << "\n";
    return exit_code_for("io");
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
}

}  // namespace fkws
