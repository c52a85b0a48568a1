#pragma once

// Experiment configuration and the subcommands behind the fkws tool.
//
// Layout under paths.root (overridden by --out):
//   corpus/{train,test}/<clip>.wav, corpus/{train,test}.jsonl   synth
//   features/{train,test}/<clip>.fea                             features
//   models/domain.ckpt, logs/domain_train.csv                    train-domain
//   models/kws.ckpt, logs/kws_train.csv                          train-kws
//   scores/scores.jsonl (+ scores/<clip>.csv with --dump-scores)  score
//   reports/det_<domain>.csv, reports/summary.json               evaluate

#include <fkws/detect.hpp>
#include <fkws/dsp.hpp>
#include <fkws/losses.hpp>
#include <fkws/models.hpp>
#include <fkws/train.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fkws {

struct SynthSettings {
  std::size_t train_positives = 500;  // per domain
  std::size_t train_negatives = 500;
  std::size_t test_positives = 150;
  std::size_t test_negatives = 200;
  double clip_seconds = 1.6;
  double noise_floor_std = 1e-4;
};

struct PathSettings {
  std::filesystem::path root = "run";
  /// Empty entries resolve to the layout under root.
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path domain_net;  // required for emb1/emb2
  std::filesystem::path model;
};

struct ExperimentConfig {
  FrontendConfig frontend;
  Variant variant = Variant::Baseline;
  KeywordNetConfig model;
  std::size_t words = kDefaultWordCount;
  /// Unset: mtl for the MTL variant, coral when a strategy is given, else ce.
  std::optional<LossMode> loss_mode;
  std::optional<CoralStrategy> strategy;
  std::optional<double> lambda;  // unset: 0.8 for CORAL, 0.2 for MTL, 0 otherwise
  TrainConfig train;
  std::size_t negatives_per_clip = 3;
  std::vector<DomainTag> train_domains{DomainTag::D025, DomainTag::D1M, DomainTag::D3M};
  std::size_t domain_batch = 32;
  std::size_t domain_max_epochs = 100;
  std::size_t domain_max_clips = 0;  // per domain; 0 = all positives
  DetectorConfig detect;
  std::size_t grid_points = 1001;
  double target_fa = 1.0;
  SynthSettings synth;
  PathSettings paths;
  std::uint64_t seed = 1;

  LossMode resolved_loss_mode() const;
  LossConfig loss() const;
  double effective_lambda() const;
  std::filesystem::path train_manifest() const;
  std::filesystem::path test_manifest() const;
  std::filesystem::path model_path() const;
  std::filesystem::path domain_net_path() const;
};

/// INI text: [frontend] [model] [loss] [train] [detect] [synth] [paths] [run].
/// Unknown sections or keys, malformed values and incompatible settings
/// raise ConfigError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field materialized, defaults included.
std::string emit_config(const ExperimentConfig& config);

/// Throws ConfigError on lambda < 0 or a variant/loss mismatch.
void validate_config(const ExperimentConfig& config);

struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> strategy;
  std::optional<double> lambda;
  std::optional<std::filesystem::path> out;
  bool dump_scores = false;
};

void apply_flags(ExperimentConfig& config, const RunFlags& flags);

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"synth", "features", "train-domain", "train-kws", "score", "evaluate"};
  return names;
}

/// Runs one subcommand. Errors propagate; files created by the failed run
/// are removed first.
void run_subcommand(const std::string& name, const ExperimentConfig& config, const RunFlags& flags,
                    std::ostream& log);

/// 2 config/usage, 3 data, 4 divergence, 1 anything else.
int exit_code_for(const std::string& kind);

/// Catches every error, prints "error: <kind>: <message>" on one line and
/// returns the exit code.
int run_cli(const std::string& name, const std::optional<std::filesystem::path>& config_path, const RunFlags& flags,
            std::ostream& log, std::ostream& err);

}  // namespace fkws
