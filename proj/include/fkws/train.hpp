#pragma once

// Optimizer, plateau schedule, stratified batching and the two training
// stages: the domain classifier first, then the keyword classifier.

#include <fkws/ingest.hpp>
#include <fkws/losses.hpp>
#include <fkws/models.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fkws {

struct TrainConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  std::size_t batch = 128;
  std::size_t max_epochs = 100;
  std::size_t plateau_patience = 3;
  double plateau_factor = 0.1;
  double plateau_min_delta = 1e-4;
  std::size_t early_stop_patience = 8;
  std::uint64_t seed = 1;
  /// Save a checkpoint every k epochs into checkpoint_dir; 0 disables.
  std::size_t checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  /// Throws ConfigError on nonpositive values or a factor outside (0, 1).
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean of the batch objectives
  double lr = 0.0;        // rate used during the epoch
  double ce = 0.0;        // mean word (or domain) cross-entropy over samples
  /// Mean per-sample CE for each domain; NaN when the domain is absent.
  std::array<double, kNumDomains> domain_ce{};
  /// Mean CORAL term over batches; NaN when CORAL is not active.
  double coral = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  bool early_stopped = false;

  /// Header: epoch,loss,lr,ce,coral,seconds,ce_0.25m,ce_1m,ce_3m.
  std::string csv(bool include_seconds = true) const;
  void write_csv(const std::filesystem::path& path, bool include_seconds = true) const;
};

// ---- optimizer / schedule ------------------------------------------------------

/// v <- mu v - lr g; theta <- theta + mu v - lr g; then g <- 0.
/// Throws DivergenceError, leaving every parameter untouched, when any
/// gradient entry is non-finite.
void sgd_nesterov_step(std::span<Parameter* const> params, double lr, double momentum);

/// Reduce-on-plateau state. An epoch improves iff loss <= best - min_delta.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr0, const TrainConfig& config);

  /// Feeds one epoch loss and returns the rate for the next epoch.
  double observe(double loss);
  double lr() const noexcept { return lr_; }
  /// Epochs since the last improvement, not reset by decay.
  std::size_t stale_epochs() const noexcept { return stale_; }

 private:
  double lr_;
  double factor_;
  double min_delta_;
  std::size_t patience_;
  double best_;
  std::size_t bad_ = 0;
  std::size_t stale_ = 0;
};

/// The rate after replaying `history` from `lr` through a fresh scheduler.
double lr_on_plateau(std::span<const double> history, double lr, const TrainConfig& config);

// ---- batching ------------------------------------------------------------------

/// Index batches over `domains[i]`, shuffled by seed. With `needs` empty this
/// is plain batching (last batch may be short). Otherwise each needed domain
/// is dealt round-robin over min(ceil(N/B), floor(n_d/2)) batches so every
/// batch holds >= 2 rows of each needed domain and no window is dropped.
/// Throws ConfigError when a needed domain has fewer than 2 windows.
std::vector<std::vector<std::size_t>> make_batches(std::span<const DomainTag> domains, std::size_t batch,
                                                   std::span<const DomainTag> needs, std::uint64_t seed);
std::vector<std::vector<std::size_t>> make_batches(std::span<const TrainingWindow> windows, std::size_t batch,
                                                   std::span<const DomainTag> needs, std::uint64_t seed);

// ---- stage 1: domain classifier ------------------------------------------------

struct LabeledUtterance {
  FeatureMatrix features;
  DomainTag domain = DomainTag::D025;
  Polarity polarity = Polarity::Positive;
};

struct DomainFit {
  DomainNet net;  // frozen
  TrainLog log;
};

/// Trains on the positive utterances. Throws ConfigError when a domain has no
/// positive utterance.
DomainFit fit_domain_classifier(std::span<const LabeledUtterance> corpus, const TrainConfig& config,
                                const DomainNetConfig& net_config = {});

double domain_accuracy(const DomainNet& net, std::span<const LabeledUtterance> utterances);

// ---- stage 2: keyword classifier ----------------------------------------------

struct KeywordCorpus {
  std::vector<TrainingWindow> windows;
  /// Source utterances indexed by TrainingWindow::source; needed for EMB.
  std::vector<FeatureMatrix> utterances;
};

struct KeywordFit {
  KeywordNet net;
  TrainLog log;
};

struct BatchObjective {
  double loss = 0.0;  // the full minibatch objective
  double ce = 0.0;    // word cross-entropy, batch mean
  double coral = std::numeric_limits<double>::quiet_NaN();  // strategy term when CORAL is active
  std::vector<double> sample_ce;
};

/// Forward and backward of one minibatch under `loss`; parameter gradients
/// accumulate. `embeddings` is indexed by TrainingWindow::source (EMB only).
BatchObjective keyword_batch_objective(KeywordNet& net, std::span<const TrainingWindow* const> batch,
                                       const LossConfig& loss, std::span<const DomainEmbedding> embeddings = {});

/// Compatibility: EMB1/EMB2 need a frozen domain_net and CE; CORAL runs on
/// the Baseline topology; MTL loss iff MTL variant.
KeywordFit fit_keyword_classifier(const KeywordCorpus& corpus, Variant variant, const LossConfig& loss,
                                  const TrainConfig& config, const DomainNet* domain_net = nullptr,
                                  std::size_t words = kDefaultWordCount, const KeywordNetConfig& net_config = {});

/// One embedding per utterance; throws UsageError unless the net is frozen.
std::vector<DomainEmbedding> utterance_embeddings(const DomainNet& net, std::span<const FeatureMatrix> utterances);

}  // namespace fkws
