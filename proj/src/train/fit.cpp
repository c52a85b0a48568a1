#include <fkws/errors.hpp>
#include <fkws/train.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace fkws {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct DomainTally {
  std::array<double, kNumDomains> sum{};
  std::array<std::size_t, kNumDomains> count{};

  void add(DomainTag d, double v) {
    sum[index_of(d)] += v;
    ++count[index_of(d)];
  }
  std::array<double, kNumDomains> means() const {
    std::array<double, kNumDomains> m{};
    for (std::size_t i = 0; i < kNumDomains; ++i) m[i] = count[i] ? sum[i] / static_cast<double>(count[i]) : kNaN;
    return m;
  }
  double overall() const {
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t i = 0; i < kNumDomains; ++i) {
      s += sum[i];
      c += count[i];
    }
    return c ? s / static_cast<double>(c) : kNaN;
  }
};

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch));
}

std::filesystem::path epoch_checkpoint(const TrainConfig& config, std::size_t epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%03zu.ckpt", epoch);
  return config.checkpoint_dir / name;
}

/// Shared epoch loop: schedule, early stopping, checkpointing.
template <typename RunEpoch, typename Save>
TrainLog run_epochs(const TrainConfig& config, RunEpoch&& run_epoch, Save&& save) {
  TrainLog log;
  PlateauScheduler sched(config.lr0, config);
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = Clock::now();
    EpochRecord rec = run_epoch(epoch, sched.lr());
    rec.epoch = epoch;
    rec.lr = sched.lr();
    check_finite(rec.loss, epoch);
    rec.seconds = seconds_since(t0);
    log.epochs.push_back(rec);
    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) save(epoch_checkpoint(config, epoch));
    sched.observe(rec.loss);
    if (sched.stale_epochs() >= config.early_stop_patience) {
      log.early_stopped = true;
      break;
    }
  }
  return log;
}

}  // namespace

// ---- domain classifier ---------------------------------------------------------

DomainFit fit_domain_classifier(std::span<const LabeledUtterance> corpus, const TrainConfig& config,
                                const DomainNetConfig& net_config) {
  config.validate();
  std::vector<std::size_t> usable;
  std::vector<DomainTag> domains;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].polarity != Polarity::Positive) continue;
    usable.push_back(i);
    domains.push_back(corpus[i].domain);
  }
  for (DomainTag d : kAllDomains)
    if (std::find(domains.begin(), domains.end(), d) == domains.end())
      throw ConfigError("domain classifier needs positive utterances from domain " + std::string(to_string(d)));

  DomainFit fit{build_domain_net(mix_seed(config.seed, 0xD0), net_config), {}};
  auto params = fit.net.parameters();

  auto run_epoch = [&](std::size_t epoch, double lr) {
    EpochRecord rec;
    DomainTally tally;
    double loss_sum = 0.0;
    const auto batches = make_batches(domains, config.batch, {}, mix_seed(config.seed, epoch));
    for (const auto& batch : batches) {
      const double inv = 1.0 / static_cast<double>(batch.size());
      double batch_loss = 0.0;
      for (std::size_t k : batch) {
        const LabeledUtterance& u = corpus[usable[k]];
        const DomainTrace tr = forward_domain(fit.net, u.features);
        const std::size_t label = index_of(u.domain);
        const SoftmaxCE ce = softmax_ce(tr.logits, label);
        Tensor g = softmax_ce_backward(ce.probabilities, label);
        for (double& v : g.data()) v *= inv;
        backward_domain(fit.net, tr, g);
        batch_loss += ce.loss * inv;
        tally.add(u.domain, ce.loss);
      }
      sgd_nesterov_step(params, lr, config.momentum);
      loss_sum += batch_loss;
    }
    rec.loss = loss_sum / static_cast<double>(batches.size());
    rec.ce = tally.overall();
    rec.domain_ce = tally.means();
    rec.coral = kNaN;
    return rec;
  };
  fit.log = run_epochs(config, run_epoch, [&](const std::filesystem::path& p) { save_checkpoint(p, fit.net); });
  fit.net.freeze();
  return fit;
}

double domain_accuracy(const DomainNet& net, std::span<const LabeledUtterance> utterances) {
  if (utterances.empty()) throw ValidationError("domain accuracy over an empty set");
  std::size_t hits = 0;
  for (const LabeledUtterance& u : utterances) {
    const Tensor logits = forward_domain(net, u.features).logits;
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
      if (logits[c] > logits[best]) best = c;
    hits += best == index_of(u.domain);
  }
  return static_cast<double>(hits) / static_cast<double>(utterances.size());
}

std::vector<DomainEmbedding> utterance_embeddings(const DomainNet& net, std::span<const FeatureMatrix> utterances) {
  std::vector<DomainEmbedding> out;
  out.reserve(utterances.size());
  for (const FeatureMatrix& f : utterances) out.push_back(extract_domain_embedding(net, f));
  return out;
}

// ---- keyword classifier --------------------------------------------------------

namespace {

void check_compatibility(Variant variant, const LossConfig& loss, const DomainNet* domain_net,
                         const KeywordCorpus& corpus) {
  if (!(loss.lambda >= 0.0) || !std::isfinite(loss.lambda)) throw ConfigError("lambda must be a finite value >= 0");
  if (uses_embedding(variant)) {
    if (!domain_net) throw ConfigError(std::string(to_string(variant)) + " needs a pre-trained domain classifier");
    if (!domain_net->frozen) throw ConfigError("the domain classifier must be frozen");
    if (loss.mode != LossMode::CrossEntropy) throw ConfigError("embedding variants train with cross-entropy only");
    for (const TrainingWindow& w : corpus.windows)
      if (w.source >= corpus.utterances.size())
        throw ConfigError("embedding variants need every window's source utterance");
  } else if (domain_net) {
    throw ConfigError("a domain classifier is only used by emb1/emb2");
  }
  if ((variant == Variant::Mtl) != (loss.mode == LossMode::Mtl))
    throw ConfigError("the mtl loss and the mtl variant go together");
  if (loss.mode == LossMode::Coral && variant != Variant::Baseline)
    throw ConfigError("CORAL training uses the baseline topology");
}

}  // namespace

BatchObjective keyword_batch_objective(KeywordNet& net, std::span<const TrainingWindow* const> batch,
                                       const LossConfig& loss, std::span<const DomainEmbedding> embeddings) {
  const std::size_t b = batch.size();
  if (b == 0) throw ShapeError("empty minibatch");
  const bool coral = loss.mode == LossMode::Coral;
  const bool mtl = loss.mode == LossMode::Mtl;
  if (mtl != (net.variant == Variant::Mtl)) throw ConfigError("the mtl loss and the mtl variant go together");

  std::vector<KeywordTrace> traces;
  traces.reserve(b);
  for (const TrainingWindow* w : batch) {
    const DomainEmbedding* emb = nullptr;
    if (uses_embedding(net.variant)) {
      if (w->source >= embeddings.size()) throw ConfigError("missing domain embedding for a training window");
      emb = &embeddings[w->source];
    }
    traces.push_back(forward_keyword_trace(net, w->features, emb));
  }

  const auto classes = static_cast<Eigen::Index>(net.words + 1);
  RowMatrix word_logits(static_cast<Eigen::Index>(b), classes);
  std::vector<int> word_labels(b), domain_labels(b);
  for (std::size_t i = 0; i < b; ++i) {
    word_logits.row(static_cast<Eigen::Index>(i)) = traces[i].record.word_logits.vector().transpose();
    word_labels[i] = batch[i]->word_label;
    domain_labels[i] = static_cast<int>(index_of(batch[i]->domain));
  }

  BatchObjective obj;
  obj.sample_ce.resize(b);
  for (std::size_t i = 0; i < b; ++i)
    obj.sample_ce[i] = softmax_ce(traces[i].record.word_logits, static_cast<std::size_t>(word_labels[i])).loss;

  RowMatrix g_word, g_domain;
  if (mtl) {
    RowMatrix domain_logits(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(kNumDomains));
    for (std::size_t i = 0; i < b; ++i)
      domain_logits.row(static_cast<Eigen::Index>(i)) = traces[i].record.domain_logits->vector().transpose();
    MtlResult r = mtl_loss(word_logits, word_labels, domain_logits, domain_labels, loss.lambda);
    obj.loss = r.loss;
    obj.ce = r.word_ce;
    g_word = std::move(r.grad_word_logits);
    g_domain = std::move(r.grad_domain_logits);
  } else {
    BatchCE r = batch_cross_entropy(word_logits, word_labels);
    obj.loss = obj.ce = r.loss;
    g_word = std::move(r.grad);
  }

  // CORAL on within-batch domain partitions of the feature layer
  std::vector<Tensor> g_feature;
  if (coral) {
    const std::size_t width = net.config.fc1_width;
    CoralBatch cb;
    std::array<std::vector<std::size_t>, kNumDomains> rows;
    for (std::size_t i = 0; i < b; ++i) rows[index_of(batch[i]->domain)].push_back(i);
    for (std::size_t d = 0; d < kNumDomains; ++d) {
      cb.features[d].resize(static_cast<Eigen::Index>(rows[d].size()), static_cast<Eigen::Index>(width));
      for (std::size_t r = 0; r < rows[d].size(); ++r)
        cb.features[d].row(static_cast<Eigen::Index>(r)) = traces[rows[d][r]].record.feature_layer.vector().transpose();
    }
    const JointCoralResult jr = joint_coral_loss(loss.strategy, cb, obj.loss, loss.lambda);
    obj.loss = jr.loss;
    obj.coral = jr.coral_term;
    g_feature.assign(b, Tensor({width}));
    for (std::size_t d = 0; d < kNumDomains; ++d)
      for (std::size_t r = 0; r < rows[d].size(); ++r)
        g_feature[rows[d][r]].vector() = jr.grads[d].row(static_cast<Eigen::Index>(r)).transpose();
  }

  Tensor gw({net.words + 1}), gd({kNumDomains});
  for (std::size_t i = 0; i < b; ++i) {
    gw.vector() = g_word.row(static_cast<Eigen::Index>(i)).transpose();
    if (mtl) gd.vector() = g_domain.row(static_cast<Eigen::Index>(i)).transpose();
    backward_keyword(net, traces[i], gw, mtl ? &gd : nullptr, coral ? &g_feature[i] : nullptr);
  }
  return obj;
}

KeywordFit fit_keyword_classifier(const KeywordCorpus& corpus, Variant variant, const LossConfig& loss,
                                  const TrainConfig& config, const DomainNet* domain_net, std::size_t words,
                                  const KeywordNetConfig& net_config) {
  config.validate();
  check_compatibility(variant, loss, domain_net, corpus);
  const auto& windows = corpus.windows;
  if (windows.empty()) throw ConfigError("no training windows");
  for (const TrainingWindow& w : windows)
    if (w.word_label < 0 || static_cast<std::size_t>(w.word_label) > words)
      throw IndexError("window label " + std::to_string(w.word_label) + " outside [0, " + std::to_string(words) + "]");

  std::vector<DomainEmbedding> embeddings;
  if (uses_embedding(variant)) embeddings = utterance_embeddings(*domain_net, corpus.utterances);

  KeywordFit fit{build_keyword_net(variant, words, mix_seed(config.seed, 0xC0), net_config), {}};
  auto params = fit.net.parameters();
  const bool coral = loss.mode == LossMode::Coral;
  const std::vector<DomainTag> needs = coral ? domains_needed(loss.strategy) : std::vector<DomainTag>{};

  auto run_epoch = [&](std::size_t epoch, double lr) {
    EpochRecord rec;
    DomainTally tally;
    double loss_sum = 0.0, coral_sum = 0.0;
    const auto batches = make_batches(std::span(windows), config.batch, needs, mix_seed(config.seed, epoch));
    std::vector<const TrainingWindow*> members;
    for (const auto& batch : batches) {
      members.clear();
      for (std::size_t k : batch) members.push_back(&windows[k]);
      const BatchObjective obj = keyword_batch_objective(fit.net, members, loss, embeddings);
      if (!std::isfinite(obj.loss)) throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch));
      sgd_nesterov_step(params, lr, config.momentum);
      for (std::size_t i = 0; i < members.size(); ++i) tally.add(members[i]->domain, obj.sample_ce[i]);
      loss_sum += obj.loss;
      if (coral) coral_sum += obj.coral;
    }
    rec.loss = loss_sum / static_cast<double>(batches.size());
    rec.ce = tally.overall();
    rec.domain_ce = tally.means();
    rec.coral = coral ? coral_sum / static_cast<double>(batches.size()) : kNaN;
    return rec;
  };
  fit.log = run_epochs(config, run_epoch, [&](const std::filesystem::path& p) { save_checkpoint(p, fit.net); });
  return fit;
}

}  // namespace fkws
