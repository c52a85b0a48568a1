#include "criteria.hpp"

#include "gradients.hpp"
#include "oracles.hpp"

#include <fkws/detect.hpp>
#include <fkws/dsp.hpp>
#include <fkws/errors.hpp>
#include <fkws/pipeline.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace fkws::testing {
namespace fs = std::filesystem;
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---- 1: gradients -----------------------------------------------------------------

Outcome gradient_correctness(std::uint64_t seed) {
  const auto t0 = Clock::now();
  oracle::GradReport total;
  std::string worst_case;
  auto absorb = [&](const std::vector<NamedReport>& suite) {
    for (const NamedReport& r : suite) {
      if (r.report.max_rel >= total.max_rel) worst_case = r.name + " " + r.report.worst;
      total.merge(r.report);
    }
  };
  absorb(netcore_gradient_suite(seed));
  absorb(model_gradient_suite(seed));
  const double secs = seconds_since(t0);
  return {total.max_rel < 1e-4 && secs < 300.0,
          fmt("%zu entries, max rel err %.3g at %s, %.1f s", total.checked, total.max_rel, worst_case.c_str(), secs)};
}

// ---- 2: confidence recurrence vs enumeration ----------------------------------------

Outcome dp_equivalence(std::uint64_t seed, std::size_t instances) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t m = 1 + rng() % 3;
    const std::size_t ts = m + rng() % (13 - m);
    const std::size_t classes = m + 1 + rng() % 3;
    std::vector<std::size_t> ids(classes - 1);
    std::iota(ids.begin(), ids.end(), 1);
    std::shuffle(ids.begin(), ids.end(), rng);
    const KeywordSpec spec{{ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m)}};
    const RowMatrix s = oracle::random_matrix(static_cast<Eigen::Index>(ts), static_cast<Eigen::Index>(classes), rng,
                                              0.0, 1.0);
    worst = std::max(worst, std::abs(confidence(s, spec) - confidence_bruteforce(s, spec)));
  }
  RowMatrix hand(3, 3);
  hand << 0.0, 0.9, 0.1, 0.0, 0.1, 0.8, 0.0, 0.2, 0.5;
  const double h = confidence(hand, KeywordSpec::sequential(2));
  const double hand_err = std::abs(h - std::sqrt(0.72));
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && hand_err <= 1e-12 && secs < 10.0,
          fmt("%zu instances, max |dp-brute| %.3g, hand case h=%.12f (err %.3g), %.2f s", instances, worst, h,
              hand_err, secs)};
}

// ---- 3: CORAL -----------------------------------------------------------------------

Outcome coral_correctness(std::uint64_t seed, std::size_t instances) {
  RowMatrix s(2, 1), t(2, 1);
  s << 0.0, 2.0;
  t << 1.0, 1.0;
  const double hand = coral_loss(s, t);
  bool ok = std::abs(hand - 1.0) <= 1e-12;
  std::string failure;

  std::mt19937_64 rng(seed);
  double sym = 0.0, perm = 0.0, equal_cov = 0.0, min_distinct = INFINITY;
  for (std::size_t n = 0; n < instances; ++n) {
    const auto d = static_cast<Eigen::Index>(1 + rng() % 6);
    const auto na = static_cast<Eigen::Index>(2 + rng() % 9);
    const auto nb = static_cast<Eigen::Index>(2 + rng() % 9);
    const RowMatrix a = oracle::random_matrix(na, d, rng);
    const RowMatrix b = oracle::random_matrix(nb, d, rng, -2.0, 2.0);
    const double ab = coral_loss(a, b);
    sym = std::max(sym, std::abs(ab - coral_loss(b, a)));
    if (ab < 0.0) {
      ok = false;
      failure = "negative loss";
    }
    // independent random draws have distinct covariances almost surely
    const double cov_gap = (oracle::two_pass_covariance(a) - oracle::two_pass_covariance(b)).norm();
    if (cov_gap > 1e-6) min_distinct = std::min(min_distinct, ab);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(na));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    RowMatrix shuffled(na, d);
    for (Eigen::Index i = 0; i < na; ++i) shuffled.row(i) = a.row(order[static_cast<std::size_t>(i)]);
    perm = std::max(perm, std::abs(coral_loss(shuffled, b) - ab));

    // a translated copy has the same covariance
    RowMatrix shifted = shuffled;
    shifted.rowwise() += oracle::random_matrix(1, d, rng).row(0);
    equal_cov = std::max(equal_cov, coral_loss(a, shifted));
  }
  ok = ok && sym <= 1e-12 && perm <= 1e-12 && equal_cov <= 1e-12 && min_distinct > 0.0;
  return {ok, fmt("hand case %.15g; over %zu instances: |l(A,B)-l(B,A)| %.2g, permutation %.2g, equal-cov loss %.2g, "
                  "min loss for distinct covariances %.3g%s",
                  hand, instances, sym, perm, equal_cov, min_distinct, failure.c_str())};
}

// ---- 4: confidence() scaling in T_s ------------------------------------------------

Outcome confidence_scaling() {
  constexpr std::size_t kReps = 10000;
  const KeywordSpec spec = KeywordSpec::sequential(3);
  std::mt19937_64 rng(4);
  std::array<double, 3> per_call{};
  const std::array<std::size_t, 3> sizes{100, 200, 400};
  volatile double sink = 0.0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const RowMatrix s = oracle::random_matrix(static_cast<Eigen::Index>(sizes[k]), 4, rng, 0.0, 1.0);
    double best = INFINITY;
    for (int trial = 0; trial < 5; ++trial) {
      const auto t0 = Clock::now();
      double acc = 0.0;
      for (std::size_t r = 0; r < kReps; ++r) acc += confidence(s, spec);
      best = std::min(best, seconds_since(t0));
      sink = sink + acc;
    }
    per_call[k] = best / kReps;
  }
  const double r1 = per_call[1] / per_call[0], r2 = per_call[2] / per_call[1];
  return {r1 <= 3.0 && r2 <= 3.0, fmt("per call %.3g / %.3g / %.3g us at T_s=100/200/400, ratios %.2f, %.2f",
                                      per_call[0] * 1e6, per_call[1] * 1e6, per_call[2] * 1e6, r1, r2)};
}

// ---- 8: determinism & serialization -----------------------------------------------

namespace {

template <typename Net>
bool values_match_f32(const Net& original, const Net& loaded) {
  const auto a = original.parameters();
  const auto b = loaded.parameters();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->name != b[i]->name || a[i]->value.shape() != b[i]->value.shape()) return false;
    for (std::size_t j = 0; j < a[i]->value.size(); ++j)
      if (static_cast<double>(static_cast<float>(a[i]->value[j])) != b[i]->value[j]) return false;
  }
  return true;
}

ExperimentConfig tiny_pipeline_config(const fs::path& root) {
  ExperimentConfig c;
  c.paths.root = root;
  c.paths.domain_net = root / "models" / "domain.ckpt";
  c.variant = Variant::Emb1;
  c.synth.train_positives = 8;
  c.synth.train_negatives = 8;
  c.synth.test_positives = 4;
  c.synth.test_negatives = 4;
  c.train.max_epochs = 2;
  c.train.batch = 32;
  c.domain_max_epochs = 2;
  c.seed = 21;
  c.train.seed = 21;
  return c;
}

std::string run_pipeline(const fs::path& root) {
  fs::remove_all(root);
  const ExperimentConfig c = tiny_pipeline_config(root);
  std::ostringstream log;
  for (const char* step : {"synth", "features", "train-domain", "train-kws", "evaluate"})
    run_subcommand(step, c, {}, log);
  return read_bytes(root / "reports" / "summary.json");
}

}  // namespace

Outcome determinism_and_serialization(const fs::path& scratch) {
  fs::create_directories(scratch);
  const std::string a = run_pipeline(scratch / "run_a");
  const std::string b = run_pipeline(scratch / "run_b");
  const bool same_summary = !a.empty() && a == b;
  const bool same_model =
      read_bytes(scratch / "run_a" / "models" / "kws.ckpt") == read_bytes(scratch / "run_b" / "models" / "kws.ckpt");

  bool round_trip = true;
  for (Variant v : {Variant::Baseline, Variant::Emb1, Variant::Emb2, Variant::Mtl}) {
    const KeywordNet net = build_keyword_net(v, 3, 77);
    const fs::path p = scratch / ("round_trip_" + std::string(to_string(v)) + ".ckpt");
    save_checkpoint(p, net);
    const KeywordNet back = load_keyword_checkpoint(p);
    round_trip = round_trip && back.variant == v && back.words == 3 && values_match_f32(net, back);
  }
  const DomainNet dn = build_domain_net(78);
  save_checkpoint(scratch / "round_trip_domain.ckpt", dn);
  round_trip = round_trip && values_match_f32(dn, load_domain_checkpoint(scratch / "round_trip_domain.ckpt"));

  return {same_summary && same_model && round_trip,
          fmt("summary.json %s (%zu bytes), kws.ckpt %s, checkpoint f32 round trip %s",
              same_summary ? "identical" : "differs", a.size(), same_model ? "identical" : "differs",
              round_trip ? "exact" : "mismatch")};
}

// ---- 9: frontend ------------------------------------------------------------------

Outcome frontend_properties(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::size_t count_errors = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 400 + rng() % 24000;
    std::vector<double> x(n);
    oracle::fill_uniform(x, rng, -0.5, 0.5);
    const std::size_t expected = (n - 400) / 160 + 1;
    if (static_cast<std::size_t>(compute_fbank(x).rows()) != expected || num_frames(n) != expected) ++count_errors;
  }

  const FeatureMatrix zero = compute_fbank(std::vector<double>(16000, 0.0));
  const double floor_err = (zero.array() - std::log(1e-10)).abs().maxCoeff();

  std::vector<double> x(8000);
  oracle::fill_uniform(x, rng, -0.3, 0.3);
  const FeatureMatrix base = compute_fbank(x);
  double scale_err = 0.0;
  for (double c : {1.5, 2.0, 7.0}) {
    std::vector<double> y(x);
    for (double& v : y) v *= c;
    const FeatureMatrix scaled = compute_fbank(y);
    scale_err = std::max(scale_err, (scaled.array() - base.array() - 2.0 * std::log(c)).abs().maxCoeff());
  }
  const bool unfloored = (base.array() > std::log(1e-10) + 1.0).all();
  return {count_errors == 0 && floor_err <= 1e-9 && scale_err <= 1e-9 && unfloored,
          fmt("frame count mismatches %zu/200, zero-signal floor err %.2g, 2 ln c err %.2g", count_errors, floor_err,
              scale_err)};
}

// ---- 5-7: surrogates ---------------------------------------------------------------

namespace {

struct Utterance {
  FeatureMatrix features;
  ManifestEntry entry;
  double seconds = 0.0;
  std::string id;
};

std::vector<Utterance> synth_features(std::uint64_t seed, std::size_t pos, std::size_t neg, const char* prefix) {
  std::vector<Utterance> out;
  SynthOptions o;
  o.id_prefix = prefix;
  for_each_synth_clip(seed, SynthCounts::uniform(pos, neg), o, [&](AudioClip&& c, ManifestEntry&& e) {
    out.push_back({compute_fbank(c), std::move(e), c.seconds(), c.clip_id});
  });
  return out;
}

struct SurrogateData {
  std::vector<Utterance> train, test;
  std::array<std::vector<TrainingWindow>, kNumDomains> test_windows;
};

KeywordCorpus corpus_for(const SurrogateData& data, std::initializer_list<DomainTag> domains, std::size_t negatives) {
  KeywordCorpus kc;
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    const Utterance& u = data.train[i];
    if (std::find(domains.begin(), domains.end(), u.entry.domain) == domains.end()) continue;
    WindowSet ws = make_windows(u.features, u.entry, negatives, mix_seed(5, i));
    for (TrainingWindow& w : ws.windows) {
      w.source = kc.utterances.size();
      kc.windows.push_back(std::move(w));
    }
    kc.utterances.push_back(u.features);
  }
  return kc;
}

SurrogateModel measure(const KeywordNet& net, const SurrogateData& data) {
  SurrogateModel m;
  const DetectorConfig dc;
  const KeywordSpec spec = KeywordSpec::sequential(net.words);
  for (DomainTag d : kAllDomains) {
    std::vector<ScoredClip> clips;
    for (const Utterance& u : data.test)
      if (u.entry.domain == d)
        clips.push_back({u.id, u.entry.polarity, u.seconds, score_utterance(net, u.features, dc, spec)});
    const auto points = sweep(make_scored_set(clips, dc.window), default_grid());
    m.fr[index_of(d)] = fr_at_fa(points);
    m.window_accuracy[index_of(d)] = window_accuracy(net, data.test_windows[index_of(d)]);
  }
  m.coral_025_1m = coral_loss(feature_layer_rows(net, data.test_windows[0]), feature_layer_rows(net, data.test_windows[1]));
  if (net.variant == Variant::Mtl) {
    std::vector<TrainingWindow> all;
    for (const auto& v : data.test_windows) all.insert(all.end(), v.begin(), v.end());
    m.domain_accuracy = domain_head_accuracy(net, all);
  }
  return m;
}

SurrogateModel train_and_measure(const SurrogateData& data, const SurrogateSettings& s,
                                 std::initializer_list<DomainTag> domains, Variant variant, const LossConfig& loss) {
  const auto t0 = Clock::now();
  const KeywordFit fit = fit_keyword_classifier(corpus_for(data, domains, s.negatives_per_clip), variant, loss, s.train);
  SurrogateModel m = measure(fit.net, data);
  m.epochs = fit.log.epochs.size();
  m.seconds = seconds_since(t0);
  return m;
}

double fr(const SurrogateModel& m, DomainTag d) { return m.fr[index_of(d)].point.fr_rate; }

std::string fr_text(const SurrogateModel& m, DomainTag d) {
  const FrAtFa& r = m.fr[index_of(d)];
  return fmt("%.2f%%%s", 100.0 * r.point.fr_rate, r.saturated ? " (saturated)" : "");
}

}  // namespace

SurrogateResults run_surrogate(const SurrogateSettings& s) {
  const auto t0 = Clock::now();
  SurrogateData data;
  data.train = synth_features(s.train_seed, s.train_positives, s.train_negatives, "train");
  data.test = synth_features(s.test_seed, s.test_positives, s.test_negatives, "test");
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    WindowSet ws = make_windows(data.test[i].features, data.test[i].entry, s.negatives_per_clip, mix_seed(6, i));
    for (TrainingWindow& w : ws.windows) data.test_windows[index_of(w.domain)].push_back(std::move(w));
  }
  SurrogateResults r;
  r.data_seconds = seconds_since(t0);
  using D = DomainTag;
  const LossConfig ce = LossConfig::cross_entropy();
  r.close_only = train_and_measure(data, s, {D::D025}, Variant::Baseline, ce);
  r.pooled_far = train_and_measure(data, s, {D::D025, D::D3M}, Variant::Baseline, ce);
  r.pooled_all = train_and_measure(data, s, {D::D025, D::D1M, D::D3M}, Variant::Baseline, ce);
  r.coral_s1 = train_and_measure(data, s, {D::D025, D::D1M, D::D3M}, Variant::Baseline,
                                 LossConfig::coral(CoralStrategy::S1));
  r.mtl = train_and_measure(data, s, {D::D025, D::D1M, D::D3M}, Variant::Mtl, LossConfig::mtl());
  return r;
}

std::string describe(const SurrogateModel& m) {
  return fmt("FR@1FA/h 0.25m %s 1m %s 3m %s; window acc %.4f/%.4f/%.4f; coral(0.25m,1m) %.4g; %zu epochs, %.0f s",
             fr_text(m, DomainTag::D025).c_str(), fr_text(m, DomainTag::D1M).c_str(),
             fr_text(m, DomainTag::D3M).c_str(), m.window_accuracy[0], m.window_accuracy[1], m.window_accuracy[2],
             m.coral_025_1m, m.epochs, m.seconds);
}

Outcome pooling_helps(const SurrogateResults& r) {
  const double a = fr(r.close_only, DomainTag::D3M), b = fr(r.pooled_far, DomainTag::D3M);
  return {a > b, fmt("3m FR@1FA/h: 0.25m-only %s vs pooled 0.25m+3m %s", fr_text(r.close_only, DomainTag::D3M).c_str(),
                     fr_text(r.pooled_far, DomainTag::D3M).c_str())};
}

Outcome coral_aligns(const SurrogateResults& r) {
  const double drop = r.pooled_all.window_accuracy[0] - r.coral_s1.window_accuracy[0];
  return {r.coral_s1.coral_025_1m < r.pooled_all.coral_025_1m && drop < 0.02,
          fmt("coral(0.25m,1m) test features: S1 %.4g vs pooled %.4g; 0.25m window acc %.4f vs %.4f (drop %.2f pts)",
              r.coral_s1.coral_025_1m, r.pooled_all.coral_025_1m, r.coral_s1.window_accuracy[0],
              r.pooled_all.window_accuracy[0], 100.0 * drop)};
}

Outcome mtl_surrogate(const SurrogateResults& r) {
  const bool far_ok = fr(r.mtl, DomainTag::D1M) <= fr(r.close_only, DomainTag::D1M) &&
                      fr(r.mtl, DomainTag::D3M) <= fr(r.close_only, DomainTag::D3M);
  return {r.mtl.domain_accuracy > 0.6 && far_ok,
          fmt("domain head acc %.4f; FR@1FA/h 1m %s vs 0.25m-only %s, 3m %s vs %s", r.mtl.domain_accuracy,
              fr_text(r.mtl, DomainTag::D1M).c_str(), fr_text(r.close_only, DomainTag::D1M).c_str(),
              fr_text(r.mtl, DomainTag::D3M).c_str(), fr_text(r.close_only, DomainTag::D3M).c_str())};
}

}  // namespace fkws::testing
