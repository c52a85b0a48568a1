#include <doctest.h>

#include "oracles.hpp"

#include <fkws/errors.hpp>
#include <fkws/eval.hpp>

#include <cmath>
#include <random>

using namespace fkws;

namespace {

ScoredSet random_scored_set(std::mt19937_64& rng) {
  ScoredSet s;
  s.refractory = 7;
  for (int i = 0; i < 40; ++i) s.positives.push_back({"p" + std::to_string(i), std::uniform_real_distribution<double>(0.2, 1.0)(rng)});
  for (int i = 0; i < 25; ++i) {
    NegativeScore n{"n" + std::to_string(i), std::vector<double>(30)};
    oracle::fill_uniform(n.trace, rng, 0.0, 0.9);
    s.negatives.push_back(std::move(n));
  }
  s.negative_audio_hours = 0.5;
  return s;
}

std::vector<OperatingPoint> constructed(const std::vector<double>& fa, const std::vector<double>& fr) {
  std::vector<OperatingPoint> pts;
  for (std::size_t i = 0; i < fa.size(); ++i) pts.push_back({0.1 * static_cast<double>(i), fa[i], fr[i], 0, 0});
  return pts;
}

}  // namespace

TEST_CASE("sweep degenerate thresholds and division") {
  ScoredSet s;
  s.positives = {{"a", 0.4}, {"b", 0.9}};
  s.negatives = {{"n", {0.6, 0.1, 0.1, 0.1, 0.1, 0.7, 0.1, 0.1, 0.1, 0.1, 0.8}}};
  s.refractory = 5;
  s.negative_audio_hours = 2.0;
  const std::vector<double> grid{0.0, 0.5, 1.5};
  const auto pts = sweep(s, grid);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].fr_rate == 0.0);
  CHECK(pts[1].false_alarms == 3);
  CHECK(pts[1].fa_per_hour == 1.5);
  CHECK(pts[1].false_rejects == 1);
  CHECK(pts[1].fr_rate == 0.5);
  CHECK(pts[2].fa_per_hour == 0.0);
  CHECK(pts[2].fr_rate == 1.0);
}

TEST_CASE("sweep validation") {
  ScoredSet s;
  s.positives = {{"a", 0.4}};
  s.negatives = {{"n", {0.1}}};
  s.negative_audio_hours = 1.0;
  const std::vector<double> unsorted{0.5, 0.1};
  CHECK_THROWS_AS(sweep(s, unsorted), ValidationError);
  ScoredSet no_pos = s;
  no_pos.positives.clear();
  CHECK_THROWS_AS(sweep(no_pos, default_grid()), ValidationError);
  ScoredSet no_neg = s;
  no_neg.negatives.clear();
  CHECK_THROWS_AS(sweep(no_neg, default_grid()), ValidationError);
  ScoredSet no_hours = s;
  no_hours.negative_audio_hours = 0.0;
  CHECK_THROWS_AS(sweep(no_hours, default_grid()), ValidationError);
}

TEST_CASE("sweep monotonicity and brute-force FA recount") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const ScoredSet s = random_scored_set(rng);
    const auto grid = default_grid();
    const auto pts = sweep(s, grid);
    REQUIRE(pts.size() == 1001);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      CHECK(pts[i].fa_per_hour <= pts[i - 1].fa_per_hour);
      CHECK(pts[i].fr_rate >= pts[i - 1].fr_rate);
    }
    for (int k = 0; k < 5; ++k) {
      const std::size_t i = rng() % grid.size();
      std::size_t fa = 0, fr = 0;
      for (const auto& n : s.negatives) fa += oracle::count_events(n.trace, grid[i], s.refractory);
      for (const auto& p : s.positives) fr += p.max_confidence < grid[i];
      CHECK(pts[i].false_alarms == fa);
      CHECK(pts[i].false_alarms == false_alarms(s, grid[i]));
      CHECK(pts[i].false_rejects == fr);
      CHECK(pts[i].fa_per_hour == doctest::Approx(static_cast<double>(fa) / 0.5));
    }
    const FrAtFa r = fr_at_fa(pts);
    if (!r.saturated) CHECK(r.point.fa_per_hour <= 1.0);
  }
}

TEST_CASE("fr_at_fa selection rule") {
  const auto pts = constructed({4, 2, 1, 0.5}, {0.01, 0.02, 0.03, 0.08});
  const FrAtFa r = fr_at_fa(pts, 1.0);
  CHECK(!r.saturated);
  CHECK(r.point.fr_rate == 0.03);
  REQUIRE(r.below.has_value());
  REQUIRE(r.above.has_value());
  CHECK(r.below->fa_per_hour == 2.0);
  CHECK(r.above->fa_per_hour == 0.5);

  const FrAtFa sat = fr_at_fa(constructed({9, 5, 3}, {0.0, 0.1, 0.2}), 1.0);
  CHECK(sat.saturated);
  CHECK(sat.point.fr_rate == 0.2);

  ScoredSet quiet;
  quiet.positives = {{"a", 0.3}, {"b", 0.6}, {"c", 0.9}};
  quiet.negatives = {{"n", {0.0, 0.0}}};
  quiet.negative_audio_hours = 1.0;
  const FrAtFa z = fr_at_fa(sweep(quiet, default_grid()));
  CHECK(z.point.fa_per_hour <= 1.0);
  CHECK(z.point.fr_rate == 0.0);
}

TEST_CASE("DET export") {
  const auto pts = constructed({4, 2}, {0.01, 0.02});
  CHECK(det_points_csv(pts) == "threshold,fa_per_hour,fr_rate\n0.000000,4,0.01\n0.100000,2,0.02\n");
  CHECK(det_points_csv(constructed({1}, {0.5})) == "threshold,fa_per_hour,fr_rate\n0.000000,1,0.5\n");
  std::mt19937_64 rng(2);
  const ScoredSet s = random_scored_set(rng);
  const auto grid = default_grid(101);
  CHECK(det_points_csv(sweep(s, grid)) == det_points_csv(sweep(s, grid)));
  std::size_t lines = 0;
  for (char c : det_points_csv(sweep(s, grid))) lines += c == '\n';
  CHECK(lines == 102);
  CHECK_THROWS_AS(default_grid(1), ConfigError);
}

TEST_CASE("scored set assembly") {
  std::vector<ScoredClip> clips{{"p1", Polarity::Positive, 1.6, {0.2, 0.7, 0.4}},
                                {"n1", Polarity::Negative, 1.8, {0.1, 0.3}},
                                {"n2", Polarity::Negative, 1.8, {0.5}}};
  const ScoredSet s = make_scored_set(clips, 100);
  REQUIRE(s.positives.size() == 1);
  CHECK(s.positives[0].max_confidence == 0.7);
  CHECK(s.negatives.size() == 2);
  CHECK(s.negative_audio_hours == doctest::Approx(3.6 / 3600.0));
  CHECK(s.refractory == 100);
}

TEST_CASE("accuracy helpers") {
  KeywordNet net = build_keyword_net(Variant::Mtl, 3, 1);
  for (Parameter* p : net.parameters()) p->value.fill(0.0);
  net.out_b.value[2] = 1.0;     // always predicts word 2
  net.domain_b.value[1] = 1.0;  // always predicts 1m
  std::vector<TrainingWindow> ws;
  for (int i = 0; i < 4; ++i)
    ws.push_back({RowMatrix::Zero(40, 40), i % 2 == 0 ? 2 : 0, i < 3 ? DomainTag::D1M : DomainTag::D3M});
  CHECK(window_accuracy(net, ws) == 0.5);
  CHECK(domain_head_accuracy(net, ws) == 0.75);
  const RowMatrix f = feature_layer_rows(net, ws);
  CHECK(f.rows() == 4);
  CHECK(f.cols() == 128);
  CHECK_THROWS_AS(window_accuracy(net, {}), ValidationError);
}
