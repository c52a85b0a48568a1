#include <doctest.h>

#include "gradients.hpp"
#include "oracles.hpp"

#include <fkws/errors.hpp>
#include <fkws/netcore.hpp>

#include <cmath>
#include <random>

using namespace fkws;

TEST_CASE("every op backward matches central differences") {
  for (const auto& r : testing::netcore_gradient_suite(101)) {
    INFO(r.name << " worst " << r.report.worst << " rel " << r.report.max_rel);
    CHECK(r.report.checked > 0);
    CHECK(r.report.max_rel < 1e-4);
  }
}

TEST_CASE("conv2d hand cases") {
  Tensor x({1, 4, 5});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  Tensor delta({1, 1, 3, 3});
  delta[4] = 1.0;
  const Tensor y = conv2d(x, delta, Tensor({1}));
  REQUIRE(y.shape() == Shape{1, 2, 3});
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(y[r * 3 + c] == x[(r + 1) * 5 + c + 1]);

  const Tensor ones = conv2d(Tensor({1, 3, 3}, 1.0), Tensor({1, 1, 3, 3}, 1.0), Tensor({1}));
  REQUIRE(ones.size() == 1);
  CHECK(ones[0] == 9.0);
}

TEST_CASE("conv2d is linear in its input") {
  std::mt19937_64 rng(1);
  const Tensor k = oracle::random_tensor({3, 2, 3, 3}, rng);
  const Tensor zero({3});
  const Tensor x = oracle::random_tensor({2, 6, 7}, rng), y = oracle::random_tensor({2, 6, 7}, rng);
  Tensor mix(x.shape());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 1.7 * x[i] - 0.4 * y[i];
  const Tensor a = conv2d(mix, k, zero), cx = conv2d(x, k, zero), cy = conv2d(y, k, zero);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - (1.7 * cx[i] - 0.4 * cy[i])) < 1e-9);
}

TEST_CASE("conv2d rejects bad shapes") {
  CHECK_THROWS_AS(conv2d(Tensor({2, 5, 5}), Tensor({1, 1, 3, 3}), Tensor({1})), ShapeError);
  CHECK_THROWS_AS(conv2d(Tensor({1, 2, 5}), Tensor({1, 1, 3, 3}), Tensor({1})), ShapeError);
  CHECK_THROWS_AS(conv2d(Tensor({1, 5, 5}), Tensor({1, 1, 3, 3}), Tensor({2})), ShapeError);
}

TEST_CASE("maxpool2 values, tie-break and routing") {
  const PoolResult p = maxpool2(Tensor({1, 2, 2}, {1, 2, 3, 4}));
  CHECK(p.output.size() == 1);
  CHECK(p.output[0] == 4.0);

  const Tensor constant({2, 5, 4}, 3.0);
  const PoolResult c = maxpool2(constant);
  REQUIRE(c.output.shape() == Shape{2, 2, 2});
  for (double v : c.output.data()) CHECK(v == 3.0);
  const Tensor g = maxpool2_backward(constant.shape(), c.argmax, Tensor(c.output.shape(), 1.0));
  // first element of each window: rows {0,2}, columns {0,2}
  for (std::size_t ch = 0; ch < 2; ++ch)
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t col = 0; col < 4; ++col) {
        const bool first = r % 2 == 0 && r < 4 && col % 2 == 0;
        CHECK(g[(ch * 5 + r) * 4 + col] == (first ? 1.0 : 0.0));
      }
  CHECK_THROWS_AS(maxpool2(Tensor({1, 1, 4})), ShapeError);
}

TEST_CASE("maxpool2 backward has one nonzero per window") {
  std::mt19937_64 rng(2);
  const Tensor x = oracle::random_tensor({3, 7, 9}, rng);
  const PoolResult p = maxpool2(x);
  const Tensor g = maxpool2_backward(x.shape(), p.argmax, Tensor(p.output.shape(), 1.0));
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        int nonzero = 0;
        for (std::size_t dr = 0; dr < 2; ++dr)
          for (std::size_t dc = 0; dc < 2; ++dc) nonzero += g[(ch * 7 + 2 * r + dr) * 9 + 2 * c + dc] != 0.0;
        CHECK(nonzero == 1);
      }
}

TEST_CASE("linear degenerate maps") {
  const Tensor x({3}, {1.0, -2.0, 0.5});
  const Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(linear(x, eye, Tensor({3})) == x);
  const Tensor b({2}, {0.25, -4.0});
  CHECK(linear(x, Tensor({2, 3}), b) == b);
  CHECK_THROWS_AS(linear(x, Tensor({2, 4}), b), ShapeError);
}

TEST_CASE("relu definition and dead region") {
  CHECK(relu(Tensor({3}, {-1.0, 0.0, 2.0})) == Tensor({3}, {0.0, 0.0, 2.0}));
  const Tensor neg({4}, -1.0);
  CHECK(relu(neg) == Tensor({4}));
  CHECK(relu_backward(neg, Tensor({4}, 1.0)) == Tensor({4}));
  CHECK(relu_backward(Tensor({1}, {0.0}), Tensor({1}, {1.0}))[0] == 0.0);
}

TEST_CASE("softmax cross-entropy") {
  const SoftmaxCE u = softmax_ce(Tensor({4}), 2);
  CHECK(u.loss == doctest::Approx(std::log(4.0)));
  for (double p : u.probabilities.data()) CHECK(p == doctest::Approx(0.25));
  CHECK(softmax_ce(Tensor({3}, {100.0, 0.0, 0.0}), 0).loss < 1e-9);
  CHECK_THROWS_AS(softmax_ce(Tensor({3}), 3), IndexError);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Tensor logits = oracle::random_tensor({9}, rng, -1e4, 1e4);
    const SoftmaxCE r = softmax_ce(logits, 0);
    double sum = 0.0;
    for (double p : r.probabilities.data()) sum += p;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(std::isfinite(r.loss));
  }
}

TEST_CASE("lstm with zero parameters outputs zeros") {
  const LstmTrace t = lstm_layer(Tensor({4, 3}, 0.7), {Tensor({8, 3}), Tensor({8, 2}), Tensor({8})}, Tensor({2}),
                                 Tensor({2}));
  for (double v : t.outputs.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm with one step equals a hand-evaluated cell") {
  std::mt19937_64 rng(4);
  const Tensor x = oracle::random_tensor({1, 2}, rng);
  const Tensor wi = oracle::random_tensor({4, 2}, rng), wr = oracle::random_tensor({4, 1}, rng),
               b = oracle::random_tensor({4}, rng);
  const Tensor h0({1}, {0.3}), c0({1}, {-0.2});
  const LstmTrace t = lstm_layer(x, {wi, wr, b}, h0, c0);
  auto pre = [&](std::size_t g) { return wi[g * 2] * x[0] + wi[g * 2 + 1] * x[1] + wr[g] * h0[0] + b[g]; };
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double i = sig(pre(0)), f = sig(pre(1)), g = std::tanh(pre(2)), o = sig(pre(3));
  const double c = f * c0[0] + i * g;
  CHECK(t.outputs[0] == doctest::Approx(o * std::tanh(c)).epsilon(1e-14));
  CHECK(t.cells[0] == doctest::Approx(c).epsilon(1e-14));
  CHECK_THROWS_AS(lstm_layer(x, {wi, wr, b}, Tensor({2}), c0), ShapeError);
}

TEST_CASE("mean pooling and concat") {
  const Tensor rows({2, 2}, {1.0, 3.0, 3.0, 1.0});
  CHECK(mean_pool_time(rows) == Tensor({2}, {2.0, 2.0}));
  const Tensor one({1, 3}, {1.0, 2.0, 3.0});
  CHECK(mean_pool_time(one).storage() == one.storage());
  CHECK(mean_pool_time_backward(4, Tensor({2}, {4.0, 8.0})) == Tensor({4, 2}, {1, 2, 1, 2, 1, 2, 1, 2}));

  const Tensor a({2}, {1.0, 2.0}), b({1}, {3.0});
  CHECK(concat(a, b) == Tensor({3}, {1.0, 2.0, 3.0}));
  CHECK(concat(a, Tensor({0})) == a);
  const auto [ga, gb] = concat_backward(2, Tensor({3}, 1.0));
  CHECK(ga == Tensor({2}, 1.0));
  CHECK(gb == Tensor({1}, 1.0));
  CHECK_THROWS_AS(concat(Tensor({1, 2}), b), ShapeError);
}
