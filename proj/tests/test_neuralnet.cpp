#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "teta/error.hpp"
#include "teta/neuralnet.hpp"

using namespace teta;
using namespace teta::nn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.flat()) v = u(rng);
  return m;
}

Network random_network(std::vector<std::size_t> sizes, std::uint64_t seed) {
  NetworkSpec spec{std::move(sizes)};
  spec.seed = seed;
  auto net = init_network(spec);
  // Nonzero biases so every parameter gets exercised.
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& l : net.layers) {
    for (auto& b : l.bias) b = u(rng);
  }
  return net;
}

double loss_of(const Network& net, const Matrix& x, const std::vector<double>& y) {
  ForwardCache c;
  forward_batch(net, x, c);
  return mse_loss(c.post.back().flat(), y);
}

// Central differences over parameter (layer, flat index, is_bias).
double numeric_grad(Network net, const Matrix& x, const std::vector<double>& y,
                    std::size_t layer, std::size_t idx, bool bias, double h) {
  double& p = bias ? net.layers[layer].bias[idx] : net.layers[layer].weights.flat()[idx];
  const double orig = p;
  p = orig + h;
  const double up = loss_of(net, x, y);
  p = orig - h;
  const double down = loss_of(net, x, y);
  return (up - down) / (2.0 * h);
}

double analytic(const Gradients& g, std::size_t layer, std::size_t idx, bool bias) {
  return bias ? g.bias[layer][idx] : g.weights[layer].flat()[idx];
}

void expect_gradients_match(const Network& net, const Matrix& x,
                            const std::vector<double>& y, std::size_t coords,
                            std::uint64_t seed) {
  ForwardCache cache;
  forward_batch(net, x, cache);
  auto g = backward(net, x, y, cache);
  std::mt19937_64 rng(seed);
  std::vector<std::tuple<std::size_t, std::size_t, bool>> all;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (std::size_t i = 0; i < net.layers[l].weights.size(); ++i) all.emplace_back(l, i, false);
    for (std::size_t i = 0; i < net.layers[l].bias.size(); ++i) all.emplace_back(l, i, true);
  }
  if (coords < all.size()) {
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(coords);
  }
  for (auto [l, i, b] : all) {
    const double a = analytic(g, l, i, b);
    const double n = numeric_grad(net, x, y, l, i, b, 1e-5);
    EXPECT_LT(std::abs(a - n) / (std::abs(a) + 1e-8), 1e-4)
        << "layer " << l << (b ? " bias " : " weight ") << i << ": " << a << " vs " << n;
  }
}

Dataset linear_data(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, sigma);
  Dataset d;
  d.x = Matrix(n, 1);
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = u(rng);          // distance / 2000 m
    d.x(i, 0) = scaled;
    d.y[i] = 100.0 + 0.5 * (2000.0 * scaled) + (sigma > 0 ? noise(rng) : 0.0);
  }
  return d;
}

}  // namespace

TEST(Network, DefaultShapes) {
  auto net = init_network(NetworkSpec::bus_default());
  const std::vector<std::size_t> sizes{237, 320, 200, 100, 40, 5, 1};
  ASSERT_EQ(net.layers.size(), 6u);
  for (std::size_t l = 0; l < 6; ++l) {
    EXPECT_EQ(net.layers[l].weights.rows(), sizes[l + 1]);
    EXPECT_EQ(net.layers[l].weights.cols(), sizes[l]);
    EXPECT_EQ(net.layers[l].bias.size(), sizes[l + 1]);
    for (double b : net.layers[l].bias) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(net.spec.hidden_activation, Activation::relu);
  EXPECT_EQ(net.spec.output_activation, Activation::linear);
}

TEST(Network, InitIsSeededAndHeScaled) {
  auto a = init_network(NetworkSpec::bus_default(5));
  auto b = init_network(NetworkSpec::bus_default(5));
  auto c = init_network(NetworkSpec::bus_default(6));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  // Sample variance of the first layer is close to 2 / fan_in.
  auto w = a.layers[0].weights.flat();
  double ss = 0.0;
  for (double v : w) ss += v * v;
  EXPECT_NEAR(ss / static_cast<double>(w.size()), 2.0 / 237.0, 0.05 * 2.0 / 237.0);
}

TEST(Network, SpecValidation) {
  EXPECT_THROW(init_network(NetworkSpec{{3}}), DomainError);
  EXPECT_THROW(init_network(NetworkSpec{{3, 0, 1}}), DomainError);
  EXPECT_THROW(init_network(NetworkSpec{{3, 2}}), DomainError);
}

TEST(Forward, HandComputedExamples) {
  auto net = init_network(NetworkSpec{{2, 1}});
  net.layers[0].weights(0, 0) = 1.0;
  net.layers[0].weights(0, 1) = 1.0;
  net.layers[0].bias[0] = 0.5;
  const double x[] = {1.0, 2.0};
  EXPECT_EQ(forward(net, x).prediction, 3.5);

  auto two = init_network(NetworkSpec{{2, 2, 1}});
  two.layers[0].weights(0, 0) = 0.5;
  two.layers[0].weights(0, 1) = 0.0;
  two.layers[0].weights(1, 0) = -1.0;  // negative pre-activation, cut by ReLU
  two.layers[0].weights(1, 1) = -1.0;
  two.layers[1].weights(0, 0) = 1.0;
  two.layers[1].weights(0, 1) = 10.0;
  two.layers[1].bias[0] = 0.25;
  const double y[] = {1.0, 1.0};
  auto r = forward(two, y);
  EXPECT_EQ(r.prediction, 0.75);
  EXPECT_EQ(r.cache.pre[0](0, 1), -2.0);
  EXPECT_EQ(r.cache.post[0](0, 1), 0.0);

  // Linear output is not clipped.
  two.layers[1].bias[0] = -7.0;
  EXPECT_EQ(forward(two, y).prediction, -6.5);

  const double wrong[] = {1.0, 2.0, 3.0};
  EXPECT_THROW(forward(net, wrong), DimensionError);
}

TEST(Forward, BitIdenticalOnRepeat) {
  auto net = init_network(NetworkSpec::bus_default());
  std::mt19937_64 rng(1);
  auto x = random_matrix(1, 237, rng);
  const double a = forward(net, x.row(0)).prediction;
  const double b = forward(net, x.row(0)).prediction;
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, predict_one(net, x.row(0)));
}

TEST(Loss, MseExamples) {
  const double p[] = {1, 2, 3}, t[] = {1, 2, 3}, u[] = {2, 2, 5};
  EXPECT_EQ(mse_loss(p, t), 0.0);
  EXPECT_EQ(mse_loss(p, u), 5.0 / 3.0);
  EXPECT_THROW(mse_loss(std::span<const double>{}, std::span<const double>{}), DomainError);
  EXPECT_THROW(mse_loss(std::span(p, 2), std::span(t, 3)), DimensionError);
}

TEST(Gradient, FiniteDifferencesSmallNet) {
  auto net = random_network({4, 3, 1}, 3);
  std::mt19937_64 rng(30);
  auto x = random_matrix(6, 4, rng);
  std::vector<double> y{0.3, -1.0, 2.0, 0.1, 0.7, -0.4};
  expect_gradients_match(net, x, y, 1000, 1);
}

TEST(Gradient, FiniteDifferencesRandomNets) {
  const std::vector<std::vector<std::size_t>> shapes{
      {2, 2, 1}, {5, 4, 1}, {3, 6, 2, 1}, {10, 8, 5, 1}, {7, 8, 5, 1}};
  std::uint64_t seed = 100;
  for (const auto& shape : shapes) {
    auto net = random_network(shape, seed);
    std::mt19937_64 rng(seed);
    auto x = random_matrix(9, shape.front(), rng);
    std::vector<double> y(9);
    for (auto& v : y) v = std::uniform_real_distribution<double>(-2, 2)(rng);
    expect_gradients_match(net, x, y, 100, seed);
    ++seed;
  }
}

TEST(Gradient, ZeroResidualGivesZeroGradient) {
  auto net = random_network({4, 5, 1}, 9);
  std::mt19937_64 rng(2);
  auto x = random_matrix(7, 4, rng);
  ForwardCache cache;
  forward_batch(net, x, cache);
  std::vector<double> y(cache.post.back().flat().begin(), cache.post.back().flat().end());
  auto g = backward(net, x, y, cache);
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (double v : g.weights[l].flat()) EXPECT_EQ(v, 0.0);
    for (double v : g.bias[l]) EXPECT_EQ(v, 0.0);
  }
}

TEST(Gradient, DuplicatedBatchAndPermutation) {
  auto net = random_network({3, 4, 2, 1}, 12);
  std::mt19937_64 rng(5);
  auto x = random_matrix(8, 3, rng);
  std::vector<double> y{1, 2, 3, 4, -1, -2, 0.5, 0.25};
  ForwardCache cache;
  forward_batch(net, x, cache);
  auto g = backward(net, x, y, cache);

  Matrix x2(16, 3);
  std::vector<double> y2(16);
  for (std::size_t i = 0; i < 16; ++i) {
    std::copy(x.row(i % 8).begin(), x.row(i % 8).end(), x2.row(i).begin());
    y2[i] = y[i % 8];
  }
  forward_batch(net, x2, cache);
  auto g2 = backward(net, x2, y2, cache);

  std::vector<std::size_t> perm{5, 2, 7, 0, 3, 6, 1, 4};
  Matrix x3(8, 3);
  std::vector<double> y3(8);
  for (std::size_t i = 0; i < 8; ++i) {
    std::copy(x.row(perm[i]).begin(), x.row(perm[i]).end(), x3.row(i).begin());
    y3[i] = y[perm[i]];
  }
  forward_batch(net, x3, cache);
  auto g3 = backward(net, x3, y3, cache);

  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (std::size_t i = 0; i < g.weights[l].size(); ++i) {
      const double ref = g.weights[l].flat()[i];
      const double tol = 1e-12 * std::max(1.0, std::abs(ref));
      EXPECT_NEAR(g2.weights[l].flat()[i], ref, tol);
      EXPECT_NEAR(g3.weights[l].flat()[i], ref, tol);
    }
    for (std::size_t i = 0; i < g.bias[l].size(); ++i) {
      const double ref = g.bias[l][i];
      const double tol = 1e-12 * std::max(1.0, std::abs(ref));
      EXPECT_NEAR(g2.bias[l][i], ref, tol);
      EXPECT_NEAR(g3.bias[l][i], ref, tol);
    }
  }
}

TEST(Gradient, ShapeMismatch) {
  auto net = random_network({3, 2, 1}, 1);
  std::mt19937_64 rng(1);
  auto x = random_matrix(4, 3, rng);
  ForwardCache cache;
  forward_batch(net, x, cache);
  std::vector<double> y(3, 0.0);
  EXPECT_THROW(backward(net, x, y, cache), DimensionError);
}

TEST(Counts, ParamsAndMacs) {
  NetworkSpec small{{2, 3, 1}};
  EXPECT_EQ(param_count(small), 13u);
  EXPECT_EQ(mac_count(small).multiply_accumulates, 9u);
  EXPECT_EQ(param_count(init_network(small)), 13u);

  auto spec = NetworkSpec::bus_default();
  const std::vector<std::size_t> s{237, 320, 200, 100, 40, 5, 1};
  std::size_t params = 0, macs = 0, outs = 0;
  for (std::size_t l = 0; l + 1 < s.size(); ++l) {
    params += s[l] * s[l + 1] + s[l + 1];
    macs += s[l] * s[l + 1];
    outs += s[l + 1];
  }
  EXPECT_EQ(param_count(spec), params);
  EXPECT_EQ(param_count(spec), 164'711u);
  EXPECT_EQ(param_count(init_network(spec)), 164'711u);
  auto m = mac_count(spec);
  EXPECT_EQ(m.multiply_accumulates, macs);
  EXPECT_EQ(m.multiply_accumulates, 164'045u);
  EXPECT_EQ(m.bias_adds, outs);
  EXPECT_EQ(m.activations, outs - 1);
}

TEST(Train, LinearDataReachesNoiseFloor) {
  const double sigma = 10.0;
  auto train_set = linear_data(8000, sigma, 1);
  auto val_set = linear_data(2000, sigma, 2);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 64;
  cfg.epochs = 40;
  auto net = init_network(NetworkSpec{{1, 16, 8, 1}, Activation::relu, Activation::linear, 3});
  auto r = train(net, train_set, cfg, val_set);
  auto preds = predict(r.network, val_set.x);
  const double val_rmse = std::sqrt(mse_loss(preds, val_set.y));
  EXPECT_LT(val_rmse, sigma * 1.1);
  EXPECT_DOUBLE_EQ(val_rmse, r.log.best_val_rmse);
  EXPECT_EQ(r.log.epochs.size(), 40u);
}

TEST(Train, ZeroLearningRateFreezesParameters) {
  auto data = linear_data(500, 1.0, 4);
  auto net = init_network(NetworkSpec{{1, 6, 1}});
  for (auto opt : {Optimizer::sgd, Optimizer::sgd_momentum, Optimizer::adam}) {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 3;
    cfg.batch_size = 32;
    cfg.optimizer = opt;
    auto r = train(net, data, cfg, data);
    EXPECT_EQ(r.network, net) << to_string(opt);
  }
}

TEST(Train, SameSeedSameLog) {
  auto data = linear_data(1000, 5.0, 5);
  auto val = linear_data(200, 5.0, 6);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 50;
  auto net = init_network(NetworkSpec{{1, 8, 4, 1}});
  auto a = train(net, data, cfg, val);
  auto b = train(net, data, cfg, val);
  EXPECT_EQ(a.network, b.network);
  ASSERT_EQ(a.log.epochs.size(), b.log.epochs.size());
  for (std::size_t i = 0; i < a.log.epochs.size(); ++i) {
    EXPECT_EQ(a.log.epochs[i].epoch, b.log.epochs[i].epoch);
    EXPECT_EQ(a.log.epochs[i].train_rmse, b.log.epochs[i].train_rmse);
    EXPECT_EQ(a.log.epochs[i].val_rmse, b.log.epochs[i].val_rmse);
  }
  EXPECT_EQ(a.log.best_epoch, b.log.best_epoch);

  cfg.shuffle_seed = 8;
  auto c = train(net, data, cfg, val);
  EXPECT_NE(a.network, c.network);
}

TEST(Train, NoiselessLossShrinksHundredfold) {
  auto data = linear_data(2000, 0.0, 7);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.05;
  auto net = init_network(NetworkSpec{{1, 16, 8, 1}});
  auto r = train(net, data, cfg, Dataset{});
  ASSERT_EQ(r.log.epochs.size(), 50u);
  const double first = std::pow(r.log.epochs.front().train_rmse, 2);
  const double last = std::pow(r.log.epochs.back().train_rmse, 2);
  EXPECT_LT(last, 0.01 * first);
  EXPECT_TRUE(std::isnan(r.log.epochs.back().val_rmse));
  EXPECT_EQ(r.log.best_epoch, 50);
}

TEST(Train, DivergenceNamesEpochAndBatch) {
  auto data = linear_data(300, 0.0, 8);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::sgd;
  cfg.learning_rate = 1e6;
  cfg.batch_size = 30;
  cfg.epochs = 20;
  auto net = init_network(NetworkSpec{{1, 8, 1}});
  try {
    train(net, data, cfg, Dataset{});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.epoch, 1);
    EXPECT_GE(e.batch, 0);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Train, RejectsBadInput) {
  auto net = init_network(NetworkSpec{{1, 2, 1}});
  auto data = linear_data(10, 0.0, 1);
  TrainConfig cfg;
  EXPECT_THROW(train(net, Dataset{}, cfg, Dataset{}), DomainError);
  cfg.learning_rate = -1;
  EXPECT_THROW(train(net, data, cfg, Dataset{}), DomainError);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(train(net, data, cfg, Dataset{}), DomainError);
  cfg = {};
  auto wide = init_network(NetworkSpec{{3, 2, 1}});
  EXPECT_THROW(train(wide, data, cfg, Dataset{}), DimensionError);
}

TEST(TrainingLog, JsonLines) {
  TrainingLog log;
  log.epochs.push_back({1, 2.5, 3.0, 0.1});
  log.epochs.push_back({2, 2.0, std::nan(""), 0.2});
  std::ostringstream out;
  log.write_jsonl(out);
  EXPECT_EQ(out.str(),
            "{\"epoch\":1,\"seconds\":0.1,\"train_rmse\":2.5,\"val_rmse\":3.0}\n"
            "{\"epoch\":2,\"seconds\":0.2,\"train_rmse\":2.0,\"val_rmse\":null}\n");
}

TEST(PredictBatch, CopiesLatencyAndEmpty) {
  auto net = init_network(NetworkSpec{{4, 8, 1}});
  std::mt19937_64 rng(3);
  auto one = random_matrix(1, 4, rng);
  Matrix x(12000, 4);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::copy(one.row(0).begin(), one.row(0).end(), x.row(i).begin());
  }
  auto r = predict_batch(net, x);
  ASSERT_EQ(r.values.size(), 12000u);
  for (double v : r.values) EXPECT_EQ(v, r.values[0]);
  ASSERT_TRUE(r.latency.has_value());
  EXPECT_EQ(r.latency->warmup, 100u);
  EXPECT_EQ(r.latency->samples, 11900u);
  EXPECT_GE(r.latency->mean_ms, 0.0);
  EXPECT_LE(r.latency->p50_ms, r.latency->p99_ms);

  auto empty = predict_batch(net, Matrix(0, 4));
  EXPECT_TRUE(empty.values.empty());
  EXPECT_FALSE(empty.latency.has_value());
  EXPECT_THROW(predict_batch(net, Matrix(2, 3)), DimensionError);
}
