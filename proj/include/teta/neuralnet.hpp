#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teta/matrix.hpp"

namespace teta::nn {

enum class Activation { relu, linear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct NetworkSpec {
  std::vector<std::size_t> layer_sizes;  // input width first, 1 last
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::linear;
  std::uint64_t seed = 42;

  // 237 -> 320 -> 200 -> 100 -> 40 -> 5 -> 1
  static NetworkSpec bus_default(std::uint64_t seed = 42);

  std::size_t input_width() const { return layer_sizes.front(); }
  std::size_t layer_count() const { return layer_sizes.size() - 1; }

  // Throws DomainError on fewer than two sizes, a zero size, or an output
  // width other than 1.
  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct Network {
  NetworkSpec spec;
  std::vector<DenseLayer> layers;

  std::size_t input_width() const { return spec.input_width(); }
  friend bool operator==(const Network&, const Network&) = default;
};

// He-normal weights (std = sqrt(2 / fan_in)), zero biases, seeded by
// spec.seed.
Network init_network(const NetworkSpec& spec);

// Per-layer values retained for backpropagation: pre[l] = W_l a_l + b_l and
// post[l] = act(pre[l]). post.back() is the prediction column.
struct ForwardCache {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

struct ForwardResult {
  double prediction = 0.0;
  ForwardCache cache;
};

// Single-sample forward pass. Throws DimensionError on width mismatch and
// DomainError on a non-finite output.
ForwardResult forward(const Network& net, std::span<const double> x);

// Batched forward pass; fills `cache` for a subsequent backward().
void forward_batch(const Network& net, const Matrix& x, ForwardCache& cache);

// Mean squared error. Throws DomainError on empty or unequal inputs.
double mse_loss(std::span<const double> preds, std::span<const double> targets);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;
};

Gradients zero_gradients(const Network& net);

// Exact gradient of mse_loss over the batch with respect to every parameter.
// `cache` must come from forward_batch(net, x, ...).
void backward(const Network& net, const Matrix& x, std::span<const double> y,
              const ForwardCache& cache, Gradients& grads);
Gradients backward(const Network& net, const Matrix& x,
                   std::span<const double> y, const ForwardCache& cache);

enum class Optimizer { sgd, sgd_momentum, adam };

std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t batch_size = 256;
  int epochs = 30;
  Optimizer optimizer = Optimizer::adam;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t shuffle_seed = 7;
  std::optional<int> early_stop_patience;

  // Throws DomainError on a negative learning rate, a zero batch size or a
  // non-positive epoch count. A zero learning rate is a frozen run.
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_rmse = 0.0;
  double val_rmse = 0.0;  // NaN when no validation set was given
  double seconds = 0.0;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_val_rmse = 0.0;

  // One JSON object per line: epoch, train_rmse, val_rmse, seconds.
  void write_jsonl(std::ostream& out) const;
};

struct Dataset {
  Matrix x;
  std::vector<double> y;
  std::size_t size() const { return y.size(); }
};

struct TrainResult {
  Network network;  // best-on-validation snapshot
  TrainingLog log;
};

// Shuffled mini-batch training. Throws DivergenceError when the loss stops
// being finite. With an empty validation set the last epoch is returned.
TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg,
                  const Dataset& validation);

std::size_t param_count(const Network& net);
std::size_t param_count(const NetworkSpec& spec);

// Multiply-accumulates of one forward pass, under the labelled convention.
struct MacCount {
  std::size_t multiply_accumulates = 0;  // sum of in*out
  std::size_t bias_adds = 0;             // sum of out
  std::size_t activations = 0;           // hidden units passed through ReLU
};
MacCount mac_count(const Network& net);
MacCount mac_count(const NetworkSpec& spec);

struct LatencyStats {
  std::size_t samples = 0;         // timed samples, warm-up excluded
  std::size_t warmup = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
};

struct BatchPrediction {
  std::vector<double> values;
  std::optional<LatencyStats> latency;
};

// Sample-at-a-time inference with per-sample timing; no caches retained.
BatchPrediction predict_batch(const Network& net, const Matrix& x);

// Fast batched inference without timing.
std::vector<double> predict(const Network& net, const Matrix& x);
double predict_one(const Network& net, std::span<const double> x);

}  // namespace teta::nn
