#include "teta/neuralnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"

#include "teta/error.hpp"
#include "teta/kernels.hpp"

namespace teta::nn {

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "linear";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  throw ParseError("unknown activation '" + s + "'");
}

std::string to_string(Optimizer o) {
  switch (o) {
    case Optimizer::sgd: return "sgd";
    case Optimizer::sgd_momentum: return "sgd_momentum";
    case Optimizer::adam: return "adam";
  }
  return "?";
}

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "sgd_momentum" || s == "momentum") return Optimizer::sgd_momentum;
  if (s == "adam") return Optimizer::adam;
  throw ParseError("unknown optimizer '" + s + "'");
}

NetworkSpec NetworkSpec::bus_default(std::uint64_t seed) {
  NetworkSpec s;
  s.layer_sizes = {237, 320, 200, 100, 40, 5, 1};
  s.seed = seed;
  return s;
}

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw DomainError("a network needs at least an input and an output size");
  }
  for (auto n : layer_sizes) {
    if (n == 0) throw DomainError("layer size 0 is not allowed");
  }
  if (layer_sizes.back() != 1) {
    throw DomainError("the output layer must have exactly one unit");
  }
}

Network init_network(const NetworkSpec& spec) {
  spec.validate();
  Network net;
  net.spec = spec;
  std::mt19937_64 rng(spec.seed);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto fan_in = spec.layer_sizes[l];
    const auto fan_out = spec.layer_sizes[l + 1];
    DenseLayer layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)};
    std::normal_distribution<double> dist(
        0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& w : layer.weights.flat()) w = dist(rng);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

namespace {

void check_width(const Network& net, std::size_t width) {
  if (width != net.input_width()) {
    throw DimensionError("input width " + std::to_string(width) +
                         " does not match network input " +
                         std::to_string(net.input_width()));
  }
}

void apply_activation(Activation a, const Matrix& pre, Matrix& post) {
  post.resize(pre.rows(), pre.cols());
  auto src = pre.flat();
  auto dst = post.flat();
  if (a == Activation::relu) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
  } else {
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

Activation activation_of(const Network& net, std::size_t layer) {
  return layer + 1 == net.layers.size() ? net.spec.output_activation
                                        : net.spec.hidden_activation;
}

// Forward pass without caches: two ping-pong buffers.
void infer_into(const Network& net, const Matrix& x, Matrix& a, Matrix& b,
                std::span<double> out) {
  const Matrix* in = &x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix& z = (l % 2 == 0) ? a : b;
    kernels::dense_forward(*in, net.layers[l].weights, net.layers[l].bias, z);
    if (activation_of(net, l) == Activation::relu) {
      for (auto& v : z.flat()) v = v > 0.0 ? v : 0.0;
    }
    in = &z;
  }
  std::copy(in->flat().begin(), in->flat().end(), out.begin());
}

}  // namespace

void forward_batch(const Network& net, const Matrix& x, ForwardCache& cache) {
  check_width(net, x.cols());
  const auto layers = net.layers.size();
  cache.pre.resize(layers);
  cache.post.resize(layers);
  const Matrix* in = &x;
  for (std::size_t l = 0; l < layers; ++l) {
    kernels::dense_forward(*in, net.layers[l].weights, net.layers[l].bias,
                           cache.pre[l]);
    apply_activation(activation_of(net, l), cache.pre[l], cache.post[l]);
    in = &cache.post[l];
  }
}

ForwardResult forward(const Network& net, std::span<const double> x) {
  check_width(net, x.size());
  Matrix input(1, x.size());
  std::copy(x.begin(), x.end(), input.row(0).begin());
  ForwardResult r;
  forward_batch(net, input, r.cache);
  r.prediction = r.cache.post.back()(0, 0);
  if (!std::isfinite(r.prediction)) {
    throw DomainError("forward pass produced a non-finite output");
  }
  return r;
}

double mse_loss(std::span<const double> preds, std::span<const double> targets) {
  if (preds.empty()) throw DomainError("mse_loss of an empty batch");
  if (preds.size() != targets.size()) {
    throw DimensionError("mse_loss: " + std::to_string(preds.size()) +
                         " predictions vs " + std::to_string(targets.size()) +
                         " targets");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double d = preds[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(preds.size());
}

Gradients zero_gradients(const Network& net) {
  Gradients g;
  for (const auto& layer : net.layers) {
    g.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

void backward(const Network& net, const Matrix& x, std::span<const double> y,
              const ForwardCache& cache, Gradients& grads) {
  const auto layers = net.layers.size();
  const std::size_t n = x.rows();
  if (cache.pre.size() != layers || cache.post.size() != layers ||
      cache.post.back().rows() != n) {
    throw DimensionError("forward cache does not match the batch");
  }
  if (y.size() != n) {
    throw DimensionError("batch has " + std::to_string(n) + " rows but " +
                         std::to_string(y.size()) + " targets");
  }
  if (grads.weights.size() != layers) grads = zero_gradients(net);

  // d(mean squared error)/d(prediction)
  Matrix delta(n, 1);
  const double scale = 2.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    delta(i, 0) = scale * (cache.post.back()(i, 0) - y[i]);
  }
  Matrix upstream;
  for (std::size_t l = layers; l-- > 0;) {
    if (activation_of(net, l) == Activation::relu) {
      auto pre = cache.pre[l].flat();
      auto d = delta.flat();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(pre[i] > 0.0)) d[i] = 0.0;
      }
    }
    const Matrix& input = l == 0 ? x : cache.post[l - 1];
    kernels::dense_backward_params(delta, input, grads.weights[l],
                                   grads.bias[l]);
    if (l > 0) {
      kernels::dense_backward_input(delta, net.layers[l].weights, upstream);
      std::swap(delta, upstream);
    }
  }
}

Gradients backward(const Network& net, const Matrix& x,
                   std::span<const double> y, const ForwardCache& cache) {
  Gradients g = zero_gradients(net);
  backward(net, x, y, cache, g);
  return g;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw DomainError("learning rate must be finite and non-negative");
  }
  if (batch_size == 0) throw DomainError("batch size must be at least 1");
  if (epochs <= 0) throw DomainError("epochs must be positive");
  if (early_stop_patience && *early_stop_patience <= 0) {
    throw DomainError("early-stop patience must be positive");
  }
}

void TrainingLog::write_jsonl(std::ostream& out) const {
  for (const auto& e : epochs) {
    nlohmann::json j{{"epoch", e.epoch},
                     {"train_rmse", e.train_rmse},
                     {"val_rmse", std::isnan(e.val_rmse) ? nlohmann::json(nullptr)
                                                         : nlohmann::json(e.val_rmse)},
                     {"seconds", e.seconds}};
    out << j.dump() << '\n';
  }
}

namespace {

class OptimizerState {
 public:
  OptimizerState(const Network& net, const TrainConfig& cfg)
      : cfg_(cfg), first_(zero_gradients(net)), second_(zero_gradients(net)) {}

  void step(Network& net, const Gradients& g) {
    ++t_;
    const double lr = cfg_.learning_rate;
    double bc1 = 1.0, bc2 = 1.0;
    if (cfg_.optimizer == Optimizer::adam) {
      bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      update(net.layers[l].weights.flat(), g.weights[l].flat(),
             first_.weights[l].flat(), second_.weights[l].flat(), lr, bc1, bc2);
      update(net.layers[l].bias, g.bias[l], first_.bias[l], second_.bias[l], lr,
             bc1, bc2);
    }
  }

 private:
  void update(std::span<double> p, std::span<const double> g,
              std::span<double> m, std::span<double> v, double lr, double bc1,
              double bc2) const {
    switch (cfg_.optimizer) {
      case Optimizer::sgd:
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
        break;
      case Optimizer::sgd_momentum: {
        const double mu = cfg_.momentum;
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[i] = mu * m[i] + g[i];
          p[i] -= lr * m[i];
        }
        break;
      }
      case Optimizer::adam: {
        const double b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.adam_epsilon;
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[i] = b1 * m[i] + (1.0 - b1) * g[i];
          v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
          p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
        break;
      }
    }
  }

  const TrainConfig& cfg_;
  Gradients first_;
  Gradients second_;
  long t_ = 0;
};

double rmse_of(const Network& net, const Dataset& data) {
  auto preds = predict(net, data.x);
  return std::sqrt(mse_loss(preds, data.y));
}

}  // namespace

TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg,
                  const Dataset& validation) {
  cfg.validate();
  if (data.size() == 0) throw DomainError("training set is empty");
  if (data.x.rows() != data.size()) {
    throw DimensionError("training matrix rows do not match targets");
  }
  check_width(net, data.x.cols());
  const bool has_val = validation.size() > 0;
  if (has_val) check_width(net, validation.x.cols());

  const std::size_t n = data.size();
  const std::size_t batch = std::min(cfg.batch_size, n);
  const std::size_t width = data.x.cols();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.shuffle_seed);

  OptimizerState opt(net, cfg);
  ForwardCache cache;
  Gradients grads = zero_gradients(net);
  Matrix xb;
  std::vector<double> yb;

  TrainResult result;
  result.network = net;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    double sse = 0.0;
    long batch_no = 0;
    for (std::size_t start = 0; start < n; start += batch, ++batch_no) {
      const std::size_t rows = std::min(batch, n - start);
      xb.resize(rows, width);
      yb.resize(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        auto src = data.x.row(order[start + r]);
        std::copy(src.begin(), src.end(), xb.row(r).begin());
        yb[r] = data.y[order[start + r]];
      }
      forward_batch(net, xb, cache);
      const double loss = mse_loss(cache.post.back().flat(), yb);
      if (!std::isfinite(loss)) {
        throw DivergenceError(epoch, batch_no, "loss is not finite");
      }
      sse += loss * static_cast<double>(rows);
      backward(net, xb, yb, cache, grads);
      opt.step(net, grads);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_rmse = std::sqrt(sse / static_cast<double>(n));
    log.val_rmse = has_val ? rmse_of(net, validation)
                           : std::numeric_limits<double>::quiet_NaN();
    if (has_val && !std::isfinite(log.val_rmse)) {
      throw DivergenceError(epoch, batch_no, "validation RMSE is not finite");
    }
    log.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    result.log.epochs.push_back(log);

    const double score = has_val ? log.val_rmse : log.train_rmse;
    if (score < best || !has_val) {
      best = score;
      since_best = 0;
      result.network = net;
      result.log.best_epoch = epoch;
      result.log.best_val_rmse = log.val_rmse;
    } else if (cfg.early_stop_patience && ++since_best >= *cfg.early_stop_patience) {
      break;
    }
  }
  return result;
}

std::size_t param_count(const NetworkSpec& spec) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    total += spec.layer_sizes[l] * spec.layer_sizes[l + 1] + spec.layer_sizes[l + 1];
  }
  return total;
}

std::size_t param_count(const Network& net) {
  std::size_t total = 0;
  for (const auto& layer : net.layers) {
    total += layer.weights.size() + layer.bias.size();
  }
  return total;
}

MacCount mac_count(const NetworkSpec& spec) {
  MacCount c;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const auto in = spec.layer_sizes[l];
    const auto out = spec.layer_sizes[l + 1];
    c.multiply_accumulates += in * out;
    c.bias_adds += out;
    if (l + 2 < spec.layer_sizes.size()) c.activations += out;
  }
  return c;
}

MacCount mac_count(const Network& net) { return mac_count(net.spec); }

std::vector<double> predict(const Network& net, const Matrix& x) {
  check_width(net, x.cols());
  std::vector<double> out(x.rows());
  constexpr std::size_t kChunk = 4096;
  Matrix chunk, a, b;
  for (std::size_t start = 0; start < x.rows(); start += kChunk) {
    const std::size_t rows = std::min(kChunk, x.rows() - start);
    chunk.resize(rows, x.cols());
    std::copy(x.row(start).begin(), x.row(start).begin() + static_cast<std::ptrdiff_t>(rows * x.cols()),
              chunk.flat().begin());
    infer_into(net, chunk, a, b, std::span<double>(out).subspan(start, rows));
  }
  return out;
}

double predict_one(const Network& net, std::span<const double> x) {
  check_width(net, x.size());
  Matrix input(1, x.size());
  std::copy(x.begin(), x.end(), input.row(0).begin());
  Matrix a, b;
  double out = 0.0;
  infer_into(net, input, a, b, std::span<double>(&out, 1));
  return out;
}

BatchPrediction predict_batch(const Network& net, const Matrix& x) {
  check_width(net, x.cols());
  BatchPrediction result;
  const std::size_t n = x.rows();
  if (n == 0) return result;
  result.values.resize(n);
  const std::size_t warmup = std::min<std::size_t>(100, n / 10);
  std::vector<double> ms;
  ms.reserve(n - warmup);
  Matrix input(1, x.cols()), a, b;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    std::copy(x.row(i).begin(), x.row(i).end(), input.row(0).begin());
    infer_into(net, input, a, b, std::span<double>(result.values).subspan(i, 1));
    const auto t1 = std::chrono::steady_clock::now();
    if (i >= warmup) {
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  }
  LatencyStats stats;
  stats.samples = ms.size();
  stats.warmup = warmup;
  stats.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) /
                  static_cast<double>(ms.size());
  std::sort(ms.begin(), ms.end());
  stats.p50_ms = ms[ms.size() / 2];
  stats.p99_ms = ms[std::min(ms.size() - 1, ms.size() * 99 / 100)];
  result.latency = stats;
  return result;
}

}  // namespace teta::nn
