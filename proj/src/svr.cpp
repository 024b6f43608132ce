#include "teta/svr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "teta/error.hpp"
#include "teta/kernels.hpp"

namespace teta::svr {

void SvrConfig::validate() const {
  if (!(C > 0.0)) throw DomainError("SVR: C must be positive");
  if (!(epsilon >= 0.0)) throw DomainError("SVR: epsilon must be >= 0");
  if (!(gamma > 0.0)) throw DomainError("SVR: gamma must be positive");
  if (!(tol > 0.0)) throw DomainError("SVR: tol must be positive");
  if (max_iterations <= 0) throw DomainError("SVR: max_iterations must be > 0");
  if (cache_rows < 2) throw DomainError("SVR: cache must hold >= 2 rows");
}

const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "ok";
    case FitStatus::max_iterations: return "NOT_CONVERGED";
    case FitStatus::timeout: return "TIMEOUT";
  }
  return "?";
}

double rbf_kernel(std::span<const double> x, std::span<const double> y,
                  double gamma) {
  if (x.size() != y.size()) {
    throw DimensionError("rbf_kernel: widths " + std::to_string(x.size()) +
                         " and " + std::to_string(y.size()));
  }
  if (!(gamma > 0.0)) throw DomainError("rbf_kernel: gamma must be positive");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

namespace {

// Least-recently-used cache of kernel matrix rows, keyed by sample.
class KernelRowCache {
 public:
  KernelRowCache(const Matrix& x, double gamma, std::size_t capacity)
      : x_(x), gamma_(gamma), capacity_(capacity), norms_(x.rows()) {
    kernels::row_sq_norms(x_, norms_);
  }

  const std::vector<double>& row(std::size_t i) {
    auto it = index_.find(i);
    if (it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->values;
    }
    if (lru_.size() >= capacity_) {
      auto& victim = lru_.back();
      index_.erase(victim.sample);
      victim.sample = i;
      lru_.splice(lru_.begin(), lru_, std::prev(lru_.end()));
    } else {
      lru_.push_front(Entry{i, std::vector<double>(x_.rows())});
    }
    index_[i] = lru_.begin();
    kernels::rbf_row(x_, norms_, i, gamma_, lru_.front().values);
    return lru_.front().values;
  }

 private:
  struct Entry {
    std::size_t sample;
    std::vector<double> values;
  };
  const Matrix& x_;
  double gamma_;
  std::size_t capacity_;
  std::vector<double> norms_;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

constexpr double kTau = 1e-12;

}  // namespace

SvrModel fit_svr(const Matrix& x, std::span<const double> y,
                 const SvrConfig& cfg) {
  cfg.validate();
  const std::size_t l = x.rows();
  if (l < 2) throw DomainError("SVR needs at least 2 samples");
  if (y.size() != l) {
    throw DimensionError("SVR: " + std::to_string(l) + " rows but " +
                         std::to_string(y.size()) + " targets");
  }
  const std::size_t n = 2 * l;
  const double C = cfg.C;

  // Variable t < l is alpha_t (sign +1), t >= l is alpha*_{t-l} (sign -1).
  auto sign = [l](std::size_t t) { return t < l ? 1.0 : -1.0; };
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n);
  for (std::size_t t = 0; t < l; ++t) {
    grad[t] = cfg.epsilon - y[t];
    grad[t + l] = cfg.epsilon + y[t];
  }
  auto in_up = [&](std::size_t t) {
    return sign(t) > 0 ? alpha[t] < C : alpha[t] > 0.0;
  };
  auto in_low = [&](std::size_t t) {
    return sign(t) > 0 ? alpha[t] > 0.0 : alpha[t] < C;
  };

  KernelRowCache cache(x, cfg.gamma, std::min(cfg.cache_rows, l));
  const auto started = std::chrono::steady_clock::now();

  SvrModel model;
  model.gamma = cfg.gamma;
  model.status = FitStatus::max_iterations;
  long iter = 0;
  double gap = 0.0;
  for (; iter < cfg.max_iterations; ++iter) {
    if (cfg.time_budget_seconds && (iter & 63) == 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count() > *cfg.time_budget_seconds) {
      model.status = FitStatus::timeout;
      break;
    }
    // Maximal violating pair.
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -sign(t) * grad[t];
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    gap = g_max - g_min;
    if (i == n || j == n || gap <= cfg.tol) {
      model.status = FitStatus::converged;
      break;
    }

    const auto& ki = cache.row(i % l);
    const double kii = ki[i % l];
    const double kij = ki[j % l];
    // Fetching row j cannot evict row i: it is the most recent of >= 2.
    const auto& kj = cache.row(j % l);
    const double kjj = kj[j % l];
    const double yi = sign(i), yj = sign(j);
    const double old_i = alpha[i], old_j = alpha[j];

    if (yi != yj) {
      double quad = kii + kjj - 2.0 * kij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = kii + kjj - 2.0 * kij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = sum;
        }
      }
    }

    // grad_t += Q_ti * d_i + Q_tj * d_j with Q_ts = s_t s_s K(t mod l, s mod l).
    const double di = (alpha[i] - old_i) * yi;
    const double dj = (alpha[j] - old_j) * yj;
    const auto& row_i = cache.row(i % l);
    const auto& row_j = cache.row(j % l);
    for (std::size_t t = 0; t < l; ++t) {
      const double q = row_i[t] * di + row_j[t] * dj;
      grad[t] += q;
      grad[t + l] -= q;
    }
  }
  model.iterations = iter;
  model.max_kkt_violation = gap;

  // Bias from free variables, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = sign(t) * grad[t];
    if (alpha[t] >= C) {
      if (sign(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (sign(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                    : (ub + lb) / 2.0;
  model.bias = -rho;

  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < l; ++t) {
    if (alpha[t] - alpha[t + l] != 0.0) sv.push_back(t);
  }
  model.support_vectors = Matrix(sv.size(), x.cols());
  model.coefficients.reserve(sv.size());
  model.support_indices = sv;
  for (std::size_t k = 0; k < sv.size(); ++k) {
    auto src = x.row(sv[k]);
    std::copy(src.begin(), src.end(), model.support_vectors.row(k).begin());
    model.coefficients.push_back(alpha[sv[k]] - alpha[sv[k] + l]);
  }
  for (double c : model.coefficients) model.coefficient_sum += c;
  return model;
}

double predict_svr(const SvrModel& model, std::span<const double> x) {
  if (model.support_count() > 0 && x.size() != model.support_vectors.cols()) {
    throw DimensionError("predict_svr: input width " + std::to_string(x.size()) +
                         " != support vector width " +
                         std::to_string(model.support_vectors.cols()));
  }
  double f = model.bias;
  for (std::size_t k = 0; k < model.support_count(); ++k) {
    f += model.coefficients[k] *
         rbf_kernel(x, model.support_vectors.row(k), model.gamma);
  }
  return f;
}

std::vector<double> predict_svr(const SvrModel& model, const Matrix& x) {
  std::vector<double> out(x.rows());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_svr(model, x.row(i));
  return out;
}

}  // namespace teta::svr
