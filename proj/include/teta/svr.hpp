#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "teta/matrix.hpp"

namespace teta::svr {

struct SvrConfig {
  double C = 100.0;
  double epsilon = 5.0;        // tube half-width, seconds
  double gamma = 1.0 / 237.0;  // RBF width
  double tol = 1e-3;           // stop when the maximal KKT violation <= tol
  long max_iterations = 10'000'000;
  std::optional<double> time_budget_seconds = 30.0 * 60.0;
  std::size_t cache_rows = 2048;  // kernel rows kept in the LRU cache

  void validate() const;
};

enum class FitStatus { converged, max_iterations, timeout };

const char* to_string(FitStatus s);

struct SvrModel {
  Matrix support_vectors;             // one row per support vector
  std::vector<double> coefficients;   // alpha - alpha*, in [-C, C]
  std::vector<std::size_t> support_indices;  // rows of the training X
  double bias = 0.0;
  double gamma = 0.0;

  FitStatus status = FitStatus::converged;
  long iterations = 0;
  double max_kkt_violation = 0.0;  // m(alpha) - M(alpha) at exit
  double coefficient_sum = 0.0;

  std::size_t support_count() const { return coefficients.size(); }
};

// exp(-gamma * |x - y|^2). Throws DimensionError on unequal lengths and
// DomainError on gamma <= 0.
double rbf_kernel(std::span<const double> x, std::span<const double> y,
                  double gamma);

// Epsilon-SVR by sequential minimal optimization on the 2N-variable dual.
// Throws DomainError for N < 2 and DimensionError when x and y disagree.
// Non-convergence and budget exhaustion are reported through `status`.
SvrModel fit_svr(const Matrix& x, std::span<const double> y,
                 const SvrConfig& cfg);

double predict_svr(const SvrModel& model, std::span<const double> x);
std::vector<double> predict_svr(const SvrModel& model, const Matrix& x);

}  // namespace teta::svr
