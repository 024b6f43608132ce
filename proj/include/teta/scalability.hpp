#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "teta/features.hpp"
#include "teta/ingest.hpp"
#include "teta/neuralnet.hpp"
#include "teta/svr.hpp"

namespace teta {

struct ScalabilityConfig {
  std::vector<std::size_t> line_counts{1, 5, 10, 20, 30, 40};
  nn::TrainConfig fcnn;
  std::uint64_t network_seed = 42;
  svr::SvrConfig svr;
  FeatureConfig features;
  double split_ratio = 0.8;
  std::uint64_t split_seed = 1;
};

struct ComparisonRow {
  std::size_t line_count = 0;
  std::string model;            // "fcnn" or "svr"
  double rmse_seconds = 0.0;    // NaN when the fit did not finish
  double wall_seconds = 0.0;    // fit time
  std::string status;           // ok, TIMEOUT, NOT_CONVERGED
  std::size_t train_samples = 0;
};

// For each count k, trains both models on the records of the first k lines
// (vocabulary order over the whole input) and scores them on a held-out
// split. SVR fits that exhaust the time budget yield a TIMEOUT row and the
// experiment moves on. Throws DomainError if the input has fewer distinct
// lines than the largest requested count.
std::vector<ComparisonRow> scalability_experiment(
    std::span<const CleanRecord> records, const ScalabilityConfig& cfg);

// Columns: line_count, model, rmse_seconds, wall_seconds, status
void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows);
std::string comparison_json(std::span<const ComparisonRow> rows);

}  // namespace teta
