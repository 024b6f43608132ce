#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "teta/features.hpp"
#include "teta/ingest.hpp"
#include "teta/metrics.hpp"
#include "teta/model_store.hpp"
#include "teta/neuralnet.hpp"

namespace teta {

// Reads a CSV from `path`, or from stdin when path is "-".
ParseResult read_records(const std::string& path, const ParseOptions& options = {});

struct PipelineConfig {
  FeatureConfig features;
  double split_ratio = 0.8;
  std::uint64_t split_seed = 1;
  std::uint64_t network_seed = 42;
  nn::TrainConfig train;
  std::string model_version;  // defaults to "fcnn-<fingerprint prefix>"
};

struct TrainOutcome {
  ModelBundle bundle;
  nn::TrainingLog log;
  std::vector<CleanRecord> validation_records;
  std::vector<FeatureVector> validation;
  std::size_t skipped_unknown_line = 0;  // validation rows on unseen lines
};

// Split, fit the preprocessor on the training part, train, and package the
// result with its metadata.
TrainOutcome run_training(std::span<const CleanRecord> records,
                          const PipelineConfig& cfg);

// Scores a bundle on `records`; rows on lines unknown to the bundle are
// skipped. Delay statistics are attached when `with_delay` is set.
EvalReport evaluate_bundle(const ModelBundle& bundle,
                           std::span<const CleanRecord> records,
                           bool with_delay = true);

}  // namespace teta
