#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "teta/features.hpp"
#include "teta/neuralnet.hpp"

namespace teta {

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct BundleMetadata {
  std::string model_version;
  std::string data_fingerprint;
  double train_rmse = 0.0;
  double val_rmse = 0.0;
  int epochs = 0;
  int best_epoch = 0;
  std::string optimizer;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  std::uint64_t shuffle_seed = 0;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;

  friend bool operator==(const BundleMetadata&, const BundleMetadata&) = default;
};

// A trained network plus everything needed to rebuild its inputs.
struct ModelBundle {
  nn::Network network;
  Preprocessor preprocessor;
  BundleMetadata metadata;
};

// Byte layout (all integers little-endian):
//   0       4  magic "TETA"
//   4       4  u32 format version
//   8       8  u64 header length H
//   16      H  JSON header: spec, preprocessor, metadata
//   16+H    8  u64 parameter count P
//   24+H   8P  f64 parameters, layer by layer, weights row-major then bias
//   24+H+8P 4  u32 CRC-32 of every preceding byte
std::vector<std::uint8_t> serialize_bundle(const ModelBundle& bundle);

// Throws VersionMismatch for a foreign format version and IntegrityError for
// anything truncated, corrupted or inconsistent.
ModelBundle deserialize_bundle(const std::vector<std::uint8_t>& bytes);

void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

// FNV-1a over the raw bytes of a design matrix and its targets.
std::string data_fingerprint(const Matrix& x, const std::vector<double>& y);

}  // namespace teta
