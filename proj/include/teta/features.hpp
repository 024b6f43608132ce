#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "teta/ingest.hpp"
#include "teta/matrix.hpp"
#include "teta/time.hpp"

namespace teta {

inline constexpr std::size_t kDefaultLineSlots = 232;
inline constexpr std::size_t kScalarFeatures = 5;
inline constexpr double kDefaultFarThresholdMeters = 750.0;
inline constexpr int kUnknownStopCode = -1;

// Column offsets of the scalar features, relative to the end of the one-hot
// block.
enum class ScalarFeature : std::size_t {
  distance = 0,
  day_type = 1,
  rush_hour = 2,
  stop_code = 3,
  far_status = 4,
};

enum class DayType { workday = 0, weekend = 1 };

DayType derive_day_type(Timestamp t);

// [06:00, 10:00) or [15:00, 19:00).
bool derive_rush_hour(Timestamp t);

// True iff the bus is closer than `threshold` meters. Throws DomainError on a
// negative distance.
bool derive_far_status(double distance_m,
                       double threshold = kDefaultFarThresholdMeters);

// Whole seconds from observation to arrival. Throws DomainError if the bus
// "arrived" before it was observed.
std::int64_t compute_trip_time(Timestamp arrival, Timestamp observed);

class LineVocabulary {
 public:
  LineVocabulary() = default;
  explicit LineVocabulary(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::optional<std::size_t> find(const std::string& name) const;

  // Appends if absent; returns the index either way.
  std::size_t add(const std::string& name);

  friend bool operator==(const LineVocabulary& a, const LineVocabulary& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

class StopVocabulary {
 public:
  std::optional<int> find(const std::string& line,
                          const std::string& stop) const;
  int add(const std::string& line, const std::string& stop);

  // Per line, stop names ordered by code.
  const std::map<std::string, std::vector<std::string>>& stops() const {
    return stops_;
  }
  static StopVocabulary from_lists(
      const std::map<std::string, std::vector<std::string>>& stops);

  friend bool operator==(const StopVocabulary& a, const StopVocabulary& b) {
    return a.stops_ == b.stops_;
  }

 private:
  std::map<std::string, std::vector<std::string>> stops_;
  std::map<std::string, std::unordered_map<std::string, int>> codes_;
};

struct Vocabularies {
  LineVocabulary lines;
  StopVocabulary stops;
};

// Codes are assigned in first-appearance order after a stable sort of the
// records by (line, vehicle, observation time). Throws DomainError on empty
// input.
Vocabularies fit_vocabularies(std::span<const CleanRecord> train);

class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> min, std::vector<double> max);

  // Throws DomainError on an empty matrix or non-finite values.
  static MinMaxScaler fit(const Matrix& rows);

  bool fitted() const { return !min_.empty(); }
  std::size_t width() const { return min_.size(); }
  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }

  // Constant columns map to 0.
  double transform(std::size_t column, double value) const;
  double inverse_transform(std::size_t column, double scaled) const;
  void transform_row(std::span<double> row) const;

  friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

struct FeatureConfig {
  std::size_t line_slots = kDefaultLineSlots;
  double far_threshold_m = kDefaultFarThresholdMeters;

  std::size_t width() const { return line_slots + kScalarFeatures; }
  std::size_t column(ScalarFeature f) const {
    return line_slots + static_cast<std::size_t>(f);
  }
  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

struct FeatureVector {
  std::vector<double> values;   // scaled model input
  double target_trip_time = 0;  // seconds, unscaled
  std::size_t line_index = 0;
};

// Everything needed to turn a record into model input at inference time.
struct Preprocessor {
  FeatureConfig config;
  Vocabularies vocab;
  MinMaxScaler scaler;
};

// Unscaled feature row for one record (one-hot block, then the five scalar
// features). Unknown stops get kUnknownStopCode. Throws UnknownLine.
std::vector<double> raw_features(const CleanRecord& r,
                                 const Vocabularies& vocab,
                                 const FeatureConfig& config);

// Same, from the four request-level inputs the service receives.
std::vector<double> raw_features(const std::string& line,
                                 const std::string& stop, double distance_m,
                                 Timestamp observed, const Vocabularies& vocab,
                                 const FeatureConfig& config);

// Scales a raw row; an unknown stop code is first clamped to the fitted
// minimum of its column.
void scale_features(std::span<double> row, const MinMaxScaler& scaler,
                    const FeatureConfig& config);

// Fits vocabularies on `train`, then the scaler on train's raw rows.
// Throws DomainError if more lines are seen than there are one-hot slots.
Preprocessor fit_preprocessor(std::span<const CleanRecord> train,
                              const FeatureConfig& config = {});

std::vector<FeatureVector> build_features(std::span<const CleanRecord> records,
                                          const Preprocessor& prep);

// Like build_features, but records on lines outside the vocabulary are
// skipped and counted instead of raising UnknownLine.
std::vector<FeatureVector> build_features_lenient(
    std::span<const CleanRecord> records, const Preprocessor& prep,
    std::size_t* skipped_unknown_line);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Seeded shuffle, then the first round(ratio * n) indices go to train.
// Throws DomainError for n < 2 or ratio outside (0, 1).
SplitIndices split_indices(std::size_t n, double ratio, std::uint64_t seed);

template <class T>
std::pair<std::vector<T>, std::vector<T>> split(std::span<const T> data,
                                                double ratio,
                                                std::uint64_t seed) {
  auto idx = split_indices(data.size(), ratio, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(idx.train.size());
  out.second.reserve(idx.validation.size());
  for (auto i : idx.train) out.first.push_back(data[i]);
  for (auto i : idx.validation) out.second.push_back(data[i]);
  return out;
}

// Stacks feature vectors into a design matrix and target vector.
std::pair<Matrix, std::vector<double>> to_design(
    std::span<const FeatureVector> vectors);

}  // namespace teta
