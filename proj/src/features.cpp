#include "teta/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include "teta/error.hpp"

namespace teta {

using namespace std::chrono;

DayType derive_day_type(Timestamp t) {
  weekday wd{floor<days>(t)};
  return (wd == Saturday || wd == Sunday) ? DayType::weekend : DayType::workday;
}

bool derive_rush_hour(Timestamp t) {
  auto s = seconds_of_day(t);
  constexpr std::int64_t h = 3600;
  return (s >= 6 * h && s < 10 * h) || (s >= 15 * h && s < 19 * h);
}

bool derive_far_status(double distance_m, double threshold) {
  if (!(distance_m >= 0.0)) {
    throw DomainError("distance must be non-negative, got " +
                      std::to_string(distance_m));
  }
  return distance_m < threshold;
}

std::int64_t compute_trip_time(Timestamp arrival, Timestamp observed) {
  if (arrival < observed) {
    throw DomainError("arrival " + format_timestamp(arrival) +
                      " precedes observation " + format_timestamp(observed));
  }
  return (arrival - observed).count();
}

LineVocabulary::LineVocabulary(std::vector<std::string> names) {
  for (auto& n : names) add(n);
}

std::optional<std::size_t> LineVocabulary::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t LineVocabulary::add(const std::string& name) {
  auto [it, inserted] = index_.try_emplace(name, names_.size());
  if (inserted) names_.push_back(name);
  return it->second;
}

std::optional<int> StopVocabulary::find(const std::string& line,
                                        const std::string& stop) const {
  auto l = codes_.find(line);
  if (l == codes_.end()) return std::nullopt;
  auto s = l->second.find(stop);
  if (s == l->second.end()) return std::nullopt;
  return s->second;
}

int StopVocabulary::add(const std::string& line, const std::string& stop) {
  auto& codes = codes_[line];
  auto& list = stops_[line];
  auto [it, inserted] = codes.try_emplace(stop, static_cast<int>(list.size()));
  if (inserted) list.push_back(stop);
  return it->second;
}

StopVocabulary StopVocabulary::from_lists(
    const std::map<std::string, std::vector<std::string>>& stops) {
  StopVocabulary v;
  for (const auto& [line, names] : stops) {
    for (const auto& s : names) v.add(line, s);
  }
  return v;
}

Vocabularies fit_vocabularies(std::span<const CleanRecord> train) {
  if (train.empty()) throw DomainError("cannot fit vocabularies on no records");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    const auto& x = train[a];
    const auto& y = train[b];
    return std::tie(x.line_name, x.vehicle_ref, x.recorded_at) <
           std::tie(y.line_name, y.vehicle_ref, y.recorded_at);
  });
  Vocabularies v;
  for (auto i : order) {
    v.lines.add(train[i].line_name);
    v.stops.add(train[i].line_name, train[i].next_stop_name);
  }
  return v;
}

MinMaxScaler::MinMaxScaler(std::vector<double> min, std::vector<double> max)
    : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) {
    throw DimensionError("scaler min/max widths differ");
  }
  for (std::size_t i = 0; i < min_.size(); ++i) {
    if (!(max_[i] >= min_[i])) {
      throw DomainError("scaler max < min in column " + std::to_string(i));
    }
  }
}

MinMaxScaler MinMaxScaler::fit(const Matrix& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) {
    throw DomainError("cannot fit a scaler on an empty matrix");
  }
  std::vector<double> lo(rows.row(0).begin(), rows.row(0).end());
  std::vector<double> hi = lo;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    auto row = rows.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        throw DomainError("non-finite value in scaler input, column " +
                          std::to_string(c));
      }
      lo[c] = std::min(lo[c], row[c]);
      hi[c] = std::max(hi[c], row[c]);
    }
  }
  return MinMaxScaler(std::move(lo), std::move(hi));
}

double MinMaxScaler::transform(std::size_t column, double value) const {
  double span = max_[column] - min_[column];
  if (span == 0.0) return 0.0;
  return (value - min_[column]) / span;
}

double MinMaxScaler::inverse_transform(std::size_t column,
                                       double scaled) const {
  return min_[column] + scaled * (max_[column] - min_[column]);
}

void MinMaxScaler::transform_row(std::span<double> row) const {
  if (row.size() != width()) {
    throw DimensionError("row width " + std::to_string(row.size()) +
                         " != scaler width " + std::to_string(width()));
  }
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = transform(c, row[c]);
}

std::vector<double> raw_features(const std::string& line,
                                 const std::string& stop, double distance_m,
                                 Timestamp observed, const Vocabularies& vocab,
                                 const FeatureConfig& config) {
  auto line_index = vocab.lines.find(line);
  if (!line_index) throw UnknownLine(line);
  if (*line_index >= config.line_slots) {
    throw DomainError("line index exceeds the one-hot width");
  }
  std::vector<double> row(config.width(), 0.0);
  row[*line_index] = 1.0;
  row[config.column(ScalarFeature::distance)] = distance_m;
  row[config.column(ScalarFeature::day_type)] =
      derive_day_type(observed) == DayType::weekend ? 1.0 : 0.0;
  row[config.column(ScalarFeature::rush_hour)] =
      derive_rush_hour(observed) ? 1.0 : 0.0;
  row[config.column(ScalarFeature::stop_code)] =
      vocab.stops.find(line, stop).value_or(kUnknownStopCode);
  row[config.column(ScalarFeature::far_status)] =
      derive_far_status(distance_m, config.far_threshold_m) ? 1.0 : 0.0;
  return row;
}

std::vector<double> raw_features(const CleanRecord& r,
                                 const Vocabularies& vocab,
                                 const FeatureConfig& config) {
  return raw_features(r.line_name, r.next_stop_name, r.distance_from_stop,
                      r.recorded_at, vocab, config);
}

void scale_features(std::span<double> row, const MinMaxScaler& scaler,
                    const FeatureConfig& config) {
  auto stop_col = config.column(ScalarFeature::stop_code);
  if (row[stop_col] == kUnknownStopCode) {
    row[stop_col] = std::max(row[stop_col], scaler.min()[stop_col]);
  }
  scaler.transform_row(row);
}

Preprocessor fit_preprocessor(std::span<const CleanRecord> train,
                              const FeatureConfig& config) {
  Preprocessor prep;
  prep.config = config;
  prep.vocab = fit_vocabularies(train);
  if (prep.vocab.lines.size() > config.line_slots) {
    throw DomainError("training data has " +
                      std::to_string(prep.vocab.lines.size()) +
                      " lines but only " + std::to_string(config.line_slots) +
                      " one-hot slots");
  }
  Matrix raw(train.size(), config.width());
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto row = raw_features(train[i], prep.vocab, config);
    std::copy(row.begin(), row.end(), raw.row(i).begin());
  }
  prep.scaler = MinMaxScaler::fit(raw);
  return prep;
}

namespace {

FeatureVector make_vector(const CleanRecord& r, const Preprocessor& prep) {
  FeatureVector v;
  v.values = raw_features(r, prep.vocab, prep.config);
  scale_features(v.values, prep.scaler, prep.config);
  v.target_trip_time =
      static_cast<double>(compute_trip_time(r.arrival_time, r.recorded_at));
  v.line_index = *prep.vocab.lines.find(r.line_name);
  return v;
}

}  // namespace

std::vector<FeatureVector> build_features(std::span<const CleanRecord> records,
                                          const Preprocessor& prep) {
  if (!prep.scaler.fitted()) throw DomainError("preprocessor is not fitted");
  std::vector<FeatureVector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(make_vector(r, prep));
  return out;
}

std::vector<FeatureVector> build_features_lenient(
    std::span<const CleanRecord> records, const Preprocessor& prep,
    std::size_t* skipped_unknown_line) {
  if (!prep.scaler.fitted()) throw DomainError("preprocessor is not fitted");
  std::vector<FeatureVector> out;
  out.reserve(records.size());
  std::size_t skipped = 0;
  for (const auto& r : records) {
    if (!prep.vocab.lines.find(r.line_name)) {
      ++skipped;
      continue;
    }
    out.push_back(make_vector(r, prep));
  }
  if (skipped_unknown_line) *skipped_unknown_line = skipped;
  return out;
}

SplitIndices split_indices(std::size_t n, double ratio, std::uint64_t seed) {
  if (n < 2) throw DomainError("need at least 2 samples to split");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DomainError("split ratio must lie in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

std::pair<Matrix, std::vector<double>> to_design(
    std::span<const FeatureVector> vectors) {
  std::pair<Matrix, std::vector<double>> out;
  if (vectors.empty()) return out;
  auto width = vectors.front().values.size();
  out.first = Matrix(vectors.size(), width);
  out.second.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != width) {
      throw DimensionError("feature vectors of unequal width");
    }
    std::copy(vectors[i].values.begin(), vectors[i].values.end(),
              out.first.row(i).begin());
    out.second.push_back(vectors[i].target_trip_time);
  }
  return out;
}

}  // namespace teta
