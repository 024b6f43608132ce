#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teta/features.hpp"
#include "teta/ingest.hpp"
#include "teta/time.hpp"

namespace teta {

// sqrt(sum((actual - predicted)^2) / n). Throws DomainError on empty input
// and DimensionError on unequal lengths.
double rmse(std::span<const double> predicted, std::span<const double> actual);

struct FiveNumberSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Quartiles by linear interpolation between order statistics (type 7).
FiveNumberSummary five_number_summary(std::vector<double> values);

// Resolves a schedule time-of-day to the calendar date (day before, same day
// or day after `arrival`) that lies closest to the actual arrival.
Timestamp resolve_schedule(TimeOfDay scheduled, Timestamp arrival);

// Signed seconds; positive means the bus ran late.
double schedule_delay(Timestamp arrival, TimeOfDay scheduled);

struct DelayStats {
  double mean_delay_s = 0.0;
  double mean_mismatch_s = 0.0;  // mean |delay|
  std::size_t used = 0;
  std::size_t unresolved = 0;    // records without a schedule
  std::map<std::string, double> per_line_mean_delay;
};

DelayStats delay_stats(std::span<const CleanRecord> records);

struct LineRmse {
  double rmse = 0.0;
  std::size_t samples = 0;
};

struct EvalReport {
  double overall_rmse = 0.0;
  std::size_t samples = 0;
  std::map<std::string, LineRmse> per_line;
  std::vector<std::string> lines_without_samples;
  FiveNumberSummary rmse_distribution;  // over per-line RMSEs
  std::optional<DelayStats> delay;
};

// Groups predictions by each vector's line index. Lines of the vocabulary
// that have no samples are listed in lines_without_samples. Throws
// DomainError on an empty set.
EvalReport per_line_report(std::span<const double> predicted,
                           std::span<const FeatureVector> samples,
                           const LineVocabulary& lines);

std::string eval_report_json(const EvalReport& report);
std::string delay_stats_json(const DelayStats& stats);

// line,rmse,n
void write_per_line_csv(std::ostream& out, const EvalReport& report);

// Whitespace-separated columns for gnuplot: rank line rmse n mean_delay
void write_plot_data(std::ostream& out, const EvalReport& report);

}  // namespace teta
