#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teta/time.hpp"

namespace teta {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// One observation of one bus travelling towards its next stop, as it appears
// in the source feed (17 fields).
struct RawRecord {
  Timestamp recorded_at;
  Timestamp arrival_time;
  std::optional<TimeOfDay> scheduled_arrival;  // empty cell -> no schedule
  double distance_from_stop = 0.0;             // meters
  GeoPoint vehicle;
  GeoPoint origin;
  GeoPoint destination;
  std::string origin_name;
  std::string destination_name;
  std::string line_name;
  std::string next_stop_name;
  std::string arrival_proximity_text;
  std::string vehicle_ref;
  std::string direction_ref;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

// A record that survived cleaning. Proximity text and direction were consumed
// by the filters.
struct CleanRecord {
  Timestamp recorded_at;
  Timestamp arrival_time;
  std::optional<TimeOfDay> scheduled_arrival;
  double distance_from_stop = 0.0;
  GeoPoint vehicle;
  GeoPoint origin;
  GeoPoint destination;
  std::string origin_name;
  std::string destination_name;
  std::string line_name;
  std::string next_stop_name;
  std::string vehicle_ref;
  std::optional<double> trip_time;  // filled in by feature extraction

  friend bool operator==(const CleanRecord&, const CleanRecord&) = default;
};

// Logical field names, in canonical column order.
enum class Field {
  vehicle_lon,
  vehicle_lat,
  dest_lon,
  dest_lat,
  origin_lon,
  origin_lat,
  recorded_at,
  arrival_time,
  scheduled_arrival,
  distance_from_stop,
  origin_name,
  destination_name,
  next_stop_name,
  published_line_name,
  arrival_proximity_text,
  vehicle_ref,
  direction_ref,
};
inline constexpr std::size_t kFieldCount = 17;

std::string_view field_key(Field f);
std::optional<Field> field_from_key(std::string_view key);

// Maps each logical field to the header of the CSV column that carries it.
class ColumnMap {
 public:
  // Header names of the source feed.
  static ColumnMap defaults();

  // Reads "key = value" lines (blank lines and '#' comments skipped) and
  // overrides the defaults for the keys present. Throws ParseError on
  // unknown keys.
  static ColumnMap from_config(std::istream& in);
  static ColumnMap from_file(const std::string& path);

  const std::string& header(Field f) const;
  void set(Field f, std::string header);

 private:
  std::map<Field, std::string> headers_;
};

struct ParseOptions {
  ColumnMap columns = ColumnMap::defaults();
  std::string timestamp_format{kDefaultTimestampFormat};
  char delimiter = ',';
};

struct RowError {
  std::size_t row = 0;  // 1-based data row (header excluded)
  std::string reason;
};

struct ParseResult {
  std::vector<RawRecord> records;
  std::vector<RowError> errors;
};

// Streams a CSV with a header row. Malformed rows are skipped and reported;
// a missing required column throws SchemaError.
ParseResult parse_csv(std::istream& in, const ParseOptions& options = {});

// Writes records with a header in the layout given by `columns`, such that
// parse_csv reproduces them exactly.
void write_csv(std::ostream& out, std::span<const RawRecord> records,
               const ColumnMap& columns = ColumnMap::defaults());

struct CleanOptions {
  std::string outbound_token = "1";
  std::string at_stop_token = "at stop";  // compared case-insensitively
};

struct CleaningStats {
  std::size_t input = 0;
  std::size_t at_stop = 0;
  std::size_t inbound = 0;
  std::size_t negative_trip_time = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> direction_counts;
};

struct CleanResult {
  std::vector<CleanRecord> records;
  std::vector<std::size_t> kept_indices;  // positions in the input
  CleaningStats stats;
};

bool is_at_stop(const RawRecord& r, const CleanOptions& options = {});
bool is_outbound(const RawRecord& r, const CleanOptions& options = {});

// Drops at-stop rows, non-outbound rows, and rows whose arrival precedes the
// observation, in that order of precedence for the counters.
CleanResult clean(std::span<const RawRecord> records,
                  const CleanOptions& options = {});

CleanRecord to_clean_record(const RawRecord& r);

std::string cleaning_stats_json(const CleaningStats& stats);

}  // namespace teta
