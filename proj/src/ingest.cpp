#include "teta/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "teta/error.hpp"

namespace teta {
namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>,
                     kFieldCount>
    kFieldTable{{
        {"vehicle_lon", "VehicleLocation.Longitude"},
        {"vehicle_lat", "VehicleLocation.Latitude"},
        {"dest_lon", "DestinationLong"},
        {"dest_lat", "DestinationLat"},
        {"origin_lon", "OriginLong"},
        {"origin_lat", "OriginLat"},
        {"recorded_at", "RecordedAtTime"},
        {"arrival_time", "ArrivalTime"},
        {"scheduled_arrival", "ScheduledArrivalTime"},
        {"distance_from_stop", "DistanceFromStop"},
        {"origin_name", "OriginName"},
        {"destination_name", "DestinationName"},
        {"next_stop_name", "NextStopPointName"},
        {"published_line_name", "PublishedLineName"},
        {"arrival_proximity_text", "ArrivalProximityText"},
        {"vehicle_ref", "VehicleRef"},
        {"direction_ref", "DirectionRef"},
    }};

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

// Reads one logical CSV record, joining physical lines while a quoted field
// is open. Returns false at end of stream.
bool read_record(std::istream& in, char delim, std::vector<std::string>& out) {
  std::string line;
  if (!std::getline(in, line)) return false;
  out.clear();
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (quoted) {
        std::string next;
        if (!std::getline(in, next)) break;  // unterminated quote at EOF
        field += '\n';
        line = std::move(next);
        i = 0;
        continue;
      }
      break;
    }
    char c = line[i++];
    if (quoted) {
      if (c == '"') {
        if (i < line.size() && line[i] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r' || i != line.size()) {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return true;
}

double parse_double(std::string_view text, Field f) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(std::string(field_key(f)) + ": not a number: '" +
                     std::string(text) + "'");
  }
  return v;
}

GeoPoint parse_point(std::string_view lat_text, std::string_view lon_text,
                     Field lat_field, Field lon_field) {
  GeoPoint p{parse_double(lat_text, lat_field),
             parse_double(lon_text, lon_field)};
  if (!(p.lat >= -90.0 && p.lat <= 90.0)) {
    throw ParseError(std::string(field_key(lat_field)) + ": out of range");
  }
  if (!(p.lon >= -180.0 && p.lon <= 180.0)) {
    throw ParseError(std::string(field_key(lon_field)) + ": out of range");
  }
  return p;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_field(std::ostream& out, std::string_view value, char delim) {
  bool needs_quotes =
      value.find_first_of(std::string{delim, '"', '\n', '\r'}) !=
          std::string_view::npos ||
      (!value.empty() && (value.front() == ' ' || value.back() == ' '));
  if (!needs_quotes) {
    out << value;
    return;
  }
  out << '"';
  for (char c : value) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

std::string_view field_key(Field f) {
  return kFieldTable[static_cast<std::size_t>(f)].first;
}

std::optional<Field> field_from_key(std::string_view key) {
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    if (kFieldTable[i].first == key) return static_cast<Field>(i);
  }
  return std::nullopt;
}

ColumnMap ColumnMap::defaults() {
  ColumnMap m;
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    m.headers_[static_cast<Field>(i)] = std::string(kFieldTable[i].second);
  }
  return m;
}

ColumnMap ColumnMap::from_config(std::istream& in) {
  ColumnMap m = defaults();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("column map line " + std::to_string(line_no) +
                       ": expected key = value");
    }
    auto key = trim(text.substr(0, eq));
    auto value = trim(text.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    auto f = field_from_key(key);
    if (!f) {
      throw ParseError("column map line " + std::to_string(line_no) +
                       ": unknown field '" + std::string(key) + "'");
    }
    m.set(*f, std::string(value));
  }
  return m;
}

ColumnMap ColumnMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open column map: " + path);
  return from_config(in);
}

const std::string& ColumnMap::header(Field f) const {
  return headers_.at(f);
}

void ColumnMap::set(Field f, std::string header) {
  headers_[f] = std::move(header);
}

ParseResult parse_csv(std::istream& in, const ParseOptions& options) {
  ParseResult result;
  std::vector<std::string> cells;
  if (!read_record(in, options.delimiter, cells)) {
    throw SchemaError("empty input: no header row");
  }
  if (!cells.empty() && cells.front().starts_with("\xEF\xBB\xBF")) {
    cells.front().erase(0, 3);
  }

  std::array<std::size_t, kFieldCount> column{};
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    const auto& want = options.columns.header(static_cast<Field>(i));
    auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& c) {
      return trim(c) == want;
    });
    if (it == cells.end()) {
      missing.push_back(want);
    } else {
      column[i] = static_cast<std::size_t>(it - cells.begin());
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing required column(s):";
    for (const auto& m : missing) msg += " '" + m + "'";
    throw SchemaError(msg);
  }
  const std::size_t width = cells.size();

  std::size_t row = 0;
  while (read_record(in, options.delimiter, cells)) {
    ++row;
    if (cells.size() == 1 && trim(cells[0]).empty()) continue;
    try {
      if (cells.size() != width) {
        throw ParseError("expected " + std::to_string(width) +
                         " fields, found " + std::to_string(cells.size()));
      }
      auto cell = [&](Field f) -> std::string_view {
        return trim(cells[column[static_cast<std::size_t>(f)]]);
      };
      auto timestamp = [&](Field f) {
        try {
          return parse_timestamp(cell(f), options.timestamp_format);
        } catch (const ParseError& e) {
          throw ParseError(std::string(field_key(f)) + ": " + e.what());
        }
      };
      auto required_text = [&](Field f) {
        auto v = cell(f);
        if (v.empty()) {
          throw ParseError(std::string(field_key(f)) + ": empty");
        }
        return std::string(v);
      };

      RawRecord r;
      r.recorded_at = timestamp(Field::recorded_at);
      r.arrival_time = timestamp(Field::arrival_time);
      if (auto s = cell(Field::scheduled_arrival); !s.empty()) {
        try {
          r.scheduled_arrival = parse_time_of_day(s);
        } catch (const ParseError& e) {
          throw ParseError(std::string("scheduled_arrival: ") + e.what());
        }
      }
      r.distance_from_stop =
          parse_double(cell(Field::distance_from_stop), Field::distance_from_stop);
      if (!(r.distance_from_stop >= 0.0)) {
        throw ParseError("distance_from_stop: negative");
      }
      r.vehicle = parse_point(cell(Field::vehicle_lat), cell(Field::vehicle_lon),
                              Field::vehicle_lat, Field::vehicle_lon);
      r.origin = parse_point(cell(Field::origin_lat), cell(Field::origin_lon),
                             Field::origin_lat, Field::origin_lon);
      r.destination = parse_point(cell(Field::dest_lat), cell(Field::dest_lon),
                                  Field::dest_lat, Field::dest_lon);
      r.origin_name = std::string(cell(Field::origin_name));
      r.destination_name = std::string(cell(Field::destination_name));
      r.line_name = required_text(Field::published_line_name);
      r.next_stop_name = required_text(Field::next_stop_name);
      r.arrival_proximity_text = std::string(cell(Field::arrival_proximity_text));
      r.vehicle_ref = std::string(cell(Field::vehicle_ref));
      r.direction_ref = std::string(cell(Field::direction_ref));
      result.records.push_back(std::move(r));
    } catch (const ParseError& e) {
      result.errors.push_back({row, e.what()});
    }
  }
  return result;
}

void write_csv(std::ostream& out, std::span<const RawRecord> records,
               const ColumnMap& columns) {
  constexpr char delim = ',';
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    if (i) out << delim;
    write_field(out, columns.header(static_cast<Field>(i)), delim);
  }
  out << '\n';
  std::array<std::string, kFieldCount> v;
  for (const auto& r : records) {
    v[0] = format_double(r.vehicle.lon);
    v[1] = format_double(r.vehicle.lat);
    v[2] = format_double(r.destination.lon);
    v[3] = format_double(r.destination.lat);
    v[4] = format_double(r.origin.lon);
    v[5] = format_double(r.origin.lat);
    v[6] = format_timestamp(r.recorded_at);
    v[7] = format_timestamp(r.arrival_time);
    v[8] = r.scheduled_arrival ? format_time_of_day(*r.scheduled_arrival) : "";
    v[9] = format_double(r.distance_from_stop);
    v[10] = r.origin_name;
    v[11] = r.destination_name;
    v[12] = r.next_stop_name;
    v[13] = r.line_name;
    v[14] = r.arrival_proximity_text;
    v[15] = r.vehicle_ref;
    v[16] = r.direction_ref;
    for (std::size_t i = 0; i < kFieldCount; ++i) {
      if (i) out << delim;
      write_field(out, v[i], delim);
    }
    out << '\n';
  }
}

bool is_at_stop(const RawRecord& r, const CleanOptions& options) {
  return to_lower(trim(r.arrival_proximity_text)) ==
         to_lower(options.at_stop_token);
}

bool is_outbound(const RawRecord& r, const CleanOptions& options) {
  return trim(r.direction_ref) == options.outbound_token;
}

CleanRecord to_clean_record(const RawRecord& r) {
  CleanRecord c;
  c.recorded_at = r.recorded_at;
  c.arrival_time = r.arrival_time;
  c.scheduled_arrival = r.scheduled_arrival;
  c.distance_from_stop = r.distance_from_stop;
  c.vehicle = r.vehicle;
  c.origin = r.origin;
  c.destination = r.destination;
  c.origin_name = r.origin_name;
  c.destination_name = r.destination_name;
  c.line_name = r.line_name;
  c.next_stop_name = r.next_stop_name;
  c.vehicle_ref = r.vehicle_ref;
  return c;
}

CleanResult clean(std::span<const RawRecord> records,
                  const CleanOptions& options) {
  CleanResult result;
  result.stats.input = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    ++result.stats.direction_counts[std::string(trim(r.direction_ref))];
    if (is_at_stop(r, options)) {
      ++result.stats.at_stop;
    } else if (!is_outbound(r, options)) {
      ++result.stats.inbound;
    } else if (r.arrival_time < r.recorded_at) {
      ++result.stats.negative_trip_time;
    } else {
      result.records.push_back(to_clean_record(r));
      result.kept_indices.push_back(i);
    }
  }
  result.stats.kept = result.records.size();
  return result;
}

std::string cleaning_stats_json(const CleaningStats& stats) {
  nlohmann::json j{
      {"input", stats.input},
      {"dropped_at_stop", stats.at_stop},
      {"dropped_inbound", stats.inbound},
      {"dropped_negative_trip_time", stats.negative_trip_time},
      {"kept", stats.kept},
      {"direction_counts", stats.direction_counts},
  };
  return j.dump(2);
}

}  // namespace teta
