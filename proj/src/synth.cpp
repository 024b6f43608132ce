#include "teta/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "teta/error.hpp"
#include "teta/features.hpp"

namespace teta::synth {
namespace {

using namespace std::chrono;

// Observations fall uniformly in June 2017.
const Timestamp kStart = sys_days{year{2017} / June / 1};
constexpr std::int64_t kSpanSeconds = 30LL * 24 * 3600;

enum Stream : std::uint64_t { profile_stream = 0, record_stream = 1 };

std::mt19937_64 stream_rng(const SynthConfig& cfg, std::size_t line,
                           Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                    static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(line),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::string line_name(std::size_t i) {
  static const char* prefixes[] = {"B", "M", "Q", "Bx", "S"};
  return prefixes[i % 5] + std::to_string(i / 5 + 1);
}

std::string proximity_text(double d) {
  if (d < 800.0) return "< 1 stop away";
  if (d < 1600.0) return "1 stop away";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f miles away", d / 1609.344);
  return buf;
}

// Schedule time-of-day for the given arrival and delay. Early-morning times
// are written past 24:00, as service-day schedules do.
TimeOfDay schedule_for(Timestamp arrival, std::int64_t delay) {
  auto tod = seconds_of_day(arrival - seconds{delay});
  if (tod < 3 * 3600) tod += 24 * 3600;
  return TimeOfDay{seconds{tod}};
}

GeoPoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lat(40.55, 40.90);
  std::uniform_real_distribution<double> lon(-74.05, -73.75);
  GeoPoint p;
  p.lat = lat(rng);
  p.lon = lon(rng);
  return p;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_lines == 0 || stops_per_line == 0 || records_per_line == 0) {
    throw DomainError("synth: line, stop and record counts must be positive");
  }
  if (!(base_speed > 0) || !(rush_hour_slowdown > 0) || !(weekend_speedup > 0)) {
    throw DomainError("synth: speed and multipliers must be positive");
  }
  if (!(noise_sigma >= 0)) throw DomainError("synth: noise_sigma must be >= 0");
  if (!(min_distance_m >= 0) || !(max_distance_m > min_distance_m)) {
    throw DomainError("synth: distance range must satisfy 0 <= min < max");
  }
  if (schedule_jitter < 0) throw DomainError("synth: schedule_jitter must be >= 0");
}

std::vector<LineProfile> line_profiles(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<LineProfile> out;
  out.reserve(cfg.num_lines);
  const double n = static_cast<double>(cfg.num_lines);
  for (std::size_t i = 0; i < cfg.num_lines; ++i) {
    auto rng = stream_rng(cfg, i, profile_stream);
    LineProfile p;
    p.name = line_name(i);
    p.speed_factor = std::uniform_real_distribution<double>(0.7, 1.3)(rng);
    p.schedule_offset =
        cfg.num_lines == 1
            ? 0.0
            : cfg.schedule_line_spread * (2.0 * static_cast<double>(i) / (n - 1) - 1.0);
    for (std::size_t s = 0; s < cfg.stops_per_line; ++s) {
      p.stops.push_back(p.name + " STOP " + std::to_string(s + 1));
    }
    out.push_back(std::move(p));
  }
  return out;
}

double true_trip_time(const SynthConfig& cfg, const LineProfile& line,
                      double distance_m, Timestamp observed) {
  double speed = cfg.base_speed * line.speed_factor;
  if (derive_rush_hour(observed)) speed *= cfg.rush_hour_slowdown;
  if (derive_day_type(observed) == DayType::weekend) speed *= cfg.weekend_speedup;
  return distance_m / speed;
}

std::vector<RawRecord> generate(const SynthConfig& cfg) {
  const auto profiles = line_profiles(cfg);
  const std::size_t per_line =
      cfg.records_per_line + cfg.at_stop_per_line + cfg.inbound_per_line;
  std::vector<RawRecord> out;
  out.reserve(per_line * cfg.num_lines);

  for (std::size_t li = 0; li < profiles.size(); ++li) {
    const auto& line = profiles[li];
    auto rng = stream_rng(cfg, li, record_stream);
    std::uniform_int_distribution<std::int64_t> when(0, kSpanSeconds - 1);
    std::uniform_real_distribution<double> dist(cfg.min_distance_m,
                                                cfg.max_distance_m);
    std::uniform_int_distribution<std::size_t> stop(0, cfg.stops_per_line - 1);
    std::uniform_int_distribution<int> vehicle(0, 9);
    std::uniform_int_distribution<int> jitter(-cfg.schedule_jitter,
                                              cfg.schedule_jitter);
    std::normal_distribution<double> noise(0.0, 1.0);
    const GeoPoint origin = random_point(rng);
    const GeoPoint destination = random_point(rng);
    const auto delay_base =
        static_cast<std::int64_t>(std::llround(cfg.schedule_delay_mean + line.schedule_offset));

    for (std::size_t k = 0; k < per_line; ++k) {
      const bool at_stop = k >= cfg.records_per_line &&
                           k < cfg.records_per_line + cfg.at_stop_per_line;
      const bool inbound = k >= cfg.records_per_line + cfg.at_stop_per_line;

      RawRecord r;
      r.recorded_at = kStart + seconds{when(rng)};
      r.distance_from_stop =
          at_stop ? std::uniform_real_distribution<double>(0.0, 30.0)(rng)
                  : dist(rng);
      // Re-draw the noise in the rare case it would put the arrival before
      // the observation; such rows would be dropped by cleaning.
      const double mean =
          true_trip_time(cfg, line, r.distance_from_stop, r.recorded_at);
      double trip = mean + cfg.noise_sigma * noise(rng);
      for (int tries = 0; trip < 0.5 && cfg.noise_sigma > 0 && tries < 64; ++tries) {
        trip = mean + cfg.noise_sigma * noise(rng);
      }
      r.arrival_time = r.recorded_at + seconds{std::llround(std::max(trip, 0.0))};
      r.scheduled_arrival =
          schedule_for(r.arrival_time, delay_base + jitter(rng));

      const double frac = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      r.vehicle.lat = origin.lat + frac * (destination.lat - origin.lat);
      r.vehicle.lon = origin.lon + frac * (destination.lon - origin.lon);
      r.origin = inbound ? destination : origin;
      r.destination = inbound ? origin : destination;
      r.origin_name = line.name + (inbound ? " NORTH TERMINAL" : " SOUTH TERMINAL");
      r.destination_name = line.name + (inbound ? " SOUTH TERMINAL" : " NORTH TERMINAL");
      r.line_name = line.name;
      r.next_stop_name = line.stops[stop(rng)];
      r.arrival_proximity_text =
          at_stop ? "at stop" : proximity_text(r.distance_from_stop);
      r.vehicle_ref = "MTA NYCT_" + line.name + "_" + std::to_string(vehicle(rng));
      r.direction_ref = inbound ? "0" : "1";
      out.push_back(std::move(r));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.recorded_at < b.recorded_at;
  });
  return out;
}

}  // namespace teta::synth
