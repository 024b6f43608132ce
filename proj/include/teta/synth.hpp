#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "teta/ingest.hpp"
#include "teta/time.hpp"

namespace teta::synth {

struct SynthConfig {
  std::size_t num_lines = 10;
  std::size_t stops_per_line = 20;
  std::size_t records_per_line = 1000;  // movement rows that survive cleaning
  double base_speed = 6.0;              // m/s
  double rush_hour_slowdown = 0.7;      // speed multiplier inside rush hour
  double weekend_speedup = 1.25;        // speed multiplier on weekends
  double noise_sigma = 20.0;            // seconds
  std::uint64_t seed = 1;

  double min_distance_m = 500.0;
  double max_distance_m = 3000.0;

  // Rows that cleaning is expected to remove.
  std::size_t at_stop_per_line = 50;
  std::size_t inbound_per_line = 50;

  // arrival - scheduled = mean + per-line offset + integer jitter. Per-line
  // offsets are symmetric around zero so the overall mean stays `mean`.
  double schedule_delay_mean = 120.0;
  double schedule_line_spread = 60.0;
  int schedule_jitter = 30;

  // Throws DomainError on non-positive counts, speeds or multipliers, a
  // negative sigma, or an empty distance range.
  void validate() const;
};

struct LineProfile {
  std::string name;
  double speed_factor = 1.0;     // in [0.7, 1.3]
  double schedule_offset = 0.0;  // seconds, added to the delay mean
  std::vector<std::string> stops;
};

// Deterministic per-line parameters for `cfg`.
std::vector<LineProfile> line_profiles(const SynthConfig& cfg);

// Noise-free trip time the generator draws around. Depends only on what the
// feature extractor sees: distance, rush hour, day type and line.
double true_trip_time(const SynthConfig& cfg, const LineProfile& line,
                      double distance_m, Timestamp observed);

// Movement rows plus the injected at-stop and inbound rows, ordered by
// observation time. Same config, same output.
std::vector<RawRecord> generate(const SynthConfig& cfg);

}  // namespace teta::synth
