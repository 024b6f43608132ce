#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "teta/ingest.hpp"
#include "teta/matrix.hpp"
#include "teta/pipeline.hpp"
#include "teta/svr.hpp"
#include "teta/synth.hpp"

namespace teta::testing {

inline const char* kHeader =
    "VehicleLocation.Longitude,VehicleLocation.Latitude,DestinationLong,"
    "DestinationLat,OriginLong,OriginLat,RecordedAtTime,ArrivalTime,"
    "ScheduledArrivalTime,DistanceFromStop,OriginName,DestinationName,"
    "NextStopPointName,PublishedLineName,ArrivalProximityText,VehicleRef,"
    "DirectionRef";

struct RowSpec {
  std::string recorded = "2017-06-05 08:00:00";
  std::string arrival = "2017-06-05 08:05:00";
  std::string scheduled = "08:04:00";
  std::string distance = "1200";
  std::string line = "B1";
  std::string stop = "AV X/ST 1";
  std::string proximity = "1 stop away";
  std::string direction = "1";
  std::string vehicle = "NYCT_1";
  std::string lat = "40.7";
};

inline std::string csv_row(const RowSpec& r) {
  std::ostringstream s;
  s << "-73.9," << r.lat << ",-73.8,40.8,-74.0,40.6," << r.recorded << ','
    << r.arrival << ',' << r.scheduled << ',' << r.distance
    << ",ORIGIN TERMINAL,DEST TERMINAL," << r.stop << ',' << r.line << ','
    << r.proximity << ',' << r.vehicle << ',' << r.direction;
  return s.str();
}

inline std::string csv(const std::vector<RowSpec>& rows) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : rows) out += csv_row(r) + "\n";
  return out;
}

inline RawRecord raw_record(const RowSpec& spec = {}) {
  std::istringstream in(csv({spec}));
  auto parsed = parse_csv(in);
  return parsed.records.at(0);
}

// A small end-to-end trained bundle for service and persistence tests.
inline ModelBundle small_bundle(std::size_t lines = 3, int epochs = 3) {
  synth::SynthConfig sc;
  sc.num_lines = lines;
  sc.records_per_line = 400;
  sc.seed = 11;
  auto cleaned = clean(synth::generate(sc));
  PipelineConfig pc;
  pc.train.epochs = epochs;
  pc.model_version = "test-model";
  return run_training(cleaned.records, pc).bundle;
}

struct SvrFixture {
  Matrix x;
  std::vector<double> y;
  svr::SvrConfig cfg;
};

// Ten deterministic regression problems with N <= 50, of varied width,
// shape, box size and tube width.
inline SvrFixture svr_fixture(int k) {
  std::mt19937_64 rng(1000 + k);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  const std::size_t n = 5 + 5 * static_cast<std::size_t>(k);  // 5 .. 50
  const std::size_t d = 1 + static_cast<std::size_t>(k % 3);
  SvrFixture f;
  f.x = Matrix(n, d);
  f.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      f.x(i, c) = u(rng);
      s += std::sin(2.0 * f.x(i, c) * static_cast<double>(c + 1));
    }
    f.y[i] = s + noise(rng);
  }
  f.cfg.C = (k % 2 == 0) ? 1.0 : 10.0;
  f.cfg.epsilon = (k % 4 < 2) ? 0.05 : 0.2;
  f.cfg.gamma = 0.5 + 0.5 * (k % 3);
  f.cfg.tol = 1e-6;
  f.cfg.time_budget_seconds.reset();
  return f;
}

// Largest violation of the epsilon-SVR optimality conditions, measured on
// the residuals y - f(x) of the training points.
inline double kkt_violation(const svr::SvrModel& m, const Matrix& x,
                            const std::vector<double>& y, double C, double eps) {
  std::vector<double> beta(x.rows(), 0.0);
  for (std::size_t k = 0; k < m.support_indices.size(); ++k) {
    beta[m.support_indices[k]] = m.coefficients[k];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = y[i] - svr::predict_svr(m, x.row(i));
    const double b = beta[i];
    double v = 0.0;
    if (b == 0.0) {
      v = std::max(0.0, std::abs(r) - eps);
    } else if (b >= C) {
      v = std::max(0.0, eps - r);
    } else if (b <= -C) {
      v = std::max(0.0, r + eps);
    } else if (b > 0) {
      v = std::abs(r - eps);
    } else {
      v = std::abs(r + eps);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace teta::testing
