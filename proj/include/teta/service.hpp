#pragma once

#include <memory>
#include <string>

#include "teta/error.hpp"
#include "teta/model_store.hpp"
#include "teta/time.hpp"

namespace httplib {
class Server;
}

namespace teta {

struct PredictRequest {
  std::string line_name;
  std::string next_stop_name;
  double distance_from_stop = 0.0;
  Timestamp timestamp;
};

struct PredictResponse {
  double trip_time_seconds = 0.0;       // whole seconds, never negative
  double raw_prediction_seconds = 0.0;  // network output before rounding
  bool clamped = false;                 // raw output was negative
  Timestamp timestamp;
  Timestamp predicted_arrival;          // timestamp + trip_time_seconds
  std::string model_version;
};

// Malformed request body or field; maps to HTTP 400.
struct RequestError : Error {
  using Error::Error;
};

// Throws RequestError on bad JSON, missing or mistyped fields, a negative or
// non-finite distance, or an unparseable timestamp.
PredictRequest parse_predict_request(const std::string& body);

std::string response_json(const PredictResponse& r);

// Serves predictions from an immutable bundle. The bundle pointer can be
// replaced while requests are in flight; each request sees exactly one
// bundle.
class PredictionService {
 public:
  explicit PredictionService(std::shared_ptr<const ModelBundle> bundle);

  // Throws UnknownLine.
  PredictResponse predict(const PredictRequest& request) const;

  std::shared_ptr<const ModelBundle> bundle() const;
  void swap(std::shared_ptr<const ModelBundle> next);

 private:
  std::shared_ptr<const ModelBundle> bundle_;
};

// POST /v1/predict and GET /v1/health.
void register_routes(httplib::Server& server, PredictionService& service);

}  // namespace teta
