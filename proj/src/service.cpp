#include "teta/service.hpp"

#include <atomic>
#include <cmath>

#include "httplib.h"
#include "json.hpp"

#include "teta/error.hpp"
#include "teta/features.hpp"
#include "teta/neuralnet.hpp"

namespace teta {
namespace {

using nlohmann::json;

const json& require(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end()) {
    throw RequestError(std::string("missing field '") + key + "'");
  }
  return *it;
}

std::string require_string(const json& body, const char* key) {
  const auto& v = require(body, key);
  if (!v.is_string()) {
    throw RequestError(std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

PredictRequest parse_predict_request(const std::string& body) {
  json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw RequestError("request body is not valid JSON");
  if (!j.is_object()) throw RequestError("request body must be a JSON object");

  PredictRequest r;
  r.line_name = require_string(j, "line_name");
  if (r.line_name.empty()) throw RequestError("line_name must not be empty");
  r.next_stop_name = require_string(j, "next_stop_name");

  const auto& d = require(j, "distance_from_stop");
  if (!d.is_number()) {
    throw RequestError("field 'distance_from_stop' must be a number");
  }
  r.distance_from_stop = d.get<double>();
  if (!std::isfinite(r.distance_from_stop) || r.distance_from_stop < 0) {
    throw RequestError("distance_from_stop must be a finite number >= 0");
  }

  auto ts = require_string(j, "timestamp");
  // Times are naive local; a UTC designator is tolerated and ignored.
  if (!ts.empty() && ts.back() == 'Z') ts.pop_back();
  try {
    r.timestamp = parse_timestamp(ts);
  } catch (const ParseError& e) {
    throw RequestError(e.what());
  }
  return r;
}

std::string response_json(const PredictResponse& r) {
  return json{{"trip_time_seconds", r.trip_time_seconds},
              {"raw_prediction_seconds", r.raw_prediction_seconds},
              {"clamped", r.clamped},
              {"timestamp", format_timestamp(r.timestamp, 'T')},
              {"predicted_arrival", format_timestamp(r.predicted_arrival, 'T')},
              {"model_version", r.model_version}}
      .dump();
}

PredictionService::PredictionService(std::shared_ptr<const ModelBundle> bundle)
    : bundle_(std::move(bundle)) {
  if (!bundle_) throw Error("prediction service needs a model");
}

std::shared_ptr<const ModelBundle> PredictionService::bundle() const {
  return std::atomic_load(&bundle_);
}

void PredictionService::swap(std::shared_ptr<const ModelBundle> next) {
  if (!next) throw Error("cannot swap in an empty model");
  std::atomic_store(&bundle_, std::move(next));
}

PredictResponse PredictionService::predict(const PredictRequest& request) const {
  const auto model = bundle();
  const auto& prep = model->preprocessor;
  auto x = raw_features(request.line_name, request.next_stop_name,
                        request.distance_from_stop, request.timestamp,
                        prep.vocab, prep.config);
  scale_features(x, prep.scaler, prep.config);

  PredictResponse out;
  out.raw_prediction_seconds = nn::predict_one(model->network, x);
  out.clamped = out.raw_prediction_seconds < 0;
  const auto whole = out.clamped ? 0LL : std::llround(out.raw_prediction_seconds);
  out.trip_time_seconds = static_cast<double>(whole);
  out.timestamp = request.timestamp;
  out.predicted_arrival = request.timestamp + std::chrono::seconds{whole};
  out.model_version = model->metadata.model_version;
  return out;
}

void register_routes(httplib::Server& server, PredictionService& service) {
  // Small request/response pairs: Nagle plus delayed ACK costs ~40 ms each.
  server.set_tcp_nodelay(true);
  server.Post("/v1/predict", [&service](const httplib::Request& req,
                                        httplib::Response& res) {
    try {
      const auto response = service.predict(parse_predict_request(req.body));
      res.status = 200;
      res.set_content(response_json(response), "application/json");
    } catch (const RequestError& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const UnknownLine& e) {
      send_json(res, 422, {{"error", e.what()}, {"line_name", e.name}});
    } catch (const Error& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  });
  server.Get("/v1/health", [&service](const httplib::Request&,
                                      httplib::Response& res) {
    const auto model = service.bundle();
    send_json(res, 200,
              {{"status", "ok"},
               {"model_version", model->metadata.model_version},
               {"lines", model->preprocessor.vocab.lines.size()}});
  });
}

}  // namespace teta
