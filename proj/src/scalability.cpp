#include "teta/scalability.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "json.hpp"

#include "teta/error.hpp"
#include "teta/metrics.hpp"

namespace teta {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

nn::Dataset as_dataset(std::span<const FeatureVector> v) {
  auto [x, y] = to_design(v);
  return nn::Dataset{std::move(x), std::move(y)};
}

}  // namespace

std::vector<ComparisonRow> scalability_experiment(
    std::span<const CleanRecord> records, const ScalabilityConfig& cfg) {
  if (cfg.line_counts.empty()) return {};
  const auto all_lines = fit_vocabularies(records).lines;
  const auto largest =
      *std::max_element(cfg.line_counts.begin(), cfg.line_counts.end());
  if (all_lines.size() < largest) {
    throw DomainError("experiment needs " + std::to_string(largest) +
                      " lines, data has " + std::to_string(all_lines.size()));
  }

  std::vector<ComparisonRow> rows;
  for (auto k : cfg.line_counts) {
    std::unordered_set<std::string> keep(all_lines.names().begin(),
                                         all_lines.names().begin() +
                                             static_cast<std::ptrdiff_t>(k));
    std::vector<CleanRecord> subset;
    for (const auto& r : records) {
      if (keep.count(r.line_name)) subset.push_back(r);
    }
    auto [train_recs, val_recs] =
        split<CleanRecord>(subset, cfg.split_ratio, cfg.split_seed);
    auto prep = fit_preprocessor(train_recs, cfg.features);
    auto train_set = as_dataset(build_features(train_recs, prep));
    auto val_set = as_dataset(build_features_lenient(val_recs, prep, nullptr));

    {
      auto spec = nn::NetworkSpec::bus_default(cfg.network_seed);
      spec.layer_sizes.front() = cfg.features.width();
      const auto t0 = std::chrono::steady_clock::now();
      auto trained = nn::train(nn::init_network(spec), train_set, cfg.fcnn, val_set);
      ComparisonRow row{k, "fcnn", 0.0, seconds_since(t0), "ok", train_set.size()};
      row.rmse_seconds = rmse(nn::predict(trained.network, val_set.x), val_set.y);
      rows.push_back(row);
    }
    {
      const auto t0 = std::chrono::steady_clock::now();
      auto model = svr::fit_svr(train_set.x, train_set.y, cfg.svr);
      ComparisonRow row{k, "svr", std::numeric_limits<double>::quiet_NaN(),
                        seconds_since(t0), svr::to_string(model.status),
                        train_set.size()};
      if (model.status != svr::FitStatus::timeout) {
        row.rmse_seconds = rmse(svr::predict_svr(model, val_set.x), val_set.y);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_comparison_csv(std::ostream& out,
                          std::span<const ComparisonRow> rows) {
  out << "line_count,model,rmse_seconds,wall_seconds,status\n";
  for (const auto& r : rows) {
    out << r.line_count << ',' << r.model << ',';
    if (std::isnan(r.rmse_seconds)) {
      out << "";
    } else {
      out << r.rmse_seconds;
    }
    out << ',' << r.wall_seconds << ',' << r.status << '\n';
  }
}

std::string comparison_json(std::span<const ComparisonRow> rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"line_count", r.line_count},
                   {"model", r.model},
                   {"rmse_seconds", std::isnan(r.rmse_seconds)
                                        ? nlohmann::json(nullptr)
                                        : nlohmann::json(r.rmse_seconds)},
                   {"wall_seconds", r.wall_seconds},
                   {"status", r.status},
                   {"train_samples", r.train_samples}});
  }
  return arr.dump(2);
}

}  // namespace teta
