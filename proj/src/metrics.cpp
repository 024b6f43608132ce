#include "teta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"

#include "teta/error.hpp"

namespace teta {

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.empty()) throw DomainError("rmse of an empty sample");
  if (predicted.size() != actual.size()) {
    throw DimensionError("rmse: " + std::to_string(predicted.size()) +
                         " predictions vs " + std::to_string(actual.size()) +
                         " actuals");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    double d = actual[i] - predicted[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

FiveNumberSummary five_number_summary(std::vector<double> values) {
  if (values.empty()) throw DomainError("summary of an empty sample");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75),
          values.back()};
}

Timestamp resolve_schedule(TimeOfDay scheduled, Timestamp arrival) {
  const auto base = anchor_time_of_day(scheduled, arrival);
  Timestamp best = base;
  auto distance = [&](Timestamp t) {
    return std::chrono::abs(arrival - t);
  };
  for (int k : {-1, 1}) {
    Timestamp candidate = base + std::chrono::days{k};
    if (distance(candidate) < distance(best)) best = candidate;
  }
  return best;
}

double schedule_delay(Timestamp arrival, TimeOfDay scheduled) {
  return static_cast<double>((arrival - resolve_schedule(scheduled, arrival)).count());
}

DelayStats delay_stats(std::span<const CleanRecord> records) {
  DelayStats s;
  double sum = 0.0, abs_sum = 0.0;
  std::map<std::string, std::pair<double, std::size_t>> per_line;
  for (const auto& r : records) {
    if (!r.scheduled_arrival) {
      ++s.unresolved;
      continue;
    }
    const double d = schedule_delay(r.arrival_time, *r.scheduled_arrival);
    sum += d;
    abs_sum += std::abs(d);
    auto& acc = per_line[r.line_name];
    acc.first += d;
    ++acc.second;
    ++s.used;
  }
  if (s.used > 0) {
    s.mean_delay_s = sum / static_cast<double>(s.used);
    s.mean_mismatch_s = abs_sum / static_cast<double>(s.used);
  }
  for (const auto& [line, acc] : per_line) {
    s.per_line_mean_delay[line] = acc.first / static_cast<double>(acc.second);
  }
  return s;
}

EvalReport per_line_report(std::span<const double> predicted,
                           std::span<const FeatureVector> samples,
                           const LineVocabulary& lines) {
  if (samples.empty()) throw DomainError("cannot evaluate an empty set");
  if (predicted.size() != samples.size()) {
    throw DimensionError("per_line_report: predictions and samples differ");
  }
  std::vector<double> sse(lines.size(), 0.0);
  std::vector<std::size_t> count(lines.size(), 0);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto line = samples[i].line_index;
    if (line >= lines.size()) {
      throw DomainError("sample line index outside the vocabulary");
    }
    const double d = samples[i].target_trip_time - predicted[i];
    sse[line] += d * d;
    total += d * d;
    ++count[line];
  }
  EvalReport report;
  report.samples = samples.size();
  report.overall_rmse = std::sqrt(total / static_cast<double>(samples.size()));
  std::vector<double> line_rmse;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (count[l] == 0) {
      report.lines_without_samples.push_back(lines.name(l));
      continue;
    }
    const double r = std::sqrt(sse[l] / static_cast<double>(count[l]));
    report.per_line[lines.name(l)] = {r, count[l]};
    line_rmse.push_back(r);
  }
  report.rmse_distribution = five_number_summary(std::move(line_rmse));
  return report;
}

namespace {

nlohmann::json to_json(const DelayStats& s) {
  return {{"mean_delay_s", s.mean_delay_s},
          {"mean_mismatch_s", s.mean_mismatch_s},
          {"records_used", s.used},
          {"records_unresolved", s.unresolved},
          {"per_line_mean_delay", s.per_line_mean_delay}};
}

}  // namespace

std::string delay_stats_json(const DelayStats& stats) {
  return to_json(stats).dump(2);
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::json per_line = nlohmann::json::object();
  for (const auto& [name, v] : report.per_line) {
    per_line[name] = {{"rmse", v.rmse}, {"sample_count", v.samples}};
  }
  const auto& d = report.rmse_distribution;
  nlohmann::json j{
      {"overall_rmse", report.overall_rmse},
      {"sample_count", report.samples},
      {"per_line", per_line},
      {"lines_without_samples", report.lines_without_samples},
      {"rmse_distribution",
       {{"min", d.min}, {"q1", d.q1}, {"median", d.median}, {"q3", d.q3}, {"max", d.max}}},
      {"delay_stats", report.delay ? to_json(*report.delay) : nlohmann::json(nullptr)},
  };
  return j.dump(2);
}

void write_per_line_csv(std::ostream& out, const EvalReport& report) {
  out << "line,rmse,n\n";
  for (const auto& [name, v] : report.per_line) {
    out << name << ',' << v.rmse << ',' << v.samples << '\n';
  }
}

void write_plot_data(std::ostream& out, const EvalReport& report) {
  std::vector<std::pair<std::string, LineRmse>> rows(report.per_line.begin(),
                                                     report.per_line.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.second.rmse > b.second.rmse;
  });
  out << "# rank line rmse_s n mean_delay_s\n";
  std::size_t rank = 1;
  for (const auto& [name, v] : rows) {
    std::string label = name;
    std::replace(label.begin(), label.end(), ' ', '_');
    out << rank++ << ' ' << label << ' ' << v.rmse << ' ' << v.samples << ' ';
    if (report.delay) {
      auto it = report.delay->per_line_mean_delay.find(name);
      if (it != report.delay->per_line_mean_delay.end()) {
        out << it->second;
      } else {
        out << "NaN";
      }
    } else {
      out << "NaN";
    }
    out << '\n';
  }
}

}  // namespace teta
