// transit-eta: command line front end for the bus trip-time pipeline.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <omp.h>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include "teta/error.hpp"
#include "teta/ingest.hpp"
#include "teta/metrics.hpp"
#include "teta/model_store.hpp"
#include "teta/pipeline.hpp"
#include "teta/scalability.hpp"
#include "teta/service.hpp"
#include "teta/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string columns_file;
  std::string timestamp_format{teta::kDefaultTimestampFormat};
  std::string outbound_token = "1";
  int threads = 0;
};

struct Inputs {
  std::string input = "-";
  std::string out_dir = ".";
};

std::string default_model_path() {
  const char* env = std::getenv("TRANSIT_ETA_MODEL");
  return env ? env : "";
}

teta::ParseOptions parse_options(const Common& c) {
  teta::ParseOptions opts;
  if (!c.columns_file.empty()) {
    opts.columns = teta::ColumnMap::from_file(c.columns_file);
  }
  opts.timestamp_format = c.timestamp_format;
  return opts;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw teta::Error("cannot write '" + path.string() + "'");
  return out;
}

// Parse, report malformed rows on stderr, and clean.
teta::CleanResult load_clean(const Common& c, const std::string& input,
                             teta::ParseResult* raw_out = nullptr) {
  auto parsed = teta::read_records(input, parse_options(c));
  for (const auto& e : parsed.errors) {
    std::cerr << "row " << e.row << ": " << e.reason << '\n';
  }
  if (!parsed.errors.empty()) {
    std::cerr << parsed.errors.size() << " malformed row(s) skipped\n";
  }
  teta::CleanOptions copts;
  copts.outbound_token = c.outbound_token;
  auto cleaned = teta::clean(parsed.records, copts);
  if (raw_out) *raw_out = std::move(parsed);
  return cleaned;
}

std::string require_model(const std::string& path) {
  if (path.empty()) {
    throw teta::Error("no model given: pass --model or set TRANSIT_ETA_MODEL");
  }
  return path;
}

// ---- synth

void add_synth(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("synth", "Generate synthetic records (CSV)");
  auto cfg = std::make_shared<teta::synth::SynthConfig>();
  auto output = std::make_shared<std::string>("-");
  cmd->add_option("--seed", cfg->seed, "Generator seed")->capture_default_str();
  cmd->add_option("--lines", cfg->num_lines, "Number of lines")->capture_default_str();
  cmd->add_option("--stops", cfg->stops_per_line, "Stops per line")->capture_default_str();
  cmd->add_option("--records-per-line", cfg->records_per_line,
                  "Movement rows per line")->capture_default_str();
  cmd->add_option("--base-speed", cfg->base_speed, "m/s")->capture_default_str();
  cmd->add_option("--rush-slowdown", cfg->rush_hour_slowdown)->capture_default_str();
  cmd->add_option("--weekend-speedup", cfg->weekend_speedup)->capture_default_str();
  cmd->add_option("--noise-sigma", cfg->noise_sigma, "Seconds")->capture_default_str();
  cmd->add_option("--delay-mean", cfg->schedule_delay_mean,
                  "Mean schedule delay, seconds")->capture_default_str();
  cmd->add_option("--at-stop-per-line", cfg->at_stop_per_line)->capture_default_str();
  cmd->add_option("--inbound-per-line", cfg->inbound_per_line)->capture_default_str();
  cmd->add_option("-o,--output", *output, "Output CSV ('-' for stdout)")
      ->capture_default_str();
  cmd->callback([&run, cfg, output] {
    run = [cfg, output] {
      const auto records = teta::synth::generate(*cfg);
      if (*output == "-") {
        teta::write_csv(std::cout, records);
      } else {
        auto out = open_out(*output);
        teta::write_csv(out, records);
      }
      std::cerr << records.size() << " records\n";
    };
  });
}

// ---- ingest

void add_ingest(CLI::App& app, const Common& common, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("ingest", "Parse and clean a CSV; report statistics");
  auto in = std::make_shared<Inputs>();
  auto cleaned_out = std::make_shared<std::string>();
  cmd->add_option("input", in->input, "CSV file ('-' for stdin)")->capture_default_str();
  cmd->add_option("--out-dir", in->out_dir, "Report directory")->capture_default_str();
  cmd->add_option("--cleaned", *cleaned_out, "Also write the kept rows to this CSV");
  cmd->callback([&run, &common, in, cleaned_out] {
    run = [&common, in, cleaned_out] {
      teta::ParseResult raw;
      auto cleaned = load_clean(common, in->input, &raw);
      const auto stats = teta::cleaning_stats_json(cleaned.stats);
      open_out(fs::path(in->out_dir) / "cleaning_stats.json") << stats << '\n';
      if (!raw.errors.empty()) {
        auto out = open_out(fs::path(in->out_dir) / "row_errors.csv");
        out << "row,reason\n";
        for (const auto& e : raw.errors) out << e.row << ",\"" << e.reason << "\"\n";
      }
      if (!cleaned_out->empty()) {
        std::vector<teta::RawRecord> kept;
        kept.reserve(cleaned.kept_indices.size());
        for (auto i : cleaned.kept_indices) kept.push_back(raw.records[i]);
        auto out = open_out(*cleaned_out);
        teta::write_csv(out, kept);
      }
      std::cout << stats << '\n';
    };
  });
}

// ---- analyze

void add_analyze(CLI::App& app, const Common& common, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("analyze", "Schedule delay statistics");
  auto in = std::make_shared<Inputs>();
  cmd->add_option("input", in->input, "CSV file ('-' for stdin)")->capture_default_str();
  cmd->add_option("--out-dir", in->out_dir, "Report directory")->capture_default_str();
  cmd->callback([&run, &common, in] {
    run = [&common, in] {
      auto cleaned = load_clean(common, in->input);
      const auto stats = teta::delay_stats(cleaned.records);
      const auto json = teta::delay_stats_json(stats);
      open_out(fs::path(in->out_dir) / "delay_stats.json") << json << '\n';
      std::cout << json << '\n';
    };
  });
}

// ---- train

struct TrainArgs {
  Inputs in;
  std::string model_out = "model.teta";
  std::string optimizer = "adam";
  std::optional<int> patience;
  teta::PipelineConfig pipeline;
};

void add_train_options(CLI::App* cmd, TrainArgs& a) {
  auto& t = a.pipeline.train;
  cmd->add_option("--epochs", t.epochs)->capture_default_str();
  cmd->add_option("--lr", t.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--batch-size", t.batch_size)->capture_default_str();
  cmd->add_option("--optimizer", a.optimizer)
      ->check(CLI::IsMember({"sgd", "sgd_momentum", "adam"}))
      ->capture_default_str();
  cmd->add_option("--momentum", t.momentum)->capture_default_str();
  cmd->add_option("--shuffle-seed", t.shuffle_seed)->capture_default_str();
  cmd->add_option("--patience", a.patience, "Early-stop patience in epochs");
  cmd->add_option("--seed", a.pipeline.network_seed, "Weight init seed")
      ->capture_default_str();
  cmd->add_option("--split-ratio", a.pipeline.split_ratio)->capture_default_str();
  cmd->add_option("--split-seed", a.pipeline.split_seed)->capture_default_str();
  cmd->add_option("--far-threshold", a.pipeline.features.far_threshold_m, "Meters")
      ->capture_default_str();
  cmd->add_option("--line-slots", a.pipeline.features.line_slots)->capture_default_str();
}

void finish_train_args(TrainArgs& a) {
  a.pipeline.train.optimizer = teta::nn::optimizer_from_string(a.optimizer);
  a.pipeline.train.early_stop_patience = a.patience;
}

void add_train(CLI::App& app, const Common& common, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("train", "Train the network and write a .teta bundle");
  auto a = std::make_shared<TrainArgs>();
  cmd->add_option("input", a->in.input, "CSV file ('-' for stdin)")->capture_default_str();
  cmd->add_option("--out-dir", a->in.out_dir, "Report directory")->capture_default_str();
  cmd->add_option("-m,--model-out", a->model_out)->capture_default_str();
  cmd->add_option("--model-version", a->pipeline.model_version);
  add_train_options(cmd, *a);
  cmd->callback([&run, &common, a] {
    run = [&common, a] {
      finish_train_args(*a);
      auto cleaned = load_clean(common, a->in.input);
      std::cerr << cleaned.records.size() << " records after cleaning\n";
      auto outcome = teta::run_training(cleaned.records, a->pipeline);
      {
        auto log = open_out(fs::path(a->in.out_dir) / "training_log.jsonl");
        outcome.log.write_jsonl(log);
      }
      teta::save_bundle(outcome.bundle, a->model_out);
      const auto& md = outcome.bundle.metadata;
      std::cout << nlohmann::json{{"model", a->model_out},
                                  {"model_version", md.model_version},
                                  {"train_rmse", md.train_rmse},
                                  {"val_rmse", md.val_rmse},
                                  {"best_epoch", md.best_epoch},
                                  {"train_samples", md.train_samples},
                                  {"validation_samples", md.validation_samples}}
                       .dump(2)
                << '\n';
    };
  });
}

// ---- evaluate

void add_evaluate(CLI::App& app, const Common& common, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("evaluate", "Per-line RMSE report for a bundle");
  auto in = std::make_shared<Inputs>();
  auto model = std::make_shared<std::string>(default_model_path());
  auto plot = std::make_shared<std::string>();
  cmd->add_option("input", in->input, "CSV file ('-' for stdin)")->capture_default_str();
  cmd->add_option("--out-dir", in->out_dir, "Report directory")->capture_default_str();
  cmd->add_option("--model", *model, "Bundle path [env TRANSIT_ETA_MODEL]");
  cmd->add_option("--plot-data", *plot, "Write gnuplot-ready per-line columns here");
  cmd->callback([&run, &common, in, model, plot] {
    run = [&common, in, model, plot] {
      const auto bundle = teta::load_bundle(require_model(*model));
      auto cleaned = load_clean(common, in->input);
      const auto report = teta::evaluate_bundle(bundle, cleaned.records);
      const auto json = teta::eval_report_json(report);
      open_out(fs::path(in->out_dir) / "eval_report.json") << json << '\n';
      {
        auto csv = open_out(fs::path(in->out_dir) / "per_line_rmse.csv");
        teta::write_per_line_csv(csv, report);
      }
      if (!plot->empty()) {
        auto out = open_out(*plot);
        teta::write_plot_data(out, report);
      }
      std::cout << json << '\n';
    };
  });
}

// ---- compare-svr

void add_compare(CLI::App& app, const Common& common, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("compare-svr",
                                 "FCNN vs RBF-SVR over growing line subsets");
  auto a = std::make_shared<TrainArgs>();
  auto cfg = std::make_shared<teta::ScalabilityConfig>();
  auto budget = std::make_shared<double>(*cfg->svr.time_budget_seconds);
  cmd->add_option("input", a->in.input, "CSV file ('-' for stdin)")->capture_default_str();
  cmd->add_option("--out-dir", a->in.out_dir, "Report directory")->capture_default_str();
  cmd->add_option("--line-counts", cfg->line_counts)->delimiter(',')->capture_default_str();
  cmd->add_option("--svr-c", cfg->svr.C)->capture_default_str();
  cmd->add_option("--svr-epsilon", cfg->svr.epsilon)->capture_default_str();
  cmd->add_option("--svr-gamma", cfg->svr.gamma)->capture_default_str();
  cmd->add_option("--svr-tol", cfg->svr.tol)->capture_default_str();
  cmd->add_option("--svr-max-iter", cfg->svr.max_iterations)->capture_default_str();
  cmd->add_option("--svr-budget", *budget, "SVR time budget per fit, seconds")
      ->capture_default_str();
  add_train_options(cmd, *a);
  cmd->callback([&run, &common, a, cfg, budget] {
    run = [&common, a, cfg, budget] {
      finish_train_args(*a);
      cfg->fcnn = a->pipeline.train;
      cfg->network_seed = a->pipeline.network_seed;
      cfg->features = a->pipeline.features;
      cfg->split_ratio = a->pipeline.split_ratio;
      cfg->split_seed = a->pipeline.split_seed;
      cfg->svr.time_budget_seconds = *budget;
      auto cleaned = load_clean(common, a->in.input);
      const auto rows = teta::scalability_experiment(cleaned.records, *cfg);
      {
        auto csv = open_out(fs::path(a->in.out_dir) / "comparison.csv");
        teta::write_comparison_csv(csv, rows);
      }
      const auto json = teta::comparison_json(rows);
      open_out(fs::path(a->in.out_dir) / "comparison.json") << json << '\n';
      teta::write_comparison_csv(std::cout, rows);
    };
  });
}

// ---- predict

void add_predict(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("predict", "Predict one trip time");
  auto model = std::make_shared<std::string>(default_model_path());
  auto req = std::make_shared<teta::PredictRequest>();
  auto ts = std::make_shared<std::string>();
  cmd->add_option("--model", *model, "Bundle path [env TRANSIT_ETA_MODEL]");
  cmd->add_option("--line", req->line_name)->required();
  cmd->add_option("--stop", req->next_stop_name)->required();
  cmd->add_option("--distance", req->distance_from_stop, "Meters to the stop")->required();
  cmd->add_option("--timestamp", *ts, "Observation time, YYYY-MM-DDTHH:MM:SS")
      ->required();
  cmd->callback([&run, model, req, ts] {
    run = [model, req, ts] {
      if (req->distance_from_stop < 0) {
        throw teta::DomainError("--distance must be >= 0");
      }
      req->timestamp = teta::parse_timestamp(*ts);
      auto bundle = std::make_shared<const teta::ModelBundle>(
          teta::load_bundle(require_model(*model)));
      teta::PredictionService service(bundle);
      std::cout << teta::response_json(service.predict(*req)) << '\n';
    };
  });
}

// ---- serve

std::atomic<bool> g_reload{false};
httplib::Server* g_server = nullptr;

void add_serve(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("serve", "HTTP prediction service");
  auto model = std::make_shared<std::string>(default_model_path());
  auto host = std::make_shared<std::string>("127.0.0.1");
  auto port = std::make_shared<int>(8080);
  cmd->add_option("--model", *model, "Bundle path [env TRANSIT_ETA_MODEL]");
  cmd->add_option("--host", *host)->capture_default_str();
  cmd->add_option("--port", *port)->capture_default_str();
  cmd->callback([&run, model, host, port] {
    run = [model, host, port] {
      const auto path = require_model(*model);
      teta::PredictionService service(
          std::make_shared<const teta::ModelBundle>(teta::load_bundle(path)));
      httplib::Server server;
      teta::register_routes(server, service);
      g_server = &server;
      std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
      std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
      // SIGHUP reloads the bundle from the same path without dropping
      // requests; a bad file leaves the current model in place.
      std::signal(SIGHUP, [](int) { g_reload = true; });
      std::atomic<bool> done{false};
      std::thread reloader([&] {
        while (!done) {
          std::this_thread::sleep_for(std::chrono::milliseconds(200));
          if (!g_reload.exchange(false)) continue;
          try {
            service.swap(std::make_shared<const teta::ModelBundle>(teta::load_bundle(path)));
            std::cerr << "reloaded " << path << '\n';
          } catch (const std::exception& e) {
            std::cerr << "reload failed, keeping current model: " << e.what() << '\n';
          }
        }
      });
      std::cerr << "serving " << service.bundle()->metadata.model_version << " on "
                << *host << ':' << *port << '\n';
      const bool ok = server.listen(*host, *port);
      done = true;
      reloader.join();
      g_server = nullptr;
      if (!ok) throw teta::Error("cannot listen on " + *host + ":" + std::to_string(*port));
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bus trip-time prediction: data preparation, training, evaluation and serving"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML-style key = value file; flags override it");
  Common common;
  app.add_option("--columns", common.columns_file, "Column map (key = header lines)");
  app.add_option("--timestamp-format", common.timestamp_format, "strftime-style")
      ->capture_default_str();
  app.add_option("--outbound-token", common.outbound_token,
                 "DirectionRef value kept by cleaning")->capture_default_str();
  app.add_option("--threads", common.threads, "OpenMP threads (0: runtime default)");

  std::function<void()> run;
  add_synth(app, run);
  add_ingest(app, common, run);
  add_analyze(app, common, run);
  add_train(app, common, run);
  add_evaluate(app, common, run);
  add_compare(app, common, run);
  add_predict(app, run);
  add_serve(app, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (common.threads > 0) omp_set_num_threads(common.threads);
  try {
    run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
