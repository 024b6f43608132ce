#include "teta/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "teta/error.hpp"

namespace teta {

ParseResult read_records(const std::string& path, const ParseOptions& options) {
  if (path == "-") return parse_csv(std::cin, options);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_csv(in, options);
}

TrainOutcome run_training(std::span<const CleanRecord> records,
                          const PipelineConfig& cfg) {
  cfg.train.validate();
  auto [train_recs, val_recs] =
      split<CleanRecord>(records, cfg.split_ratio, cfg.split_seed);

  TrainOutcome out;
  auto& prep = out.bundle.preprocessor;
  prep = fit_preprocessor(train_recs, cfg.features);
  auto [x, y] = to_design(build_features(train_recs, prep));
  nn::Dataset train_set{std::move(x), std::move(y)};

  out.validation = build_features_lenient(val_recs, prep, &out.skipped_unknown_line);
  nn::Dataset val_set;
  if (!out.validation.empty()) {
    auto [vx, vy] = to_design(out.validation);
    val_set = nn::Dataset{std::move(vx), std::move(vy)};
  }

  auto spec = nn::NetworkSpec::bus_default(cfg.network_seed);
  spec.layer_sizes.front() = cfg.features.width();
  auto result = nn::train(nn::init_network(spec), train_set, cfg.train, val_set);

  auto& md = out.bundle.metadata;
  md.data_fingerprint = data_fingerprint(train_set.x, train_set.y);
  md.model_version = cfg.model_version.empty()
                         ? "fcnn-" + md.data_fingerprint.substr(0, 8)
                         : cfg.model_version;
  md.train_rmse = rmse(nn::predict(result.network, train_set.x), train_set.y);
  md.val_rmse = val_set.size() > 0
                    ? rmse(nn::predict(result.network, val_set.x), val_set.y)
                    : std::nan("");
  md.epochs = static_cast<int>(result.log.epochs.size());
  md.best_epoch = result.log.best_epoch;
  md.optimizer = nn::to_string(cfg.train.optimizer);
  md.learning_rate = cfg.train.learning_rate;
  md.batch_size = cfg.train.batch_size;
  md.shuffle_seed = cfg.train.shuffle_seed;
  md.train_samples = train_set.size();
  md.validation_samples = val_set.size();

  out.bundle.network = std::move(result.network);
  out.log = std::move(result.log);
  out.validation_records = std::move(val_recs);
  return out;
}

EvalReport evaluate_bundle(const ModelBundle& bundle,
                           std::span<const CleanRecord> records, bool with_delay) {
  const auto samples =
      build_features_lenient(records, bundle.preprocessor, nullptr);
  if (samples.empty()) {
    throw DomainError("no records on lines known to the model");
  }
  auto [x, y] = to_design(samples);
  const auto predicted = nn::predict(bundle.network, x);
  auto report = per_line_report(predicted, samples, bundle.preprocessor.vocab.lines);
  if (with_delay) report.delay = delay_stats(records);
  return report;
}

}  // namespace teta
