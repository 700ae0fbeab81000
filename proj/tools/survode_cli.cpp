// Command-line front end: simulate / train / predict / evaluate / cluster.
// Exit codes: 0 success, 2 validation or parse failure, 3 numerical failure,
// 1 anything unexpected.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "survode/analysis.hpp"
#include "survode/io.hpp"
#include "survode/metrics.hpp"
#include "survode/training.hpp"

namespace fs = std::filesystem;
using namespace survode;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// Dataset directory convention: features.csv + outcomes.csv + meta.json
// ({"n_event_types": b, "bin_width": w}).
Dataset load_data_dir(const std::string& dir, int events_override) {
  int b = events_override;
  double bin_width = 1.0;
  const fs::path meta = fs::path(dir) / "meta.json";
  if (fs::exists(meta)) {
    json j = io::read_json_file(meta.string());
    if (b <= 0) b = j.value("n_event_types", 1);
    bin_width = j.value("bin_width", 1.0);
  }
  if (b <= 0)
    throw ValidationError(dir +
                          ": no meta.json found; pass --events to declare the "
                          "event count");
  Dataset ds = ingest_csv((fs::path(dir) / "features.csv").string(),
                          (fs::path(dir) / "outcomes.csv").string(), b);
  ds.bin_width = bin_width;
  return ds;
}

void write_data_dir(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  io::write_features_csv(ds, (fs::path(dir) / "features.csv").string());
  io::write_outcomes_csv(ds, (fs::path(dir) / "outcomes.csv").string());
  json meta{{"n_event_types", ds.n_event_types}, {"bin_width", ds.bin_width}};
  io::write_file_atomic((fs::path(dir) / "meta.json").string(),
                        meta.dump(2) + "\n");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  json j = io::read_json_file(config_path);
  SimConfig cfg = io::sim_config_from_json(j);
  SimResult sim = simulate(cfg);
  if (!sim.warning.empty()) std::cerr << "warning: " << sim.warning << "\n";

  write_data_dir(sim.dataset, out_dir);
  io::write_oracle_csv(sim, (fs::path(out_dir) / "oracle.csv").string());

  io::RunManifest m;
  m.command = "simulate";
  m.config_hash = io::config_hash(io::sim_config_to_json(cfg));
  m.seeds = {cfg.seed};
  m.input_paths = {config_path};
  for (const char* f : {"features.csv", "outcomes.csv", "oracle.csv",
                        "meta.json"})
    m.output_paths.push_back((fs::path(out_dir) / f).string());
  m.wall_time_seconds = seconds_since(start);
  m.version = io::kVersion;
  io::write_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  std::cout << "wrote " << sim.dataset.size() << " subjects to " << out_dir
            << "\n";
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_dir, int events_override) {
  const auto start = std::chrono::steady_clock::now();
  json j = io::read_json_file(config_path);
  TrainConfig cfg = train_config_from_json(j);
  const double valid_fraction = j.value("valid_fraction", 0.15);
  if (!(valid_fraction > 0.0) || valid_fraction >= 1.0)
    throw ValidationError("config: valid_fraction must lie in (0,1)");

  Dataset data = load_data_dir(data_dir, events_override);
  if (data.records.empty()) throw ValidationError("training data is empty");

  // deterministic train/validation partition
  std::vector<size_t> idx(data.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(cfg.seed);
  rng.shuffle(idx);
  const size_t n_valid = std::max<size_t>(
      1, static_cast<size_t>(std::llround(valid_fraction * data.size())));
  Dataset train_set{{}, data.n_event_types, data.bin_width};
  Dataset valid_set{{}, data.n_event_types, data.bin_width};
  for (size_t i = 0; i < idx.size(); ++i)
    (i < data.size() - n_valid ? train_set : valid_set)
        .records.push_back(data.records[idx[i]]);

  TrainResult result = train(train_set, valid_set, cfg);

  fs::create_directories(out_dir);
  const std::string ckpt = (fs::path(out_dir) / "checkpoint.bin").string();
  const std::string hist = (fs::path(out_dir) / "history.csv").string();
  save_checkpoint(result.model, ckpt);
  write_history_csv(result.history, hist);

  io::RunManifest m;
  m.command = "train";
  m.config_hash = io::config_hash(train_config_to_json(cfg));
  m.seeds = {cfg.seed};
  m.input_paths = {data_dir, config_path};
  m.output_paths = {ckpt, hist};
  m.wall_time_seconds = seconds_since(start);
  m.version = io::kVersion;
  io::write_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  std::cout << "best epoch " << result.best_epoch << ", checkpoint at " << ckpt
            << "\n";
  return 0;
}

int cmd_predict(const std::string& data_dir, const std::string& ckpt_path,
                const std::string& out_dir, int t_m, int events_override) {
  const auto start = std::chrono::steady_clock::now();
  Model model = load_checkpoint(ckpt_path);
  if (t_m <= 0) t_m = model.config.t_m;
  Dataset data = load_data_dir(data_dir, events_override);
  if (!data.records.empty() &&
      data.n_features() != model.dims.M)
    throw DimensionError("feature dimension mismatch: data has " +
                         std::to_string(data.n_features()) +
                         ", checkpoint expects " +
                         std::to_string(model.dims.M));

  std::vector<SurvivalCurves> curves = predict(model, data, t_m);
  for (size_t i = 0; i < curves.size(); ++i) {
    for (size_t t = 0; t < curves[i].S.size(); ++t) {
      double total = curves[i].S[t];
      for (const auto& f : curves[i].F) total += f[t];
      if (std::abs(total - 1.0) > 1e-9)
        throw NumericalError("subject " + data.records[i].id +
                             ": S + sum F != 1 at t=" + std::to_string(t));
    }
  }
  std::vector<std::string> ids;
  for (const auto& r : data.records) ids.push_back(r.id);

  fs::create_directories(out_dir);
  const std::string pred = (fs::path(out_dir) / "predictions.csv").string();
  io::write_predictions_csv(ids, curves, model.dims.b, pred);

  io::RunManifest m;
  m.command = "predict";
  m.config_hash = io::config_hash(train_config_to_json(model.config));
  m.seeds = {model.config.seed};
  m.input_paths = {data_dir, ckpt_path};
  m.output_paths = {pred};
  m.wall_time_seconds = seconds_since(start);
  m.version = io::kVersion;
  io::write_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  std::cout << "wrote " << ids.size() << " subjects to " << pred << "\n";
  return 0;
}

int cmd_evaluate(const std::string& predictions_path,
                 const std::string& data_dir,
                 const std::vector<double>& percentiles,
                 const std::string& out_dir, int events_override) {
  const auto start = std::chrono::steady_clock::now();
  io::Predictions preds = io::read_predictions_csv(predictions_path);
  Dataset data = load_data_dir(data_dir, events_override);

  std::map<std::string, size_t> pred_index;
  for (size_t i = 0; i < preds.ids.size(); ++i) pred_index[preds.ids[i]] = i;
  std::string missing;
  for (const auto& r : data.records)
    if (!pred_index.count(r.id)) missing += (missing.empty() ? "" : ", ") + r.id;
  if (!missing.empty())
    throw ValidationError("predictions missing subjects: " + missing);

  std::vector<io::MetricsRow> rows;
  for (int k = 1; k <= data.n_event_types; ++k) {
    std::vector<double> times;
    bool has_events = true;
    try {
      times = metrics::event_time_percentiles(data.records, k, percentiles);
    } catch (const ContractError&) {
      has_events = false;
    }
    for (size_t pi = 0; pi < percentiles.size(); ++pi) {
      io::MetricsRow row;
      row.event = k;
      row.percentile = percentiles[pi];
      if (!has_events) {
        row.reason = "no comparable pairs";
        rows.push_back(row);
        continue;
      }
      const double t = times[pi];
      row.t = t;
      // risk = predicted CIF at t, clamped to the prediction horizon
      const int bin = std::min(static_cast<int>(std::floor(t)), preds.t_m);
      std::vector<double> risk;
      for (const auto& r : data.records)
        risk.push_back(preds.curves[pred_index.at(r.id)]
                           .F[static_cast<size_t>(k) - 1]
                           [static_cast<size_t>(bin)]);
      row.n_pairs = metrics::comparable_pairs(data.records, k, t);
      try {
        row.auc = metrics::td_auc(risk, data.records, k, t);
        row.brier = metrics::td_brier(risk, data.records, k, t);
        if (!row.auc) row.reason = "no comparable pairs";
      } catch (const NumericalError& e) {
        row.reason = e.what();
      }
      rows.push_back(row);
    }
  }

  fs::create_directories(out_dir);
  const std::string out_csv = (fs::path(out_dir) / "metrics.csv").string();
  io::write_metrics_csv(rows, out_csv);

  io::RunManifest m;
  m.command = "evaluate";
  json pj;
  pj["percentiles"] = percentiles;
  m.config_hash = io::config_hash(pj);
  m.input_paths = {predictions_path, data_dir};
  m.output_paths = {out_csv};
  m.wall_time_seconds = seconds_since(start);
  m.version = io::kVersion;
  io::write_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  std::cout << "wrote " << rows.size() << " metric rows to " << out_csv
            << "\n";
  return 0;
}

int cmd_cluster(const std::string& data_dir, const std::string& ckpt_path,
                int event, int k_clusters, int horizon, uint64_t seed,
                const std::string& out_dir, int events_override) {
  const auto start = std::chrono::steady_clock::now();
  Model model = load_checkpoint(ckpt_path);
  Dataset data = load_data_dir(data_dir, events_override);
  if (data.records.empty()) throw ValidationError("dataset is empty");
  if (data.n_features() != model.dims.M)
    throw DimensionError("feature dimension mismatch: data has " +
                         std::to_string(data.n_features()) +
                         ", checkpoint expects " +
                         std::to_string(model.dims.M));
  if (horizon <= 0) horizon = model.config.t_m;

  auto rows = analysis::latent_summary(model, data, event, horizon);
  auto km = analysis::kmeans(rows, k_clusters, seed);
  auto curves =
      analysis::cluster_incidence(km.labels, data.records, data.n_event_types);

  int t_max = 0;
  for (const auto& r : data.records)
    t_max = std::max(t_max, r.observed_time);

  std::vector<std::string> ids;
  for (const auto& r : data.records) ids.push_back(r.id);
  fs::create_directories(out_dir);
  const std::string labels_csv = (fs::path(out_dir) / "clusters.csv").string();
  const std::string curves_csv =
      (fs::path(out_dir) / "cluster_curves.csv").string();
  io::write_cluster_labels_csv(ids, km.labels, labels_csv);
  io::write_cluster_curves_csv(curves, data.n_event_types, t_max, curves_csv);

  io::RunManifest m;
  m.command = "cluster";
  json cj{{"event", event}, {"k", k_clusters}, {"horizon", horizon}};
  m.config_hash = io::config_hash(cj);
  m.seeds = {seed};
  m.input_paths = {data_dir, ckpt_path};
  m.output_paths = {labels_csv, curves_csv};
  m.wall_time_seconds = seconds_since(start);
  m.version = io::kVersion;
  io::write_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  std::cout << "wrote " << k_clusters << "-cluster labels to " << labels_csv
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-ODE competing-risks survival toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, ckpt_path, predictions_path;
  int t_m = 0, event = 1, k_clusters = 4, horizon = 0, events_override = 0;
  uint64_t seed = 0;
  std::vector<double> percentiles{0.25, 0.5, 0.75};

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim->add_option("--config", config_path, "Generator config JSON")
      ->required();
  sim->add_option("--out", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Fit a model");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--config", config_path, "Training config JSON")
      ->required();
  train->add_option("--out", out_dir, "Output directory")->required();
  train->add_option("--events", events_override,
                    "Event count when meta.json is absent");

  auto* pred = app.add_subcommand("predict", "Write survival curves");
  pred->add_option("--data", data_dir, "Dataset directory")->required();
  pred->add_option("--checkpoint", ckpt_path, "Model checkpoint")->required();
  pred->add_option("--out", out_dir, "Output directory")->required();
  pred->add_option("--t_m", t_m, "Prediction horizon in bins");
  pred->add_option("--events", events_override,
                   "Event count when meta.json is absent");

  auto* eval = app.add_subcommand("evaluate", "Score predictions");
  eval->add_option("--predictions", predictions_path, "Predictions CSV")
      ->required();
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--percentiles", percentiles,
                   "Event-time percentiles to evaluate at");
  eval->add_option("--out", out_dir, "Output directory")->required();
  eval->add_option("--events", events_override,
                   "Event count when meta.json is absent");

  auto* clus = app.add_subcommand("cluster", "Cluster latent summaries");
  clus->add_option("--data", data_dir, "Dataset directory")->required();
  clus->add_option("--checkpoint", ckpt_path, "Model checkpoint")->required();
  clus->add_option("--event", event, "Event type for the latent summary");
  clus->add_option("--k", k_clusters, "Cluster count");
  clus->add_option("--horizon", horizon, "Summary horizon in bins");
  clus->add_option("--seed", seed, "Clustering seed");
  clus->add_option("--out", out_dir, "Output directory")->required();
  clus->add_option("--events", events_override,
                   "Event count when meta.json is absent");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(config_path, out_dir);
    if (train->parsed())
      return cmd_train(data_dir, config_path, out_dir, events_override);
    if (pred->parsed())
      return cmd_predict(data_dir, ckpt_path, out_dir, t_m, events_override);
    if (eval->parsed())
      return cmd_evaluate(predictions_path, data_dir, percentiles, out_dir,
                          events_override);
    if (clus->parsed())
      return cmd_cluster(data_dir, ckpt_path, event, k_clusters, horizon, seed,
                         out_dir, events_override);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
