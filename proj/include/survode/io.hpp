#pragma once

#include <string>
#include <vector>

#include "survode/analysis.hpp"
#include "survode/datamodel.hpp"
#include "survode/decoder.hpp"

#include "json.hpp"

namespace survode::io {

// Long-format features table: id,time,feature,value (feature names f0..fM-1).
void write_features_csv(const Dataset& data, const std::string& path);
// Outcomes table: id,observed_time,event_type,event_indicator
// (event_type blank when censored).
void write_outcomes_csv(const Dataset& data, const std::string& path);
// Generator ground truth: id,event,t,true_hazard,oracle_cif for bins 1..t_m.
void write_oracle_csv(const SimResult& sim, const std::string& path);

// Per-subject survival curves: id,t,S,F_1..F_b for t = 0..t_m. b fixes the
// header width even when there are no rows.
void write_predictions_csv(const std::vector<std::string>& ids,
                           const std::vector<SurvivalCurves>& curves, size_t b,
                           const std::string& path);
struct Predictions {
  std::vector<std::string> ids;
  std::vector<SurvivalCurves> curves;
  int b = 0;
  int t_m = 0;
};
Predictions read_predictions_csv(const std::string& path);

struct MetricsRow {
  int event = 0;
  double percentile = 0.0;
  double t = 0.0;
  std::optional<double> auc;
  std::optional<double> brier;
  size_t n_pairs = 0;
  std::string reason;  // nonempty when a metric is undefined
};
void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path);

void write_cluster_labels_csv(const std::vector<std::string>& ids,
                              const std::vector<int>& labels,
                              const std::string& path);
// Per-cluster CIF curves: cluster,event,t,F at integer times 0..t_max.
void write_cluster_curves_csv(
    const std::vector<analysis::ClusterCurves>& curves, int n_event_types,
    int t_max, const std::string& path);

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const SimConfig& cfg);

nlohmann::json read_json_file(const std::string& path);
// Writes via a temporary file and rename, so readers never see partial files.
void write_file_atomic(const std::string& path, const std::string& content);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<uint64_t> seeds;
  std::vector<std::string> input_paths;
  std::vector<std::string> output_paths;
  double wall_time_seconds = 0.0;
  std::string version;
};
void write_manifest(const RunManifest& m, const std::string& path);

// FNV-1a 64-bit hash of a canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

// Full-precision decimal rendering that round-trips doubles.
std::string format_double(double v);

constexpr const char* kVersion = "0.1.0";

}  // namespace survode::io
