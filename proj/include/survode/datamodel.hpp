#pragma once

#include <optional>
#include <string>
#include <vector>

#include "survode/errors.hpp"

namespace survode {

// Irregularly sampled multivariate series for one subject. values[t][f] is
// the observation of feature f at timestamps[t], absent when not recorded.
struct IrregularSeries {
  std::vector<double> timestamps;                              // strictly increasing
  std::vector<std::vector<std::optional<double>>> values;      // [time][feature]

  size_t n_features() const { return values.empty() ? 0 : values[0].size(); }
  double latest_time() const { return timestamps.back(); }
  void validate() const;
};

struct SurvivalRecord {
  std::string id;
  int observed_time = 0;               // remaining-time bins, >= 1
  std::optional<int> event_type;       // 1..b when event observed
  bool event_indicator = false;        // delta
  IrregularSeries series;
};

struct Dataset {
  std::vector<SurvivalRecord> records;
  int n_event_types = 1;  // b
  double bin_width = 1.0;

  size_t size() const { return records.size(); }
  size_t n_features() const {
    return records.empty() ? 0 : records[0].series.n_features();
  }
  void validate() const;
};

// Batch aligned on the union of all observation times, with zero-filled
// values, missingness masks, and time-since-last-observation channels.
struct EncodedBatch {
  std::vector<double> grid;
  size_t n = 0, T = 0, M = 0;
  std::vector<double> x;      // n*T*M, zero where unobserved
  std::vector<double> m;      // n*T*M, 1 = observed
  std::vector<double> delta;  // n*T*M, time since last observation
  std::vector<size_t> per_subject_latest;  // grid index of latest observation

  size_t at(size_t i, size_t t, size_t f) const { return (i * T + t) * M + f; }
  bool any_observed(size_t i, size_t t) const {
    for (size_t f = 0; f < M; ++f)
      if (m[at(i, t, f)] != 0.0) return true;
    return false;
  }
};

struct CsvSchema {
  std::string id = "id";
  std::string time = "time";
  std::string feature = "feature";
  std::string value = "value";
  std::string observed_time = "observed_time";
  std::string event_type = "event_type";
  std::string event_indicator = "event_indicator";
};

// Long-format features CSV (id,time,feature,value) plus outcomes CSV
// (id,observed_time,event_type,event_indicator). Duplicate (id,time,feature)
// rows keep the last. event_type may be blank for censored subjects.
Dataset ingest_csv(const std::string& features_path,
                   const std::string& outcomes_path, int n_event_types,
                   const CsvSchema& schema = {});

EncodedBatch build_batch(const std::vector<SurvivalRecord>& records);

struct SplitResult {
  Dataset train, valid, test;
};
SplitResult split(const Dataset& data, double f_train, double f_valid,
                  double f_test, uint64_t seed);

struct SimConfig {
  int n_subjects = 100;
  int b = 1;                            // event count
  int M = 3;                            // feature count
  std::vector<double> base_hazards;     // per event
  std::vector<double> covariate_effect; // per event
  double censoring_hazard = 0.0;
  double observation_rate = 1.0;
  int t_m = 10;
  int n_obs_times = 6;  // pre-landmark observation window length
  uint64_t seed = 0;

  void validate() const;
};

struct SimResult {
  Dataset dataset;
  // Realized per-bin hazards along each subject's sampled covariate path,
  // [subject][event 1..b][bin 1..t_m].
  std::vector<std::vector<std::vector<double>>> true_hazards;
  // Landmark-conditional oracle CIF (Monte-Carlo over future covariate
  // paths given the covariate at the landmark), same indexing.
  std::vector<std::vector<std::vector<double>>> oracle_cif;
  long n_clamped = 0;
  long n_hazard_cells = 0;
  std::string warning;  // nonempty when clamping exceeded 1% of cells
};

SimResult simulate(const SimConfig& config);

// Removes the given fraction of each subject's observation timepoints
// (round half down, never the first timepoint). Outcome fields untouched.
Dataset drop_measurements(const Dataset& data, double missing_rate,
                          uint64_t seed);

}  // namespace survode
