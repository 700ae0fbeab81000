#pragma once

#include <optional>
#include <vector>

#include "survode/datamodel.hpp"
#include "survode/rng.hpp"

namespace survode::metrics {

// Right-continuous step function with a defined value before the first
// breakpoint.
struct StepFunction {
  std::vector<double> breakpoints;  // strictly increasing
  std::vector<double> values;       // value at and after each breakpoint
  double value0 = 1.0;

  double operator()(double t) const;
  double left_limit(double t) const;  // value just before t
};

// Kaplan-Meier estimator of the censoring survival function G (censoring
// treated as the event). At tied times, events leave the risk set before
// censorings.
StepFunction km_censoring(const std::vector<SurvivalRecord>& records);

// Time-dependent cumulative/dynamic AUC for event k at time t. risk[i] is
// F_hat_k(t | X_i). Ties count as concordant (the indicator is <=).
// Returns nullopt when there are no comparable pairs.
std::optional<double> td_auc(const std::vector<double>& risk,
                             const std::vector<SurvivalRecord>& records, int k,
                             double t);

// Comparable (case, control) pair count at time t for event k.
size_t comparable_pairs(const std::vector<SurvivalRecord>& records, int k,
                        double t);

// Time-dependent Brier score for event k at time t (IPCW-weighted, averaged
// over the full test-set size; competing-event-by-t subjects contribute 0
// but count in the denominator).
double td_brier(const std::vector<double>& risk,
                const std::vector<SurvivalRecord>& records, int k, double t);

struct AalenJohansen {
  StepFunction S;                  // event-free survival
  std::vector<StepFunction> F;     // per-event CIF, index k-1
};

AalenJohansen aalen_johansen(const std::vector<SurvivalRecord>& records,
                             int n_event_types);

// Restricted mean failure time: sum_{t=1..horizon} F(t) * bin_width, where
// F is a CIF over bins 0..t_m.
double rmft(const std::vector<double>& cif_curve, int horizon,
            double bin_width);

// Nearest-rank percentiles of observed event times for event k.
std::vector<double> event_time_percentiles(
    const std::vector<SurvivalRecord>& records, int k,
    const std::vector<double>& percentiles);

// Nonparametric bootstrap over subject indices; fn maps a resampled index
// set to a metric value. nullopt results are skipped.
template <typename F>
std::vector<double> bootstrap(size_t n, int n_replicates, uint64_t seed,
                              F&& fn) {
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n_replicates);
  for (int r = 0; r < n_replicates; ++r) {
    std::vector<size_t> idx(n);
    for (auto& i : idx) i = rng.below(n);
    if (auto v = fn(idx)) out.push_back(*v);
  }
  return out;
}

}  // namespace survode::metrics
