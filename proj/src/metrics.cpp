#include "survode/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace survode::metrics {

double StepFunction::operator()(double t) const {
  // last breakpoint <= t
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  if (it == breakpoints.begin()) return value0;
  return values[static_cast<size_t>(it - breakpoints.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), t);
  if (it == breakpoints.begin()) return value0;
  return values[static_cast<size_t>(it - breakpoints.begin()) - 1];
}

StepFunction km_censoring(const std::vector<SurvivalRecord>& records) {
  if (records.empty()) throw ContractError("km_censoring: no records");
  // time -> (event count, censoring count)
  std::map<int, std::pair<size_t, size_t>> counts;
  for (const auto& r : records) {
    auto& c = counts[r.observed_time];
    if (r.event_indicator)
      ++c.first;
    else
      ++c.second;
  }
  StepFunction g;
  g.value0 = 1.0;
  size_t at_risk = records.size();
  double cur = 1.0;
  for (const auto& [time, c] : counts) {
    const auto [d, cen] = c;
    if (cen > 0) {
      // events at this time leave the risk set first
      const size_t n_for_censoring = at_risk - d;
      cur *= n_for_censoring > 0
                 ? 1.0 - static_cast<double>(cen) / n_for_censoring
                 : 0.0;
    }
    g.breakpoints.push_back(static_cast<double>(time));
    g.values.push_back(cur);
    at_risk -= d + cen;
  }
  return g;
}

namespace {

bool is_case(const SurvivalRecord& r, int k, double t) {
  return r.event_indicator && r.event_type && *r.event_type == k &&
         r.observed_time <= t;
}
bool is_control(const SurvivalRecord& r, double t) {
  return r.observed_time > t;
}

double case_weight(const StepFunction& g, const SurvivalRecord& r) {
  const double gv = g.left_limit(static_cast<double>(r.observed_time));
  if (!(gv > 0.0))
    throw NumericalError(
        "degenerate IPCW weight: G(t-) = 0 at subject " + r.id);
  return 1.0 / gv;
}

}  // namespace

size_t comparable_pairs(const std::vector<SurvivalRecord>& records, int k,
                        double t) {
  size_t cases = 0, controls = 0;
  for (const auto& r : records) {
    if (is_case(r, k, t)) ++cases;
    if (is_control(r, t)) ++controls;
  }
  return cases * controls;
}

std::optional<double> td_auc(const std::vector<double>& risk,
                             const std::vector<SurvivalRecord>& records, int k,
                             double t) {
  if (risk.size() != records.size())
    throw DimensionError("td_auc: risk/records size mismatch");
  const StepFunction g = km_censoring(records);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!is_case(records[i], k, t)) continue;
    const double w = case_weight(g, records[i]);
    for (size_t j = 0; j < records.size(); ++j) {
      if (!is_control(records[j], t)) continue;
      den += w;
      if (risk[j] <= risk[i]) num += w;
    }
  }
  if (den == 0.0) return std::nullopt;
  return num / den;
}

double td_brier(const std::vector<double>& risk,
                const std::vector<SurvivalRecord>& records, int k, double t) {
  if (risk.size() != records.size())
    throw DimensionError("td_brier: risk/records size mismatch");
  if (records.empty()) throw ContractError("td_brier: no records");
  const StepFunction g = km_censoring(records);
  const double g_at_t = g(t);
  double total = 0.0;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (is_case(r, k, t)) {
      const double w = case_weight(g, r);
      total += (1.0 - risk[i]) * (1.0 - risk[i]) * w;
    } else if (is_control(r, t)) {
      if (!(g_at_t > 0.0))
        throw NumericalError("degenerate IPCW weight: G(t) = 0 at subject " +
                             r.id);
      total += risk[i] * risk[i] / g_at_t;
    }
    // censored before t or competing event by t: contributes 0, counts in N
  }
  return total / static_cast<double>(records.size());
}

AalenJohansen aalen_johansen(const std::vector<SurvivalRecord>& records,
                             int n_event_types) {
  if (records.empty()) throw ContractError("aalen_johansen: no records");
  // time -> per-event event counts and censoring count
  struct Counts {
    std::vector<size_t> d;
    size_t cen = 0;
  };
  std::map<int, Counts> counts;
  for (const auto& r : records) {
    auto& c = counts[r.observed_time];
    if (c.d.empty()) c.d.assign(n_event_types, 0);
    if (r.event_indicator)
      ++c.d[*r.event_type - 1];
    else
      ++c.cen;
  }
  AalenJohansen aj;
  aj.F.resize(n_event_types);
  size_t at_risk = records.size();
  double surv = 1.0;
  std::vector<double> cif(n_event_types, 0.0);
  for (const auto& [time, c] : counts) {
    size_t d_all = 0;
    for (size_t dk : c.d) d_all += dk;
    const double s_prev = surv;
    if (at_risk > 0) {
      for (int k = 0; k < n_event_types; ++k)
        cif[k] += s_prev * static_cast<double>(c.d[k]) / at_risk;
      surv *= 1.0 - static_cast<double>(d_all) / at_risk;
    }
    aj.S.breakpoints.push_back(static_cast<double>(time));
    aj.S.values.push_back(surv);
    for (int k = 0; k < n_event_types; ++k) {
      aj.F[k].breakpoints.push_back(static_cast<double>(time));
      aj.F[k].values.push_back(cif[k]);
    }
    at_risk -= d_all + c.cen;
  }
  aj.S.value0 = 1.0;
  for (auto& f : aj.F) f.value0 = 0.0;
  return aj;
}

double rmft(const std::vector<double>& cif_curve, int horizon,
            double bin_width) {
  if (horizon < 0 || static_cast<size_t>(horizon) >= cif_curve.size())
    throw ContractError("rmft: horizon out of range");
  double acc = 0.0;
  for (int t = 1; t <= horizon; ++t) acc += cif_curve[t];
  return acc * bin_width;
}

std::vector<double> event_time_percentiles(
    const std::vector<SurvivalRecord>& records, int k,
    const std::vector<double>& percentiles) {
  std::vector<double> times;
  for (const auto& r : records)
    if (r.event_indicator && r.event_type && *r.event_type == k)
      times.push_back(static_cast<double>(r.observed_time));
  if (times.empty())
    throw ContractError("event_time_percentiles: no events of type " +
                        std::to_string(k));
  std::sort(times.begin(), times.end());
  std::vector<double> out;
  for (double p : percentiles) {
    size_t rank = static_cast<size_t>(
        std::ceil(p * static_cast<double>(times.size())));
    rank = std::clamp<size_t>(rank, 1, times.size());
    out.push_back(times[rank - 1]);
  }
  return out;
}

}  // namespace survode::metrics
