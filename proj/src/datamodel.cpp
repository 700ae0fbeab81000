#include "survode/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "survode/rng.hpp"

namespace survode {

void IrregularSeries::validate() const {
  if (timestamps.empty())
    throw ValidationError("IrregularSeries: empty series");
  if (timestamps.size() != values.size())
    throw DimensionError("IrregularSeries: timestamps/values length mismatch");
  for (size_t i = 0; i < timestamps.size(); ++i) {
    if (timestamps[i] < 0.0)
      throw ValidationError("IrregularSeries: negative timestamp");
    if (i > 0 && !(timestamps[i] > timestamps[i - 1]))
      throw ValidationError("IrregularSeries: timestamps not strictly increasing");
    for (const auto& v : values[i])
      if (v && !std::isfinite(*v))
        throw ValidationError("IrregularSeries: non-finite observation");
  }
  const size_t M = values[0].size();
  for (const auto& row : values)
    if (row.size() != M)
      throw DimensionError("IrregularSeries: ragged feature dimension");
}

void Dataset::validate() const {
  for (const auto& r : records) {
    if (r.observed_time < 1)
      throw ValidationError("record " + r.id + ": observed_time must be >= 1");
    if (!r.event_indicator && r.event_type)
      throw ValidationError("record " + r.id +
                            ": censored record carries an event_type");
    if (r.event_indicator) {
      if (!r.event_type)
        throw ValidationError("record " + r.id +
                              ": event indicated but event_type missing");
      if (*r.event_type < 1 || *r.event_type > n_event_types)
        throw ValidationError("record " + r.id + ": event_type " +
                              std::to_string(*r.event_type) +
                              " outside 1.." + std::to_string(n_event_types));
    }
    r.series.validate();
    if (r.series.n_features() != n_features())
      throw DimensionError("record " + r.id + ": feature dimension mismatch");
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<size_t> line_numbers;

  int col(const std::string& name, const std::string& path) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ParseError(path + ": missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  }
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  CsvTable t;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size())
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": expected " + std::to_string(t.header.size()) +
                         " columns, got " + std::to_string(cells.size()));
      t.rows.push_back(std::move(cells));
      t.line_numbers.push_back(lineno);
    }
  }
  return t;
}

double parse_double(const std::string& s, const std::string& path,
                    size_t lineno) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(lineno) +
                     ": cannot parse number '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& path, size_t lineno) {
  try {
    size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(lineno) +
                     ": cannot parse integer '" + s + "'");
  }
}

}  // namespace

Dataset ingest_csv(const std::string& features_path,
                   const std::string& outcomes_path, int n_event_types,
                   const CsvSchema& schema) {
  CsvTable feats = read_csv(features_path);
  CsvTable outs = read_csv(outcomes_path);

  Dataset ds;
  ds.n_event_types = n_event_types;
  if (outs.rows.empty()) return ds;

  // feature universe, lexicographic index order
  std::set<std::string> feature_names;
  // id -> time -> feature -> value (last write wins for duplicates)
  std::map<std::string, std::map<double, std::map<std::string, double>>> obs;
  if (!feats.header.empty()) {
    const int ci = feats.col(schema.id, features_path);
    const int ct = feats.col(schema.time, features_path);
    const int cf = feats.col(schema.feature, features_path);
    const int cv = feats.col(schema.value, features_path);
    for (size_t r = 0; r < feats.rows.size(); ++r) {
      const auto& row = feats.rows[r];
      const size_t ln = feats.line_numbers[r];
      const double time = parse_double(row[ct], features_path, ln);
      const double value = parse_double(row[cv], features_path, ln);
      if (time < 0.0)
        throw ValidationError(features_path + ":" + std::to_string(ln) +
                              ": negative time");
      feature_names.insert(row[cf]);
      obs[row[ci]][time][row[cf]] = value;
    }
  }
  std::map<std::string, size_t> feature_index;
  for (const auto& f : feature_names)
    feature_index[f] = feature_index.size();
  const size_t M = feature_index.size();

  const int ci = outs.col(schema.id, outcomes_path);
  const int ct = outs.col(schema.observed_time, outcomes_path);
  const int ck = outs.col(schema.event_type, outcomes_path);
  const int cd = outs.col(schema.event_indicator, outcomes_path);
  for (size_t r = 0; r < outs.rows.size(); ++r) {
    const auto& row = outs.rows[r];
    const size_t ln = outs.line_numbers[r];
    SurvivalRecord rec;
    rec.id = row[ci];
    rec.observed_time =
        static_cast<int>(parse_long(row[ct], outcomes_path, ln));
    rec.event_indicator = parse_long(row[cd], outcomes_path, ln) != 0;
    if (!row[ck].empty() && row[ck] != "0")
      rec.event_type = static_cast<int>(parse_long(row[ck], outcomes_path, ln));
    auto it = obs.find(rec.id);
    if (it == obs.end())
      throw ValidationError(outcomes_path + ":" + std::to_string(ln) +
                            ": subject " + rec.id + " has no feature rows");
    for (const auto& [time, fv] : it->second) {
      rec.series.timestamps.push_back(time);
      std::vector<std::optional<double>> vrow(M);
      for (const auto& [fname, value] : fv)
        vrow[feature_index.at(fname)] = value;
      rec.series.values.push_back(std::move(vrow));
    }
    ds.records.push_back(std::move(rec));
  }
  ds.validate();
  return ds;
}

EncodedBatch build_batch(const std::vector<SurvivalRecord>& records) {
  if (records.empty()) throw ContractError("build_batch: no records");
  const size_t M = records[0].series.n_features();
  for (const auto& r : records)
    if (r.series.n_features() != M)
      throw DimensionError("build_batch: feature dimension mismatch for " +
                           r.id);

  std::set<double> union_times;
  for (const auto& r : records)
    union_times.insert(r.series.timestamps.begin(), r.series.timestamps.end());

  EncodedBatch b;
  b.grid.assign(union_times.begin(), union_times.end());
  b.n = records.size();
  b.T = b.grid.size();
  b.M = M;
  const size_t total = b.n * b.T * b.M;
  b.x.assign(total, 0.0);
  b.m.assign(total, 0.0);
  b.delta.assign(total, 0.0);
  b.per_subject_latest.resize(b.n);

  for (size_t i = 0; i < b.n; ++i) {
    const auto& s = records[i].series;
    // grid index per observation time (grid holds exactly these doubles)
    size_t obs_idx = 0;
    for (size_t t = 0; t < b.T && obs_idx < s.timestamps.size(); ++t) {
      if (b.grid[t] == s.timestamps[obs_idx]) {
        for (size_t f = 0; f < M; ++f) {
          if (s.values[obs_idx][f]) {
            b.x[b.at(i, t, f)] = *s.values[obs_idx][f];
            b.m[b.at(i, t, f)] = 1.0;
          }
        }
        ++obs_idx;
      }
    }
    // latest grid index with any observation for this subject
    const double latest = s.latest_time();
    b.per_subject_latest[i] = static_cast<size_t>(
        std::lower_bound(b.grid.begin(), b.grid.end(), latest) -
        b.grid.begin());
    // delta: time since each feature's last observation, or since grid start
    for (size_t f = 0; f < M; ++f) {
      double last = b.grid.front();
      bool seen = false;
      for (size_t t = 0; t < b.T; ++t) {
        if (b.m[b.at(i, t, f)] != 0.0) {
          b.delta[b.at(i, t, f)] = 0.0;
          last = b.grid[t];
          seen = true;
        } else {
          b.delta[b.at(i, t, f)] = b.grid[t] - (seen ? last : b.grid.front());
        }
      }
    }
  }
  return b;
}

SplitResult split(const Dataset& data, double f_train, double f_valid,
                  double f_test, uint64_t seed) {
  if (!(f_train > 0.0) || !(f_valid > 0.0) || !(f_test > 0.0))
    throw ValidationError("split: fractions must be positive");
  if (std::abs(f_train + f_valid + f_test - 1.0) > 1e-9)
    throw ValidationError("split: fractions must sum to 1");

  std::vector<size_t> idx(data.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  const size_t n = data.size();
  size_t n_train = static_cast<size_t>(std::llround(n * f_train));
  size_t n_valid = static_cast<size_t>(std::llround(n * f_valid));
  n_train = std::min(n_train, n);
  n_valid = std::min(n_valid, n - n_train);

  SplitResult out;
  for (Dataset* d : {&out.train, &out.valid, &out.test}) {
    d->n_event_types = data.n_event_types;
    d->bin_width = data.bin_width;
  }
  for (size_t i = 0; i < n; ++i) {
    const auto& rec = data.records[idx[i]];
    if (i < n_train)
      out.train.records.push_back(rec);
    else if (i < n_train + n_valid)
      out.valid.records.push_back(rec);
    else
      out.test.records.push_back(rec);
  }
  return out;
}

void SimConfig::validate() const {
  if (n_subjects < 1) throw ValidationError("SimConfig: n_subjects < 1");
  if (b < 1) throw ValidationError("SimConfig: b < 1");
  if (M < 1) throw ValidationError("SimConfig: M < 1");
  if (t_m < 1) throw ValidationError("SimConfig: t_m < 1");
  if (n_obs_times < 1) throw ValidationError("SimConfig: n_obs_times < 1");
  if (base_hazards.size() != static_cast<size_t>(b))
    throw ValidationError("SimConfig: base_hazards must have b entries");
  if (covariate_effect.size() != static_cast<size_t>(b))
    throw ValidationError("SimConfig: covariate_effect must have b entries");
  double total = 0.0;
  for (double h : base_hazards) {
    if (h < 0.0 || h >= 1.0)
      throw ValidationError("SimConfig: base hazards must lie in [0,1)");
    total += h;
  }
  if (total >= 1.0)
    throw ValidationError("SimConfig: base hazards sum to >= 1");
  if (censoring_hazard < 0.0 || censoring_hazard >= 1.0)
    throw ValidationError("SimConfig: censoring_hazard must lie in [0,1)");
  if (!(observation_rate > 0.0) || observation_rate > 1.0)
    throw ValidationError("SimConfig: observation_rate must lie in (0,1]");
}

namespace {

constexpr double kAr1Coeff = 0.9;
constexpr double kHazardCap = 0.99;

// Per-bin cause-specific hazards at covariate value c, clamped so the total
// stays below kHazardCap.
std::vector<double> hazards_at(const SimConfig& cfg, double c, bool* clamped) {
  std::vector<double> lam(cfg.b);
  double total = 0.0;
  for (int k = 0; k < cfg.b; ++k) {
    lam[k] = cfg.base_hazards[k] * std::exp(cfg.covariate_effect[k] * c);
    total += lam[k];
  }
  if (total > kHazardCap) {
    const double s = kHazardCap / total;
    for (double& l : lam) l *= s;
    if (clamped) *clamped = true;
  } else if (clamped) {
    *clamped = false;
  }
  return lam;
}

}  // namespace

SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  SimResult res;
  res.dataset.n_event_types = cfg.b;

  const double stationary_sd =
      1.0 / std::sqrt(1.0 - kAr1Coeff * kAr1Coeff);
  Rng root(cfg.seed);

  for (int i = 0; i < cfg.n_subjects; ++i) {
    Rng rng = root.fork(static_cast<uint64_t>(i));

    // latent AR(1) covariate over observation window plus prediction window
    const int path_len = cfg.n_obs_times + cfg.t_m;
    std::vector<double> cov(path_len);
    cov[0] = stationary_sd * rng.normal();
    for (int t = 1; t < path_len; ++t)
      cov[t] = kAr1Coeff * cov[t - 1] + rng.normal();

    // irregular feature observations
    IrregularSeries series;
    for (int t = 0; t < cfg.n_obs_times; ++t) {
      std::vector<std::optional<double>> row(cfg.M);
      bool any = false;
      for (int f = 0; f < cfg.M; ++f) {
        if (rng.uniform() < cfg.observation_rate) {
          row[f] = cov[t] + rng.normal();
          any = true;
        }
      }
      if (any) {
        series.timestamps.push_back(static_cast<double>(t));
        series.values.push_back(std::move(row));
      }
    }
    if (series.timestamps.empty()) {
      std::vector<std::optional<double>> row(cfg.M);
      row[0] = cov[0] + rng.normal();
      series.timestamps.push_back(0.0);
      series.values.push_back(std::move(row));
    }
    const int landmark = static_cast<int>(series.latest_time());

    // realized hazards and outcome over remaining-time bins
    std::vector<std::vector<double>> haz(
        cfg.b, std::vector<double>(cfg.t_m, 0.0));
    int observed_time = cfg.t_m;
    std::optional<int> event_type;
    bool delta = false;
    bool resolved = false;
    for (int s = 1; s <= cfg.t_m; ++s) {
      bool clamped = false;
      const auto lam = hazards_at(cfg, cov[landmark + s], &clamped);
      res.n_hazard_cells += cfg.b;
      if (clamped) res.n_clamped += cfg.b;
      for (int k = 0; k < cfg.b; ++k) haz[k][s - 1] = lam[k];
      if (!resolved) {
        const double u = rng.uniform();
        double cum = 0.0;
        for (int k = 0; k < cfg.b; ++k) {
          cum += lam[k];
          if (u < cum) {
            observed_time = s;
            event_type = k + 1;
            delta = true;
            resolved = true;
            break;
          }
        }
        if (!resolved && cfg.censoring_hazard > 0.0 &&
            rng.uniform() < cfg.censoring_hazard) {
          observed_time = s;
          delta = false;
          resolved = true;
        }
      }
    }

    // landmark-conditional oracle CIF via Monte Carlo over future paths
    std::vector<std::vector<double>> cif(
        cfg.b, std::vector<double>(cfg.t_m, 0.0));
    constexpr int kOraclePaths = 200;
    Rng orng = rng.fork(0x0c1fULL);
    for (int p = 0; p < kOraclePaths; ++p) {
      double c = cov[landmark];
      double surv = 1.0;
      for (int s = 1; s <= cfg.t_m; ++s) {
        c = kAr1Coeff * c + orng.normal();
        const auto lam = hazards_at(cfg, c, nullptr);
        double total = 0.0;
        for (int k = 0; k < cfg.b; ++k) {
          cif[k][s - 1] += lam[k] * surv;
          total += lam[k];
        }
        surv *= 1.0 - total;
      }
    }
    for (int k = 0; k < cfg.b; ++k) {
      double acc = 0.0;
      for (int s = 0; s < cfg.t_m; ++s) {
        acc += cif[k][s] / kOraclePaths;
        cif[k][s] = acc;
      }
    }

    SurvivalRecord rec;
    {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "s%05d", i);
      rec.id = buf;
    }
    rec.observed_time = observed_time;
    rec.event_type = event_type;
    rec.event_indicator = delta;
    rec.series = std::move(series);
    res.dataset.records.push_back(std::move(rec));
    res.true_hazards.push_back(std::move(haz));
    res.oracle_cif.push_back(std::move(cif));
  }

  if (res.n_hazard_cells > 0 &&
      res.n_clamped > res.n_hazard_cells / 100) {
    res.warning = "hazard clamping on " + std::to_string(res.n_clamped) +
                  " of " + std::to_string(res.n_hazard_cells) + " cells";
  }
  res.dataset.validate();
  return res;
}

Dataset drop_measurements(const Dataset& data, double missing_rate,
                          uint64_t seed) {
  if (missing_rate < 0.0 || missing_rate >= 1.0)
    throw ValidationError("drop_measurements: missing_rate must lie in [0,1)");
  Dataset out = data;
  if (missing_rate == 0.0) return out;
  Rng root(seed);
  for (size_t i = 0; i < out.records.size(); ++i) {
    auto& s = out.records[i].series;
    const size_t n_pts = s.timestamps.size();
    // round half down
    size_t n_remove = static_cast<size_t>(
        std::max(0.0, std::ceil(missing_rate * n_pts - 0.5)));
    n_remove = std::min(n_remove, n_pts - 1);
    if (n_remove == 0) continue;
    std::vector<size_t> candidates;
    for (size_t t = 1; t < n_pts; ++t) candidates.push_back(t);
    Rng rng = root.fork(i);
    rng.shuffle(candidates);
    candidates.resize(n_remove);
    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    for (size_t t : candidates) {
      s.timestamps.erase(s.timestamps.begin() + t);
      s.values.erase(s.values.begin() + t);
    }
  }
  return out;
}

}  // namespace survode
