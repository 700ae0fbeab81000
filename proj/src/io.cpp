#include "survode/io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace survode::io {

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(std::numeric_limits<double>::max_digits10);
  ss << v;
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw ValidationError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ValidationError("cannot rename " + tmp + " to " + path);
}

void write_features_csv(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  out << "id,time,feature,value\n";
  for (const auto& r : data.records) {
    const auto& s = r.series;
    for (size_t t = 0; t < s.timestamps.size(); ++t)
      for (size_t f = 0; f < s.values[t].size(); ++f)
        if (s.values[t][f])
          out << r.id << ',' << format_double(s.timestamps[t]) << ",f" << f
              << ',' << format_double(*s.values[t][f]) << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_outcomes_csv(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  out << "id,observed_time,event_type,event_indicator\n";
  for (const auto& r : data.records) {
    out << r.id << ',' << r.observed_time << ',';
    if (r.event_type) out << *r.event_type;
    out << ',' << (r.event_indicator ? 1 : 0) << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_oracle_csv(const SimResult& sim, const std::string& path) {
  std::ostringstream out;
  out << "id,event,t,true_hazard,oracle_cif\n";
  for (size_t i = 0; i < sim.dataset.records.size(); ++i) {
    const auto& id = sim.dataset.records[i].id;
    for (size_t k = 0; k < sim.true_hazards[i].size(); ++k)
      for (size_t s = 0; s < sim.true_hazards[i][k].size(); ++s)
        out << id << ',' << (k + 1) << ',' << (s + 1) << ','
            << format_double(sim.true_hazards[i][k][s]) << ','
            << format_double(sim.oracle_cif[i][k][s]) << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_predictions_csv(const std::vector<std::string>& ids,
                           const std::vector<SurvivalCurves>& curves, size_t b,
                           const std::string& path) {
  if (ids.size() != curves.size())
    throw DimensionError("write_predictions_csv: ids/curves size mismatch");
  std::ostringstream out;
  out << "id,t,S";
  for (size_t k = 1; k <= b; ++k) out << ",F_" << k;
  out << '\n';
  for (size_t i = 0; i < ids.size(); ++i) {
    const auto& c = curves[i];
    for (size_t t = 0; t < c.S.size(); ++t) {
      out << ids[i] << ',' << t << ',' << format_double(c.S[t]);
      for (size_t k = 0; k < b; ++k) out << ',' << format_double(c.F[k][t]);
      out << '\n';
    }
  }
  write_file_atomic(path, out.str());
}

Predictions read_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path + ": empty predictions file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 4 || header[0] != "id" || header[1] != "t" ||
      header[2] != "S")
    throw ParseError(path + ": expected header id,t,S,F_1,...");
  Predictions p;
  p.b = static_cast<int>(header.size()) - 3;

  // id -> t -> (S, F_1..F_b); map keeps the first-seen subject order below
  std::map<std::string, std::map<int, std::vector<double>>> table;
  std::vector<std::string> order;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size())
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": wrong column count");
    try {
      const int t = std::stoi(cells[1]);
      std::vector<double> row;
      for (size_t c = 2; c < cells.size(); ++c)
        row.push_back(std::stod(cells[c]));
      if (table.find(cells[0]) == table.end()) order.push_back(cells[0]);
      table[cells[0]][t] = std::move(row);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": cannot parse row");
    }
  }
  for (const auto& id : order) {
    const auto& rows = table.at(id);
    const int t_m = rows.rbegin()->first;
    SurvivalCurves c;
    c.S.assign(static_cast<size_t>(t_m) + 1, 0.0);
    c.F.assign(static_cast<size_t>(p.b),
               std::vector<double>(static_cast<size_t>(t_m) + 1, 0.0));
    for (int t = 0; t <= t_m; ++t) {
      auto it = rows.find(t);
      if (it == rows.end())
        throw ParseError(path + ": subject " + id + " missing t=" +
                         std::to_string(t));
      c.S[static_cast<size_t>(t)] = it->second[0];
      for (int k = 0; k < p.b; ++k)
        c.F[static_cast<size_t>(k)][static_cast<size_t>(t)] =
            it->second[static_cast<size_t>(k) + 1];
    }
    p.ids.push_back(id);
    p.t_m = t_m;
    p.curves.push_back(std::move(c));
  }
  return p;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path) {
  std::ostringstream out;
  out << "event,percentile,t,auc,brier,n_pairs,reason\n";
  for (const auto& r : rows) {
    out << r.event << ',' << format_double(r.percentile) << ','
        << format_double(r.t) << ',';
    if (r.auc) out << format_double(*r.auc);
    out << ',';
    if (r.brier) out << format_double(*r.brier);
    out << ',' << r.n_pairs << ',' << r.reason << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_cluster_labels_csv(const std::vector<std::string>& ids,
                              const std::vector<int>& labels,
                              const std::string& path) {
  if (ids.size() != labels.size())
    throw DimensionError("write_cluster_labels_csv: size mismatch");
  std::ostringstream out;
  out << "id,cluster\n";
  for (size_t i = 0; i < ids.size(); ++i)
    out << ids[i] << ',' << labels[i] << '\n';
  write_file_atomic(path, out.str());
}

void write_cluster_curves_csv(
    const std::vector<analysis::ClusterCurves>& curves, int n_event_types,
    int t_max, const std::string& path) {
  std::ostringstream out;
  out << "cluster,event,t,F\n";
  for (const auto& cc : curves)
    for (int k = 1; k <= n_event_types; ++k)
      for (int t = 0; t <= t_max; ++t)
        out << cc.cluster << ',' << k << ',' << t << ','
            << format_double(
                   cc.curves.F[static_cast<size_t>(k) - 1](double(t)))
            << '\n';
  write_file_atomic(path, out.str());
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  for (const char* key :
       {"n_subjects", "b", "M", "base_hazards", "covariate_effect", "seed"}) {
    if (!j.contains(key))
      throw ValidationError(std::string("config: missing field '") + key +
                            "'");
  }
  c.n_subjects = j.at("n_subjects").get<int>();
  c.b = j.at("b").get<int>();
  c.M = j.at("M").get<int>();
  c.base_hazards = j.at("base_hazards").get<std::vector<double>>();
  c.covariate_effect = j.at("covariate_effect").get<std::vector<double>>();
  c.seed = j.at("seed").get<uint64_t>();
  c.censoring_hazard = j.value("censoring_hazard", c.censoring_hazard);
  c.observation_rate = j.value("observation_rate", c.observation_rate);
  c.t_m = j.value("t_m", c.t_m);
  c.n_obs_times = j.value("n_obs_times", c.n_obs_times);
  c.validate();
  return c;
}

nlohmann::json sim_config_to_json(const SimConfig& c) {
  return nlohmann::json{{"n_subjects", c.n_subjects},
                        {"b", c.b},
                        {"M", c.M},
                        {"base_hazards", c.base_hazards},
                        {"covariate_effect", c.covariate_effect},
                        {"censoring_hazard", c.censoring_hazard},
                        {"observation_rate", c.observation_rate},
                        {"t_m", c.t_m},
                        {"n_obs_times", c.n_obs_times},
                        {"seed", c.seed}};
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string config_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j{{"command", m.command},
                   {"config_hash", m.config_hash},
                   {"seeds", m.seeds},
                   {"input_paths", m.input_paths},
                   {"output_paths", m.output_paths},
                   {"wall_time_seconds", m.wall_time_seconds},
                   {"version", m.version}};
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace survode::io
