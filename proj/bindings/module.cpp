// Python bindings for the core operations: synthetic data generation,
// ingestion, training, prediction, evaluation metrics, and clustering.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "survode/analysis.hpp"
#include "survode/io.hpp"
#include "survode/metrics.hpp"
#include "survode/training.hpp"

namespace py = pybind11;
using namespace survode;
using nlohmann::json;

namespace {

py::dict record_to_dict(const SurvivalRecord& r) {
  py::dict d;
  d["id"] = r.id;
  d["observed_time"] = r.observed_time;
  d["event_type"] = r.event_type ? py::cast(*r.event_type) : py::none();
  d["event_indicator"] = r.event_indicator;
  d["timestamps"] = r.series.timestamps;
  py::list values;
  for (const auto& row : r.series.values) {
    py::list prow;
    for (const auto& v : row)
      prow.append(v ? py::cast(*v) : py::none());
    values.append(prow);
  }
  d["values"] = values;
  return d;
}

SurvivalRecord record_from_dict(const py::dict& d) {
  SurvivalRecord r;
  r.id = d["id"].cast<std::string>();
  r.observed_time = d["observed_time"].cast<int>();
  if (!d["event_type"].is_none())
    r.event_type = d["event_type"].cast<int>();
  r.event_indicator = d["event_indicator"].cast<bool>();
  r.series.timestamps = d["timestamps"].cast<std::vector<double>>();
  for (const auto& row : d["values"]) {
    std::vector<std::optional<double>> prow;
    for (const auto& v : py::cast<py::sequence>(row))
      prow.push_back(v.is_none() ? std::optional<double>{}
                                 : std::optional<double>{v.cast<double>()});
    r.series.values.push_back(std::move(prow));
  }
  return r;
}

py::dict curves_to_dict(const SurvivalCurves& c) {
  py::dict d;
  d["S"] = c.S;
  d["F"] = c.F;
  return d;
}

}  // namespace

PYBIND11_MODULE(_survode, m) {
  m.doc() = "Latent-ODE competing-risks survival toolkit";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<ParseError>(m, "CsvParseError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const std::vector<py::dict>& records, int b,
                       double bin_width) {
             Dataset ds;
             ds.n_event_types = b;
             ds.bin_width = bin_width;
             for (const auto& d : records)
               ds.records.push_back(record_from_dict(d));
             ds.validate();
             return ds;
           }),
           py::arg("records"), py::arg("n_event_types") = 1,
           py::arg("bin_width") = 1.0)
      .def_readonly("n_event_types", &Dataset::n_event_types)
      .def_readonly("bin_width", &Dataset::bin_width)
      .def("__len__", [](const Dataset& d) { return d.size(); })
      .def_property_readonly("records", [](const Dataset& d) {
        py::list out;
        for (const auto& r : d.records) out.append(record_to_dict(r));
        return out;
      });

  py::class_<Model>(m, "Model")
      .def_property_readonly("n_features",
                             [](const Model& m_) { return m_.dims.M; })
      .def_property_readonly("n_event_types",
                             [](const Model& m_) { return m_.dims.b; })
      .def_property_readonly("config_json", [](const Model& m_) {
        return train_config_to_json(m_.config).dump();
      });

  m.def(
      "simulate",
      [](const std::string& config_json) {
        SimConfig cfg = io::sim_config_from_json(json::parse(config_json));
        SimResult res = simulate(cfg);
        py::dict out;
        out["dataset"] = res.dataset;
        out["true_hazards"] = res.true_hazards;
        out["oracle_cif"] = res.oracle_cif;
        out["warning"] = res.warning;
        return out;
      },
      py::arg("config_json"),
      "Generate a synthetic competing-risks dataset with oracle hazards.");

  m.def(
      "ingest_csv",
      [](const std::string& features_path, const std::string& outcomes_path,
         int n_event_types) {
        return ingest_csv(features_path, outcomes_path, n_event_types);
      },
      py::arg("features_path"), py::arg("outcomes_path"),
      py::arg("n_event_types"),
      "Load a long-format features CSV plus outcomes CSV.");

  m.def(
      "split",
      [](const Dataset& ds, double f_train, double f_valid, double f_test,
         uint64_t seed) {
        SplitResult s = split(ds, f_train, f_valid, f_test, seed);
        return py::make_tuple(s.train, s.valid, s.test);
      },
      py::arg("dataset"), py::arg("f_train"), py::arg("f_valid"),
      py::arg("f_test"), py::arg("seed"));

  m.def("drop_measurements", &drop_measurements, py::arg("dataset"),
        py::arg("missing_rate"), py::arg("seed"));

  m.def(
      "train",
      [](const Dataset& train_set, const Dataset& valid_set,
         const std::string& config_json) {
        TrainConfig cfg = train_config_from_json(json::parse(config_json));
        TrainResult res = train(train_set, valid_set, cfg);
        py::list history;
        for (const auto& h : res.history) {
          py::dict row;
          row["epoch"] = h.epoch;
          row["train_loss"] = h.train_loss;
          row["valid_loss"] = h.valid_loss;
          row["kl"] = h.kl;
          row["recon"] = h.recon;
          row["surv_nll"] = h.surv_nll;
          history.append(row);
        }
        py::dict out;
        out["model"] = res.model;
        out["history"] = history;
        out["best_epoch"] = res.best_epoch;
        return out;
      },
      py::arg("train_set"), py::arg("valid_set"), py::arg("config_json"));

  m.def(
      "predict",
      [](const Model& model, const Dataset& data, int t_m) {
        py::list out;
        for (const auto& c : predict(model, data, t_m))
          out.append(curves_to_dict(c));
        return out;
      },
      py::arg("model"), py::arg("dataset"), py::arg("t_m"));

  m.def("save_checkpoint", &save_checkpoint, py::arg("model"),
        py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def(
      "td_auc",
      [](const std::vector<double>& risk, const Dataset& data, int k,
         double t) { return metrics::td_auc(risk, data.records, k, t); },
      py::arg("risk"), py::arg("dataset"), py::arg("event"), py::arg("t"),
      "IPCW time-dependent AUC; None when no comparable pairs.");
  m.def(
      "td_brier",
      [](const std::vector<double>& risk, const Dataset& data, int k,
         double t) { return metrics::td_brier(risk, data.records, k, t); },
      py::arg("risk"), py::arg("dataset"), py::arg("event"), py::arg("t"));
  m.def(
      "aalen_johansen",
      [](const Dataset& data) {
        auto aj = metrics::aalen_johansen(data.records, data.n_event_types);
        py::dict out;
        out["times"] = aj.S.breakpoints;
        out["S"] = aj.S.values;
        py::list cifs;
        for (const auto& f : aj.F) cifs.append(f.values);
        out["F"] = cifs;
        return out;
      },
      py::arg("dataset"));
  m.def("rmft", &metrics::rmft, py::arg("cif_curve"), py::arg("horizon"),
        py::arg("bin_width") = 1.0);
  m.def(
      "event_time_percentiles",
      [](const Dataset& data, int k, const std::vector<double>& ps) {
        return metrics::event_time_percentiles(data.records, k, ps);
      },
      py::arg("dataset"), py::arg("event"), py::arg("percentiles"));

  m.def("latent_summary", &analysis::latent_summary, py::arg("model"),
        py::arg("dataset"), py::arg("event"), py::arg("horizon"));
  m.def(
      "kmeans",
      [](const std::vector<std::vector<double>>& rows, int k, uint64_t seed,
         int max_iter) {
        auto res = analysis::kmeans(rows, k, seed, max_iter);
        py::dict out;
        out["labels"] = res.labels;
        out["centroids"] = res.centroids;
        out["inertia_trace"] = res.inertia_trace;
        return out;
      },
      py::arg("rows"), py::arg("k"), py::arg("seed"),
      py::arg("max_iter") = 100);

  m.attr("__version__") = io::kVersion;
}
