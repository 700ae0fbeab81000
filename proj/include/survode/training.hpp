#pragma once

#include <string>
#include <vector>

#include "survode/datamodel.hpp"
#include "survode/decoder.hpp"
#include "survode/encoder.hpp"

#include "json.hpp"

namespace survode {

struct TrainConfig {
  ModelDims dims;  // M and b are filled from the dataset at train time
  double survival_loss_scale = 100.0;
  double learning_rate = 1e-2;
  size_t batch_size = 50;
  int max_epochs = 100;
  int patience = 10;
  int t_m = 10;
  double bin_width = 1.0;
  int kl_warmup_epochs = 0;
  uint64_t seed = 0;
  odeint::SolverSettings solver;

  void validate() const;
};

// Strict parse: the core keys must be present; dims and solver keys default.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

// Negative log survival likelihood of one record under a hazard grid.
// delta=1: -log lambda_k(t) - log S(t-1); delta=0: -log S(t). Probabilities
// are clamped to >= 1e-12 before the log. A record with observed_time > t_m
// is truncated to censored-at-t_m and counted via *truncated.
double survival_nll(const HazardGrid& grid, const SurvivalRecord& record,
                    int* truncated = nullptr);
ad::Var survival_nll_var(ad::Tape& tape, const std::vector<ad::Var>& slices,
                         const SurvivalRecord& record, int* truncated = nullptr);

// Negative ELBO: unit-variance Gaussian reconstruction term over observed
// entries (observation times mapped to bins by floor(tau/bin_width)) plus
// kl_weight * KL(q(z0|X) || N(0,I)), summed over the batch.
ad::Var elbo_loss(ad::Tape& tape, const EncodedBatch& batch,
                  const EncodedPosterior& post,
                  const std::vector<std::vector<ad::Var>>& xhat,
                  double bin_width, double kl_weight, double* kl_out = nullptr,
                  double* recon_out = nullptr);

struct LossBreakdown {
  double total = 0.0;
  double neg_elbo = 0.0;
  double kl = 0.0;
  double recon_nll = 0.0;
  double surv_nll = 0.0;  // mean over batch
  int truncated = 0;
};

// Full forward pass and loss for one batch:
// negative ELBO + survival_loss_scale * mean survival NLL.
// noise holds one externally drawn standard-normal vector per subject
// (all-zero for posterior-mean evaluation).
ad::Var total_loss(ad::Tape& tape, const nn::BoundParams& p,
                   const EncodedBatch& batch,
                   const std::vector<SurvivalRecord>& records,
                   const TrainConfig& cfg,
                   const std::vector<ad::Vec>& noise, double kl_weight,
                   LossBreakdown* breakdown = nullptr);

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double kl = 0.0;
  double recon = 0.0;
  double surv_nll = 0.0;
};

struct Model {
  ModelDims dims;
  nn::ModelParams params;
  TrainConfig config;
};

struct TrainResult {
  Model model;
  std::vector<HistoryRow> history;
  int best_epoch = 0;
};

// Adam optimizer over a flat parameter vector.
class Adam {
 public:
  Adam(size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(ad::Vec& params, const ad::Vec& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  ad::Vec m_, v_;
  long t_ = 0;
};

// Minibatch Adam with linear KL warmup and early stopping on validation loss
// evaluated at the posterior mean; returns the best-validation checkpoint.
TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& cfg);

// Posterior-mean inference: encode, z0 = mu, trajectory, hazards, curves.
std::vector<SurvivalCurves> predict(const Model& model, const Dataset& data,
                                    int t_m);
SurvivalCurves predict_one(const Model& model, const SurvivalRecord& record,
                           int t_m);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

void write_history_csv(const std::vector<HistoryRow>& history,
                       const std::string& path);

}  // namespace survode
