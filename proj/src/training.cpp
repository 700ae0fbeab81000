#include "survode/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "survode/rng.hpp"

namespace survode {

namespace {
constexpr double kProbFloor = 1e-12;
constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
}  // namespace

void TrainConfig::validate() const {
  if (!(survival_loss_scale > 0.0))
    throw ValidationError("TrainConfig: survival_loss_scale must be > 0");
  if (!(learning_rate > 0.0))
    throw ValidationError("TrainConfig: learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("TrainConfig: batch_size < 1");
  if (max_epochs < 1) throw ValidationError("TrainConfig: max_epochs < 1");
  if (patience < 0) throw ValidationError("TrainConfig: patience < 0");
  if (t_m < 1) throw ValidationError("TrainConfig: t_m < 1");
  if (!(bin_width > 0.0)) throw ValidationError("TrainConfig: bin_width <= 0");
  if (kl_warmup_epochs < 0)
    throw ValidationError("TrainConfig: kl_warmup_epochs < 0");
  solver.validate();
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  for (const char* key : {"survival_loss_scale", "learning_rate", "batch_size",
                          "max_epochs", "patience", "t_m", "seed"}) {
    if (!j.contains(key))
      throw ValidationError(std::string("config: missing field '") + key +
                            "'");
  }
  c.survival_loss_scale = j.at("survival_loss_scale").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<size_t>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.t_m = j.at("t_m").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  c.bin_width = j.value("bin_width", 1.0);
  c.kl_warmup_epochs = j.value("kl_warmup_epochs", 0);
  auto& d = c.dims;
  d.L0 = j.value("latent_dim_l0", d.L0);
  d.L = j.value("latent_dim_l", d.L);
  d.H = j.value("hidden_dim_h", d.H);
  d.enc_field_hidden = j.value("enc_field_hidden", d.enc_field_hidden);
  d.dec_field_hidden = j.value("dec_field_hidden", d.dec_field_hidden);
  d.cause_hidden = j.value("cause_hidden", d.cause_hidden);
  d.cause_embed = j.value("cause_embed", d.cause_embed);
  d.data_hidden = j.value("data_hidden", d.data_hidden);
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    c.solver.rtol = s.value("rtol", c.solver.rtol);
    c.solver.atol = s.value("atol", c.solver.atol);
    c.solver.h_init = s.value("h_init", c.solver.h_init);
    c.solver.h_min = s.value("h_min", c.solver.h_min);
    c.solver.h_max = s.value("h_max", c.solver.h_max);
    c.solver.max_steps = s.value("max_steps", c.solver.max_steps);
  }
  c.validate();
  return c;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["survival_loss_scale"] = c.survival_loss_scale;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["t_m"] = c.t_m;
  j["seed"] = c.seed;
  j["bin_width"] = c.bin_width;
  j["kl_warmup_epochs"] = c.kl_warmup_epochs;
  j["latent_dim_l0"] = c.dims.L0;
  j["latent_dim_l"] = c.dims.L;
  j["hidden_dim_h"] = c.dims.H;
  j["enc_field_hidden"] = c.dims.enc_field_hidden;
  j["dec_field_hidden"] = c.dims.dec_field_hidden;
  j["cause_hidden"] = c.dims.cause_hidden;
  j["cause_embed"] = c.dims.cause_embed;
  j["data_hidden"] = c.dims.data_hidden;
  j["solver"] = {{"rtol", c.solver.rtol},     {"atol", c.solver.atol},
                 {"h_init", c.solver.h_init}, {"h_min", c.solver.h_min},
                 {"max_steps", c.solver.max_steps}};
  // JSON has no representation for infinity (the unbounded default)
  if (std::isfinite(c.solver.h_max)) j["solver"]["h_max"] = c.solver.h_max;
  return j;
}

namespace {

// Effective observed time after truncation to the horizon.
int effective_time(const SurvivalRecord& r, size_t t_m, bool* was_truncated) {
  if (r.observed_time > static_cast<int>(t_m)) {
    *was_truncated = true;
    return static_cast<int>(t_m);
  }
  *was_truncated = false;
  return r.observed_time;
}

}  // namespace

double survival_nll(const HazardGrid& grid, const SurvivalRecord& record,
                    int* truncated) {
  bool trunc = false;
  const int t = effective_time(record, grid.t_m, &trunc);
  const bool delta = trunc ? false : record.event_indicator;
  if (trunc && truncated) ++*truncated;

  const auto S = event_free_survival(grid);
  auto safe_log = [](double p) { return std::log(std::max(p, kProbFloor)); };
  if (delta) {
    const int k = *record.event_type;
    return -safe_log(grid.lambda[k][t - 1]) - safe_log(S[t - 1]);
  }
  return -safe_log(S[t]);
}

ad::Var survival_nll_var(ad::Tape& tape, const std::vector<ad::Var>& slices,
                         const SurvivalRecord& record, int* truncated) {
  bool trunc = false;
  const int t = effective_time(record, slices.size(), &trunc);
  const bool delta = trunc ? false : record.event_indicator;
  if (trunc && truncated) ++*truncated;

  // log S(t) accumulated from the no-event probabilities
  std::vector<std::pair<double, ad::Var>> terms;
  const int s_upto = delta ? t - 1 : t;
  for (int tau = 1; tau <= s_upto; ++tau)
    terms.emplace_back(
        -1.0, tape.log_clamped(tape.slice(slices[tau - 1], 0, 1), kProbFloor));
  if (delta) {
    const int k = *record.event_type;
    terms.emplace_back(
        -1.0, tape.log_clamped(tape.slice(slices[t - 1], k, 1), kProbFloor));
  }
  if (terms.empty()) return tape.zeros(1);
  return tape.lincomb(terms);
}

ad::Var elbo_loss(ad::Tape& tape, const EncodedBatch& batch,
                  const EncodedPosterior& post,
                  const std::vector<std::vector<ad::Var>>& xhat,
                  double bin_width, double kl_weight, double* kl_out,
                  double* recon_out) {
  if (post.mu.size() != batch.n || xhat.size() != batch.n)
    throw DimensionError("elbo_loss: batch size mismatch");

  std::vector<std::pair<double, ad::Var>> terms;
  double kl_total = 0.0, recon_total = 0.0;
  for (size_t i = 0; i < batch.n; ++i) {
    ad::Var kl = nn::gaussian_kl(tape, post.mu[i], post.sigma[i]);
    kl_total += tape.val(kl)[0];
    if (kl_weight != 0.0) terms.emplace_back(kl_weight, kl);

    const size_t n_bins = xhat[i].size();
    size_t n_entries = 0;
    for (size_t g = 0; g < batch.T; ++g) {
      if (!batch.any_observed(i, g)) continue;
      size_t bin = static_cast<size_t>(
          std::floor(batch.grid[g] / bin_width));
      bin = std::min(bin, n_bins - 1);
      ad::Vec neg_x(batch.M), mrow(batch.M);
      for (size_t f = 0; f < batch.M; ++f) {
        neg_x[f] = -batch.x[batch.at(i, g, f)];
        mrow[f] = batch.m[batch.at(i, g, f)];
        if (mrow[f] != 0.0) ++n_entries;
      }
      ad::Var resid =
          tape.cmul(tape.cadd(xhat[i][bin], std::move(neg_x)), mrow);
      ad::Var sq = tape.dot(resid, resid);
      recon_total += 0.5 * tape.val(sq)[0];
      terms.emplace_back(0.5, sq);
    }
    recon_total += 0.5 * kLog2Pi * n_entries;
    if (n_entries > 0)
      terms.emplace_back(
          1.0, tape.constant({0.5 * kLog2Pi * static_cast<double>(n_entries)}));
  }
  if (kl_out) *kl_out = kl_total;
  if (recon_out) *recon_out = recon_total;
  if (terms.empty()) return tape.zeros(1);
  return tape.lincomb(terms);
}

ad::Var total_loss(ad::Tape& tape, const nn::BoundParams& p,
                   const EncodedBatch& batch,
                   const std::vector<SurvivalRecord>& records,
                   const TrainConfig& cfg,
                   const std::vector<ad::Vec>& noise, double kl_weight,
                   LossBreakdown* breakdown) {
  if (records.size() != batch.n || noise.size() != batch.n)
    throw DimensionError("total_loss: batch size mismatch");

  EncodedPosterior post = encode(tape, p, batch, cfg.dims, cfg.solver);
  std::vector<std::vector<ad::Var>> xhat(batch.n);
  std::vector<ad::Var> surv_terms;
  int truncated = 0;
  double surv_total = 0.0;
  for (size_t i = 0; i < batch.n; ++i) {
    ad::Var z0 = nn::reparam_sample(tape, post.mu[i], post.sigma[i], noise[i]);
    auto traj = latent_trajectory(tape, p, cfg.dims, z0, cfg.t_m, cfg.solver);
    auto slices = hazards(tape, p, cfg.dims, traj);
    xhat[i] = reconstruct(tape, p, cfg.dims, traj);
    ad::Var nll = survival_nll_var(tape, slices, records[i], &truncated);
    surv_total += tape.val(nll)[0];
    surv_terms.push_back(nll);
  }

  double kl_val = 0.0, recon_val = 0.0;
  ad::Var neg_elbo = elbo_loss(tape, batch, post, xhat, cfg.bin_width,
                               kl_weight, &kl_val, &recon_val);

  std::vector<std::pair<double, ad::Var>> total_terms{{1.0, neg_elbo}};
  const double inv_n = 1.0 / static_cast<double>(batch.n);
  for (const ad::Var& s : surv_terms)
    total_terms.emplace_back(cfg.survival_loss_scale * inv_n, s);
  ad::Var total = tape.lincomb(total_terms);

  if (breakdown) {
    breakdown->total = tape.val(total)[0];
    breakdown->neg_elbo = tape.val(neg_elbo)[0];
    breakdown->kl = kl_val;
    breakdown->recon_nll = recon_val;
    breakdown->surv_nll = surv_total * inv_n;
    breakdown->truncated = truncated;
  }
  return total;
}

Adam::Adam(size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0),
      v_(n, 0.0) {}

void Adam::step(ad::Vec& params, const ad::Vec& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw DimensionError("Adam: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
}

namespace {

struct EpochEval {
  double loss = 0.0;
  double kl = 0.0, recon = 0.0, surv = 0.0;
};

EpochEval evaluate_mean_loss(const Dataset& data, const Model& model,
                             double kl_weight) {
  EpochEval ev;
  const auto& cfg = model.config;
  size_t n_batches = 0;
  for (size_t start = 0; start < data.size(); start += cfg.batch_size) {
    const size_t end = std::min(start + cfg.batch_size, data.size());
    std::vector<SurvivalRecord> recs(data.records.begin() + start,
                                     data.records.begin() + end);
    EncodedBatch batch = build_batch(recs);
    std::vector<ad::Vec> noise(recs.size(), ad::Vec(cfg.dims.L0, 0.0));
    ad::Tape tape;
    auto bound = nn::BoundParams::bind(tape, model.params);
    LossBreakdown bd;
    total_loss(tape, bound, batch, recs, cfg, noise, kl_weight, &bd);
    ev.loss += bd.total;
    ev.kl += bd.kl;
    ev.recon += bd.recon_nll;
    ev.surv += bd.surv_nll;
    ++n_batches;
  }
  if (n_batches > 0) {
    ev.loss /= n_batches;
    ev.kl /= n_batches;
    ev.recon /= n_batches;
    ev.surv /= n_batches;
  }
  return ev;
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& cfg_in) {
  if (train_set.records.empty() || valid_set.records.empty())
    throw ValidationError("train: datasets must be nonempty");
  TrainConfig cfg = cfg_in;
  cfg.dims.M = train_set.n_features();
  cfg.dims.b = static_cast<size_t>(train_set.n_event_types);
  cfg.validate();

  TrainResult res;
  res.model.dims = cfg.dims;
  res.model.config = cfg;
  res.model.params = init_params(cfg.dims, cfg.seed);

  nn::ModelParams& params = res.model.params;
  Adam opt(params.total_size(), cfg.learning_rate);
  Rng rng(cfg.seed ^ 0x7261696eULL);

  nn::ModelParams best_params = params;
  double best_valid = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_since_best = 0;

  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double kl_weight =
        cfg.kl_warmup_epochs == 0
            ? 1.0
            : std::min(1.0, static_cast<double>(epoch) /
                                static_cast<double>(cfg.kl_warmup_epochs));
    rng.shuffle(order);

    double train_loss = 0.0, kl_sum = 0.0, recon_sum = 0.0, surv_sum = 0.0;
    size_t n_batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(start + cfg.batch_size, order.size());
      std::vector<SurvivalRecord> recs;
      recs.reserve(end - start);
      for (size_t i = start; i < end; ++i)
        recs.push_back(train_set.records[order[i]]);
      EncodedBatch batch = build_batch(recs);
      std::vector<ad::Vec> noise(recs.size());
      for (auto& nv : noise) {
        nv.resize(cfg.dims.L0);
        for (double& x : nv) x = rng.normal();
      }

      ad::Tape tape;
      auto bound = nn::BoundParams::bind(tape, params);
      LossBreakdown bd;
      ad::Var loss =
          total_loss(tape, bound, batch, recs, cfg, noise, kl_weight, &bd);
      if (!std::isfinite(bd.total))
        throw NumericalError("train: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(n_batches));
      tape.backward(loss);
      ad::Vec flat = params.flatten();
      opt.step(flat, bound.collect_grads());
      params.assign(flat);

      train_loss += bd.total;
      kl_sum += bd.kl;
      recon_sum += bd.recon_nll;
      surv_sum += bd.surv_nll;
      ++n_batches;
    }
    train_loss /= n_batches;

    const EpochEval valid = evaluate_mean_loss(valid_set, res.model, 1.0);
    if (!std::isfinite(valid.loss))
      throw NumericalError("train: non-finite validation loss at epoch " +
                           std::to_string(epoch));

    res.history.push_back(HistoryRow{epoch, train_loss, valid.loss,
                                     kl_sum / n_batches, recon_sum / n_batches,
                                     surv_sum / n_batches});

    if (valid.loss < best_valid) {
      best_valid = valid.loss;
      best_params = params;
      best_epoch = epoch;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (epochs_since_best >= cfg.patience) break;
  }

  res.model.params = std::move(best_params);
  res.best_epoch = best_epoch;
  return res;
}

SurvivalCurves predict_one(const Model& model, const SurvivalRecord& record,
                           int t_m) {
  EncodedBatch batch = build_batch({record});
  ad::Tape tape;
  auto bound = nn::BoundParams::bind(tape, model.params);
  EncodedPosterior post =
      encode(tape, bound, batch, model.dims, model.config.solver);
  // posterior mean (noise = 0)
  auto traj = latent_trajectory(tape, bound, model.dims, post.mu[0], t_m,
                                model.config.solver);
  auto slices = hazards(tape, bound, model.dims, traj);
  HazardGrid grid = hazard_grid_values(tape, slices);
  return survival_curves(grid);
}

std::vector<SurvivalCurves> predict(const Model& model, const Dataset& data,
                                    int t_m) {
  if (!data.records.empty() && data.n_features() != model.dims.M)
    throw DimensionError("predict: dataset feature dimension " +
                         std::to_string(data.n_features()) +
                         " != model M " + std::to_string(model.dims.M));
  std::vector<SurvivalCurves> out;
  out.reserve(data.size());
  for (const auto& rec : data.records)
    out.push_back(predict_one(model, rec, t_m));
  return out;
}

// --- checkpoint ------------------------------------------------------------

namespace {
constexpr char kMagic[] = "SVODECKPT1\n";
}

void save_checkpoint(const Model& model, const std::string& path) {
  nlohmann::json header;
  header["format"] = "survode-checkpoint-1";
  header["config"] = train_config_to_json(model.config);
  header["m"] = model.dims.M;
  header["b"] = model.dims.b;
  nlohmann::json tensors = nlohmann::json::array();
  size_t offset = 0;
  for (const auto& t : model.params.tensors) {
    tensors.push_back(
        {{"name", t.name}, {"shape", t.shape}, {"offset", offset}});
    offset += t.value.size();
  }
  header["tensors"] = tensors;
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  out.write(kMagic, sizeof(kMagic) - 1);
  const uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& t : model.params.tensors)
    out.write(reinterpret_cast<const char*>(t.value.data()),
              static_cast<std::streamsize>(t.value.size() * sizeof(double)));
  if (!out) throw ValidationError("write failed for " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw ParseError(path + ": not a checkpoint file");
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw ParseError(path + ": truncated header");
  nlohmann::json header = nlohmann::json::parse(hs);

  Model model;
  model.config = train_config_from_json(header.at("config"));
  model.dims = model.config.dims;
  model.dims.M = header.at("m").get<size_t>();
  model.dims.b = header.at("b").get<size_t>();
  model.config.dims = model.dims;

  for (const auto& tj : header.at("tensors")) {
    model.params.add(tj.at("name").get<std::string>(),
                     tj.at("shape").get<std::vector<size_t>>());
  }
  for (auto& t : model.params.tensors) {
    in.read(reinterpret_cast<char*>(t.value.data()),
            static_cast<std::streamsize>(t.value.size() * sizeof(double)));
  }
  if (!in) throw ParseError(path + ": truncated tensor data");
  return model;
}

void write_history_csv(const std::vector<HistoryRow>& history,
                       const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  out << "epoch,train_loss,valid_loss,kl,recon,surv_nll\n";
  out.precision(17);
  for (const auto& h : history)
    out << h.epoch << ',' << h.train_loss << ',' << h.valid_loss << ','
        << h.kl << ',' << h.recon << ',' << h.surv_nll << '\n';
}

}  // namespace survode
