#pragma once

#include <vector>

#include "survode/datamodel.hpp"
#include "survode/model.hpp"

namespace survode {

// Approximate posterior q(z0 | X) per subject, as plain values.
struct PosteriorParams {
  std::vector<std::vector<double>> mu;     // [subject][L0]
  std::vector<std::vector<double>> sigma;  // [subject][L0], > 0
};

// Same, as tape variables so gradients can flow.
struct EncodedPosterior {
  std::vector<ad::Var> mu;
  std::vector<ad::Var> sigma;
};

// ODE-RNN encoder. Runs backwards in time per subject: h starts at zero at
// the subject's latest grid time, evolves under -f_gamma between grid times,
// and takes a GRU update at grid times where the subject has at least one
// observed feature. The posterior head reads h at time 0.
EncodedPosterior encode(ad::Tape& tape, const nn::BoundParams& p,
                        const EncodedBatch& batch, const ModelDims& dims,
                        const odeint::SolverSettings& settings);

PosteriorParams posterior_values(const ad::Tape& tape,
                                 const EncodedPosterior& enc);

}  // namespace survode
