#pragma once

#include <cstdint>

#include "survode/nn.hpp"
#include "survode/odeint.hpp"

namespace survode {

// Network dimensions. Weight groups: enc.field (gamma), enc.gru (theta),
// enc.post (upsilon), dec.field + dec.z0proj (phi), dec.cause*/dec.head
// (beta), dec.data (zeta).
struct ModelDims {
  size_t M = 3;        // feature count
  size_t b = 1;        // event count
  size_t H = 20;       // GRU hidden size
  size_t L0 = 6;       // posterior latent size
  size_t L = 6;        // trajectory latent size
  size_t enc_field_hidden = 20;
  size_t dec_field_hidden = 20;
  size_t cause_hidden = 10;
  size_t cause_embed = 4;
  size_t data_hidden = 16;

  size_t gru_input() const { return 3 * M; }  // [x, m, delta]
};

// Allocates and initializes every parameter tensor: Glorot-uniform weights,
// zero biases except the GRU update-gate bias at +1, identity-like z0
// projection.
nn::ModelParams init_params(const ModelDims& dims, uint64_t seed);

nn::GruVars gru_vars(const nn::BoundParams& p, const ModelDims& dims);

// Encoder hidden-state dynamics f_gamma (tanh MLP, one hidden layer).
ad::Var enc_field(ad::Tape& t, const nn::BoundParams& p, const ModelDims& d,
                  ad::Var h);
// Decoder latent dynamics g_phi.
ad::Var dec_field(ad::Tape& t, const nn::BoundParams& p, const ModelDims& d,
                  ad::Var z);

constexpr double kSigmaFloor = 1e-6;

}  // namespace survode
