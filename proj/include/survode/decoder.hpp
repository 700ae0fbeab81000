#pragma once

#include <vector>

#include "survode/model.hpp"

namespace survode {

// Cause-specific discrete hazards. lambda[k][t-1] is the hazard for bin t,
// with k = 0 the "no event" probability and k = 1..b the cause hazards.
// Every time-slice is a softmax output and sums to 1.
struct HazardGrid {
  size_t b = 0;
  size_t t_m = 0;
  std::vector<std::vector<double>> lambda;  // (b+1) x t_m

  void validate() const;
};

struct SurvivalCurves {
  std::vector<double> S;                 // t = 0..t_m, S(0) = 1
  std::vector<std::vector<double>> F;    // [k-1][t], F_k(0) = 0
};

// Latent trajectory z(0..t_m): z0 (dim L0) is projected to the trajectory
// space and integrated under g_phi, evaluated at integer bins.
std::vector<ad::Var> latent_trajectory(ad::Tape& tape,
                                       const nn::BoundParams& p,
                                       const ModelDims& dims, ad::Var z0,
                                       int t_m,
                                       const odeint::SolverSettings& settings);

// Event-k decoder module embedding of one latent state (the "latent state
// just before the fully-connected layer").
ad::Var cause_embedding(ad::Tape& tape, const nn::BoundParams& p,
                        const ModelDims& dims, ad::Var z, int k);

// Per-bin hazard slices for bins 1..t_m; slice t-1 is the (b+1)-softmax over
// z(t) (left-aligned convention).
std::vector<ad::Var> hazards(ad::Tape& tape, const nn::BoundParams& p,
                             const ModelDims& dims,
                             const std::vector<ad::Var>& z);

HazardGrid hazard_grid_values(const ad::Tape& tape,
                              const std::vector<ad::Var>& slices);

// Data decoder r_zeta: per-bin reconstructed feature means.
std::vector<ad::Var> reconstruct(ad::Tape& tape, const nn::BoundParams& p,
                                 const ModelDims& dims,
                                 const std::vector<ad::Var>& z);

// S(t) = prod_{tau<=t} (1 - sum_k lambda_k(tau)), S(0) = 1.
std::vector<double> event_free_survival(const HazardGrid& grid);
// F_k(t) = sum_{tau<=t} lambda_k(tau) S(tau-1), F_k(0) = 0.
std::vector<double> cif(const HazardGrid& grid, int k);
SurvivalCurves survival_curves(const HazardGrid& grid);

}  // namespace survode
