#include "survode/decoder.hpp"

#include <cmath>
#include <string>

namespace survode {

void HazardGrid::validate() const {
  if (lambda.size() != b + 1)
    throw DimensionError("HazardGrid: expected b+1 hazard rows");
  for (const auto& row : lambda)
    if (row.size() != t_m)
      throw DimensionError("HazardGrid: expected t_m bins per row");
  for (size_t t = 0; t < t_m; ++t) {
    double total = 0.0;
    for (size_t k = 0; k <= b; ++k) {
      const double l = lambda[k][t];
      if (!(l > 0.0) || !(l < 1.0))
        throw NumericalError("HazardGrid: hazard outside (0,1) at bin " +
                             std::to_string(t + 1));
      total += l;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw NumericalError("HazardGrid: slice sum != 1 at bin " +
                           std::to_string(t + 1));
  }
}

std::vector<ad::Var> latent_trajectory(ad::Tape& tape,
                                       const nn::BoundParams& p,
                                       const ModelDims& dims, ad::Var z0,
                                       int t_m,
                                       const odeint::SolverSettings& settings) {
  if (t_m < 1) throw ContractError("latent_trajectory: t_m must be >= 1");
  ad::Var z0p = nn::dense(tape, z0, p("dec.z0proj.W"), dims.L, dims.L0,
                          p("dec.z0proj.b"), nn::Act::linear);
  auto field = [&](double, const odeint::AdState& s) {
    return odeint::AdState{&tape, dec_field(tape, p, dims, s.var)};
  };
  std::vector<double> eval_times(t_m + 1);
  for (int t = 0; t <= t_m; ++t) eval_times[t] = static_cast<double>(t);
  auto states = odeint::adaptive_solve(field, odeint::AdState{&tape, z0p}, 0.0,
                                       eval_times, settings);
  std::vector<ad::Var> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.var);
  return out;
}

ad::Var cause_embedding(ad::Tape& tape, const nn::BoundParams& p,
                        const ModelDims& dims, ad::Var z, int k) {
  if (k < 1 || static_cast<size_t>(k) > dims.b)
    throw ContractError("cause_embedding: event index out of range");
  const std::string base = "dec.cause" + std::to_string(k);
  ad::Var hid = nn::dense(tape, z, p(base + ".W1"), dims.cause_hidden, dims.L,
                          p(base + ".b1"), nn::Act::relu);
  return nn::dense(tape, hid, p(base + ".W2"), dims.cause_embed,
                   dims.cause_hidden, p(base + ".b2"), nn::Act::linear);
}

std::vector<ad::Var> hazards(ad::Tape& tape, const nn::BoundParams& p,
                             const ModelDims& dims,
                             const std::vector<ad::Var>& z) {
  if (z.size() < 2) throw ContractError("hazards: trajectory too short");
  std::vector<ad::Var> slices;
  slices.reserve(z.size() - 1);
  for (size_t t = 1; t < z.size(); ++t) {
    std::vector<ad::Var> embeds;
    embeds.reserve(dims.b);
    for (size_t k = 1; k <= dims.b; ++k)
      embeds.push_back(
          cause_embedding(tape, p, dims, z[t], static_cast<int>(k)));
    ad::Var logits =
        nn::dense(tape, tape.concat(embeds), p("dec.head.W"), dims.b + 1,
                  dims.b * dims.cause_embed, p("dec.head.b"), nn::Act::linear);
    slices.push_back(tape.softmax(logits));
  }
  return slices;
}

HazardGrid hazard_grid_values(const ad::Tape& tape,
                              const std::vector<ad::Var>& slices) {
  HazardGrid g;
  g.t_m = slices.size();
  g.b = slices.empty() ? 0 : slices[0].n - 1;
  g.lambda.assign(g.b + 1, std::vector<double>(g.t_m, 0.0));
  for (size_t t = 0; t < g.t_m; ++t) {
    const auto& v = tape.val(slices[t]);
    for (size_t k = 0; k <= g.b; ++k) g.lambda[k][t] = v[k];
  }
  return g;
}

std::vector<ad::Var> reconstruct(ad::Tape& tape, const nn::BoundParams& p,
                                 const ModelDims& dims,
                                 const std::vector<ad::Var>& z) {
  std::vector<ad::Var> out;
  out.reserve(z.size());
  for (const ad::Var& zt : z) {
    ad::Var hid = nn::dense(tape, zt, p("dec.data.W1"), dims.data_hidden,
                            dims.L, p("dec.data.b1"), nn::Act::relu);
    out.push_back(nn::dense(tape, hid, p("dec.data.W2"), dims.M,
                            dims.data_hidden, p("dec.data.b2"),
                            nn::Act::linear));
  }
  return out;
}

std::vector<double> event_free_survival(const HazardGrid& grid) {
  std::vector<double> S(grid.t_m + 1);
  S[0] = 1.0;
  for (size_t t = 1; t <= grid.t_m; ++t) {
    double cause_total = 0.0;
    for (size_t k = 1; k <= grid.b; ++k) cause_total += grid.lambda[k][t - 1];
    S[t] = S[t - 1] * (1.0 - cause_total);
  }
  return S;
}

std::vector<double> cif(const HazardGrid& grid, int k) {
  if (k < 1 || static_cast<size_t>(k) > grid.b)
    throw ContractError("cif: event index out of range");
  const auto S = event_free_survival(grid);
  std::vector<double> F(grid.t_m + 1, 0.0);
  for (size_t t = 1; t <= grid.t_m; ++t)
    F[t] = F[t - 1] + grid.lambda[k][t - 1] * S[t - 1];
  return F;
}

SurvivalCurves survival_curves(const HazardGrid& grid) {
  SurvivalCurves c;
  c.S = event_free_survival(grid);
  for (size_t k = 1; k <= grid.b; ++k)
    c.F.push_back(cif(grid, static_cast<int>(k)));
  return c;
}

}  // namespace survode
