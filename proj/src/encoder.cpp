#include "survode/encoder.hpp"

namespace survode {

EncodedPosterior encode(ad::Tape& tape, const nn::BoundParams& p,
                        const EncodedBatch& batch, const ModelDims& dims,
                        const odeint::SolverSettings& settings) {
  if (batch.n == 0) throw ContractError("encode: empty batch");
  if (batch.M != dims.M)
    throw DimensionError("encode: batch feature dim " +
                         std::to_string(batch.M) + " != model M " +
                         std::to_string(dims.M));

  const nn::GruVars gru = gru_vars(p, dims);
  // reverse-time evolution as a forward solve of ds h = -f_gamma(h)
  auto rev_field = [&](double, const odeint::AdState& s) {
    return odeint::AdState{&tape, tape.neg(enc_field(tape, p, dims, s.var))};
  };
  auto evolve = [&](ad::Var h, double span) {
    if (span <= 0.0) return h;
    auto states = odeint::adaptive_solve(
        rev_field, odeint::AdState{&tape, h}, 0.0, {span}, settings);
    return states.back().var;
  };

  EncodedPosterior out;
  out.mu.reserve(batch.n);
  out.sigma.reserve(batch.n);
  for (size_t i = 0; i < batch.n; ++i) {
    const size_t latest = batch.per_subject_latest[i];
    ad::Var h = tape.zeros(dims.H);
    for (size_t g = latest + 1; g-- > 0;) {
      if (g < latest) h = evolve(h, batch.grid[g + 1] - batch.grid[g]);
      if (batch.any_observed(i, g)) {
        ad::Vec input(3 * batch.M);
        for (size_t f = 0; f < batch.M; ++f) {
          input[f] = batch.x[batch.at(i, g, f)];
          input[batch.M + f] = batch.m[batch.at(i, g, f)];
          input[2 * batch.M + f] = batch.delta[batch.at(i, g, f)];
        }
        h = nn::gru_cell(tape, tape.constant(std::move(input)), h, gru);
      }
    }
    h = evolve(h, batch.grid.front());  // down to absolute time 0

    ad::Var head = nn::dense(tape, h, p("enc.post.W"), 2 * dims.L0, dims.H,
                             p("enc.post.b"), nn::Act::linear);
    out.mu.push_back(tape.slice(head, 0, dims.L0));
    out.sigma.push_back(tape.shift(
        tape.softplus(tape.slice(head, dims.L0, dims.L0)), kSigmaFloor));
  }
  return out;
}

PosteriorParams posterior_values(const ad::Tape& tape,
                                 const EncodedPosterior& enc) {
  PosteriorParams out;
  for (size_t i = 0; i < enc.mu.size(); ++i) {
    out.mu.push_back(tape.val(enc.mu[i]));
    out.sigma.push_back(tape.val(enc.sigma[i]));
  }
  return out;
}

}  // namespace survode
