#include "survode/nn.hpp"

#include <cmath>

namespace survode::nn {

Vec ModelParams::flatten() const {
  Vec out;
  out.reserve(total_size());
  for (const auto& t : tensors)
    out.insert(out.end(), t.value.begin(), t.value.end());
  return out;
}

void ModelParams::assign(const Vec& flat) {
  if (flat.size() != total_size())
    throw DimensionError("ModelParams::assign: size mismatch");
  size_t off = 0;
  for (auto& t : tensors) {
    std::copy(flat.begin() + off, flat.begin() + off + t.value.size(),
              t.value.begin());
    off += t.value.size();
  }
}

BoundParams BoundParams::bind(ad::Tape& tape, const ModelParams& p) {
  BoundParams b;
  b.tape = &tape;
  b.params = &p;
  b.vars.reserve(p.tensors.size());
  for (const auto& t : p.tensors) b.vars.push_back(tape.leaf(t.value));
  return b;
}

ad::Var BoundParams::operator()(const std::string& name) const {
  auto it = params->by_name.find(name);
  if (it == params->by_name.end())
    throw ContractError("BoundParams: unknown tensor " + name);
  return vars[it->second];
}

Vec BoundParams::collect_grads() const {
  Vec out;
  out.reserve(params->total_size());
  for (size_t i = 0; i < vars.size(); ++i) {
    const Vec& g = tape->grad(vars[i]);
    if (g.empty()) {
      out.insert(out.end(), params->tensors[i].value.size(), 0.0);
    } else {
      out.insert(out.end(), g.begin(), g.end());
    }
  }
  return out;
}

ad::Var dense(ad::Tape& t, ad::Var x, ad::Var w, size_t rows, size_t cols,
              ad::Var b, Act act) {
  ad::Var y = t.add(t.matvec(w, rows, cols, x), b);
  switch (act) {
    case Act::linear:
      return y;
    case Act::tanh:
      return t.tanh_(y);
    case Act::relu:
      return t.relu(y);
  }
  throw ContractError("dense: unknown activation");
}

ad::Var gru_cell(ad::Tape& t, ad::Var x, ad::Var h, const GruVars& g) {
  const size_t H = g.hidden_dim;
  if (x.n != g.input_dim || h.n != H)
    throw DimensionError("gru_cell: input/hidden size mismatch");
  ad::Var xh = t.concat({x, h});
  ad::Var r = t.sigmoid(t.add(t.matvec(g.wr, H, x.n + H, xh), g.br));
  ad::Var u = t.sigmoid(t.add(t.matvec(g.wu, H, x.n + H, xh), g.bu));
  ad::Var n = t.tanh_(t.add(
      t.add(t.matvec(g.wn, H, x.n, x), t.mul(r, t.matvec(g.un, H, H, h))),
      g.bn));
  ad::Var one_minus_u = t.sub(t.constant(Vec(H, 1.0)), u);
  return t.add(t.mul(one_minus_u, n), t.mul(u, h));
}

ad::Var gaussian_kl(ad::Tape& t, ad::Var mu, ad::Var sigma) {
  if (mu.n != sigma.n) throw DimensionError("gaussian_kl: size mismatch");
  for (double s : t.val(sigma))
    if (!(s > 0.0))
      throw NumericalError("gaussian_kl: sigma must be positive");
  ad::Var terms = t.sub(t.add(t.mul(mu, mu), t.mul(sigma, sigma)),
                        t.cadd(t.scale(t.log_(sigma), 2.0), Vec(mu.n, 1.0)));
  return t.scale(t.sum(terms), 0.5);
}

ad::Var reparam_sample(ad::Tape& t, ad::Var mu, ad::Var sigma,
                       const Vec& noise) {
  if (noise.size() != mu.n)
    throw DimensionError("reparam_sample: noise size mismatch");
  return t.add(mu, t.cmul(sigma, noise));
}

void init_glorot(ParamTensor& t, Rng& rng) {
  const double fan_in = static_cast<double>(t.cols());
  const double fan_out = static_cast<double>(t.rows());
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& w : t.value) w = rng.uniform(-bound, bound);
}

}  // namespace survode::nn
