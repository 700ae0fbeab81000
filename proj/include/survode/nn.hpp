#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "survode/autodiff.hpp"
#include "survode/rng.hpp"

namespace survode::nn {

using ad::Vec;

struct ParamTensor {
  std::string name;
  std::vector<size_t> shape;  // {n} or {rows, cols}
  Vec value;

  size_t size() const {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
  }
  size_t rows() const { return shape.at(0); }
  size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }
};

// Named parameter store. Order is fixed after construction; flatten/assign
// use that order, which keeps optimizer state and finite-difference probes
// aligned.
struct ModelParams {
  std::vector<ParamTensor> tensors;
  std::unordered_map<std::string, int> by_name;

  int add(const std::string& name, std::vector<size_t> shape) {
    if (by_name.count(name))
      throw ContractError("ModelParams: duplicate tensor " + name);
    ParamTensor t{name, std::move(shape), {}};
    t.value.assign(t.size(), 0.0);
    tensors.push_back(std::move(t));
    by_name[name] = static_cast<int>(tensors.size() - 1);
    return by_name[name];
  }

  ParamTensor& at(const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw ContractError("ModelParams: unknown tensor " + name);
    return tensors[it->second];
  }
  const ParamTensor& at(const std::string& name) const {
    return const_cast<ModelParams*>(this)->at(name);
  }

  size_t total_size() const {
    size_t n = 0;
    for (const auto& t : tensors) n += t.value.size();
    return n;
  }
  Vec flatten() const;
  void assign(const Vec& flat);
};

// Per-pass binding of every parameter tensor as a tape leaf.
struct BoundParams {
  ad::Tape* tape = nullptr;
  const ModelParams* params = nullptr;
  std::vector<ad::Var> vars;

  static BoundParams bind(ad::Tape& tape, const ModelParams& p);
  ad::Var operator()(const std::string& name) const;
  // Gradients in flatten() order; call after tape.backward().
  Vec collect_grads() const;
};

enum class Act { linear, tanh, relu };

// y = act(W x + b)
ad::Var dense(ad::Tape& t, ad::Var x, ad::Var w, size_t rows, size_t cols,
              ad::Var b, Act act);

struct GruVars {
  ad::Var wr, br;  // reset gate, acts on [x, h]
  ad::Var wu, bu;  // update gate, acts on [x, h]
  ad::Var wn, un, bn;
  size_t input_dim = 0, hidden_dim = 0;
};

// r = sigma(Wr [x,h] + br); u = sigma(Wu [x,h] + bu);
// n = tanh(Wn x + r .* (Un h) + bn); h' = (1-u) .* n + u .* h
ad::Var gru_cell(ad::Tape& t, ad::Var x, ad::Var h, const GruVars& g);

// KL[N(mu, diag sigma^2) || N(0, I)] = 0.5 sum(mu^2 + sigma^2 - 1 - 2 ln sigma)
ad::Var gaussian_kl(ad::Tape& t, ad::Var mu, ad::Var sigma);

// z = mu + sigma .* noise, noise drawn externally.
ad::Var reparam_sample(ad::Tape& t, ad::Var mu, ad::Var sigma, const Vec& noise);

// Glorot-uniform weight fill.
void init_glorot(ParamTensor& t, Rng& rng);

}  // namespace survode::nn
