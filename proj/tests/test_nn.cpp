#include <cmath>
#include <vector>

#include "doctest.h"
#include "survode/model.hpp"
#include "survode/nn.hpp"

using namespace survode;
using ad::Tape;
using ad::Var;
using ad::Vec;

TEST_CASE("dense layer closed forms") {
  Tape t;
  SUBCASE("identity weights, linear activation") {
    Var w = t.leaf({1, 0, 0, 1});
    Var b = t.leaf({0, 0});
    Var x = t.leaf({0.3, -0.8});
    CHECK(t.val(nn::dense(t, x, w, 2, 2, b, nn::Act::linear)) ==
          Vec{0.3, -0.8});
  }
  SUBCASE("zero input, tanh activation gives tanh(bias)") {
    Var w = t.leaf({0.5, -0.5});
    Var b = t.leaf({0.7});
    Var x = t.leaf({0.0, 0.0});
    CHECK(t.val(nn::dense(t, x, w, 1, 2, b, nn::Act::tanh))[0] ==
          doctest::Approx(std::tanh(0.7)).epsilon(1e-15));
  }
  SUBCASE("hand matrix multiply with relu") {
    Var w = t.leaf({1, 2, 3, 4});
    Var b = t.leaf({0, 0});
    Var x = t.leaf({1, 1});
    CHECK(t.val(nn::dense(t, x, w, 2, 2, b, nn::Act::relu)) == Vec{3.0, 7.0});
  }
}

namespace {

nn::GruVars zero_gru(Tape& t, size_t in, size_t hid) {
  nn::GruVars g;
  g.wr = t.zeros(hid * (in + hid));
  g.br = t.zeros(hid);
  g.wu = t.zeros(hid * (in + hid));
  g.bu = t.zeros(hid);
  g.wn = t.zeros(hid * in);
  g.un = t.zeros(hid * hid);
  g.bn = t.zeros(hid);
  g.input_dim = in;
  g.hidden_dim = hid;
  return g;
}

}  // namespace

TEST_CASE("gru_cell closed forms") {
  SUBCASE("all-zero weights map (0, 0) to 0") {
    Tape t;
    auto g = zero_gru(t, 2, 3);
    Var h = nn::gru_cell(t, t.zeros(2), t.zeros(3), g);
    CHECK(t.val(h) == Vec{0.0, 0.0, 0.0});
  }
  SUBCASE("all-zero weights halve the hidden state") {
    // u = sigma(0) = 0.5, n = tanh(0) = 0, so h' = 0.5 h.
    Tape t;
    auto g = zero_gru(t, 2, 3);
    Var h = nn::gru_cell(t, t.zeros(2), t.leaf({1.0, -2.0, 4.0}), g);
    CHECK(t.val(h)[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.val(h)[1] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(t.val(h)[2] == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("gradient of |h'|^2 w.r.t. all weights passes finite differences") {
    constexpr size_t in = 2, hid = 2;
    // one flat parameter vector sliced into the GRU tensors
    const size_t sizes[] = {hid * (in + hid), hid, hid * (in + hid), hid,
                            hid * in,         hid * hid, hid};
    size_t total = 0;
    for (size_t s : sizes) total += s;
    Rng rng(11);
    Vec theta(total);
    for (auto& v : theta) v = 0.4 * rng.normal();

    auto build = [&](Tape& t, const Vec& p) {
      Var flat = t.leaf(p);
      nn::GruVars g;
      size_t off = 0;
      auto next = [&](size_t n) {
        Var v = t.slice(flat, off, n);
        off += n;
        return v;
      };
      g.wr = next(sizes[0]);
      g.br = next(sizes[1]);
      g.wu = next(sizes[2]);
      g.bu = next(sizes[3]);
      g.wn = next(sizes[4]);
      g.un = next(sizes[5]);
      g.bn = next(sizes[6]);
      g.input_dim = in;
      g.hidden_dim = hid;
      Var h = nn::gru_cell(t, t.constant({0.3, -0.9}),
                           t.constant({0.5, 1.1}), g);
      Var loss = t.dot(h, h);
      return std::make_pair(flat, loss);
    };

    Tape t;
    auto [flat, loss] = build(t, theta);
    t.backward(loss);
    const Vec grad = t.grad(flat);
    const double eps = 1e-4;
    for (size_t i = 0; i < total; ++i) {
      Vec tp = theta, tm = theta;
      tp[i] += eps;
      tm[i] -= eps;
      Tape a, b;
      const double fp = a.val(build(a, tp).second)[0];
      const double fm = b.val(build(b, tm).second)[0];
      const double fd = (fp - fm) / (2 * eps);
      const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
      CHECK(std::abs(grad[i] - fd) / denom <= 1e-4);
    }
  }
}

TEST_CASE("gaussian_kl closed forms") {
  Tape t;
  auto kl = [&](Vec mu, Vec sigma) {
    return t.val(nn::gaussian_kl(t, t.leaf(std::move(mu)),
                                 t.leaf(std::move(sigma))))[0];
  };
  CHECK(kl({0.0}, {1.0}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(kl({1.0}, {1.0}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(kl({0.0}, {2.0}) ==
        doctest::Approx(0.5 * (4.0 - 1.0 - 2.0 * std::log(2.0)))
            .epsilon(1e-12));
  SUBCASE("nonnegative on random inputs") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      Vec mu{rng.normal(), rng.normal()};
      Vec sigma{std::exp(0.5 * rng.normal()), std::exp(0.5 * rng.normal())};
      CHECK(kl(mu, sigma) >= -1e-12);
    }
  }
}

TEST_CASE("reparam_sample") {
  Tape t;
  Var mu = t.leaf({0.4, -1.2});
  Var sigma = t.leaf({0.5, 2.0});
  SUBCASE("zero noise returns the mean") {
    CHECK(t.val(nn::reparam_sample(t, mu, sigma, {0.0, 0.0})) ==
          Vec{0.4, -1.2});
  }
  SUBCASE("gradients are 1 w.r.t. mu and noise w.r.t. sigma") {
    Var z = nn::reparam_sample(t, mu, sigma, {0.7, -0.3});
    t.backward(t.sum(z));
    CHECK(t.grad(mu) == Vec{1.0, 1.0});
    CHECK(t.grad(sigma) == Vec{0.7, -0.3});
  }
}

TEST_CASE("parameter store flatten/assign round-trips") {
  ModelDims dims;
  dims.M = 2;
  dims.b = 2;
  nn::ModelParams p = init_params(dims, 123);
  Vec flat = p.flatten();
  CHECK(flat.size() == p.total_size());
  // perturb and reassign
  for (auto& v : flat) v += 0.5;
  p.assign(flat);
  CHECK(p.flatten() == flat);
  CHECK_THROWS_AS(p.at("no.such.tensor"), ContractError);
}

TEST_CASE("initialization conventions") {
  ModelDims dims;
  nn::ModelParams p = init_params(dims, 7);
  // Glorot bound on a weight matrix
  const auto& w = p.at("enc.gru.Wn");
  const double bound = std::sqrt(6.0 / (w.rows() + w.cols()));
  bool any_nonzero = false;
  for (double v : w.value) {
    CHECK(std::abs(v) <= bound + 1e-12);
    if (v != 0.0) any_nonzero = true;
  }
  CHECK(any_nonzero);
  // update-gate bias +1, other biases zero
  for (double v : p.at("enc.gru.bu").value) CHECK(v == 1.0);
  for (double v : p.at("enc.gru.br").value) CHECK(v == 0.0);
  // identity-initialized latent projection
  const auto& proj = p.at("dec.z0proj.W");
  for (size_t r = 0; r < proj.rows(); ++r)
    for (size_t c = 0; c < proj.cols(); ++c)
      CHECK(proj.value[r * proj.cols() + c] == (r == c ? 1.0 : 0.0));
  // same seed reproduces the same initialization
  CHECK(init_params(dims, 7).flatten() == p.flatten());
}
