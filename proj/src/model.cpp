#include "survode/model.hpp"

namespace survode {

nn::ModelParams init_params(const ModelDims& d, uint64_t seed) {
  nn::ModelParams p;
  const size_t I = d.gru_input();

  p.add("enc.field.W1", {d.enc_field_hidden, d.H});
  p.add("enc.field.b1", {d.enc_field_hidden});
  p.add("enc.field.W2", {d.H, d.enc_field_hidden});
  p.add("enc.field.b2", {d.H});

  p.add("enc.gru.Wr", {d.H, I + d.H});
  p.add("enc.gru.br", {d.H});
  p.add("enc.gru.Wu", {d.H, I + d.H});
  p.add("enc.gru.bu", {d.H});
  p.add("enc.gru.Wn", {d.H, I});
  p.add("enc.gru.Un", {d.H, d.H});
  p.add("enc.gru.bn", {d.H});

  p.add("enc.post.W", {2 * d.L0, d.H});
  p.add("enc.post.b", {2 * d.L0});

  p.add("dec.z0proj.W", {d.L, d.L0});
  p.add("dec.z0proj.b", {d.L});

  p.add("dec.field.W1", {d.dec_field_hidden, d.L});
  p.add("dec.field.b1", {d.dec_field_hidden});
  p.add("dec.field.W2", {d.L, d.dec_field_hidden});
  p.add("dec.field.b2", {d.L});

  for (size_t k = 1; k <= d.b; ++k) {
    const std::string base = "dec.cause" + std::to_string(k);
    p.add(base + ".W1", {d.cause_hidden, d.L});
    p.add(base + ".b1", {d.cause_hidden});
    p.add(base + ".W2", {d.cause_embed, d.cause_hidden});
    p.add(base + ".b2", {d.cause_embed});
  }
  p.add("dec.head.W", {d.b + 1, d.b * d.cause_embed});
  p.add("dec.head.b", {d.b + 1});

  p.add("dec.data.W1", {d.data_hidden, d.L});
  p.add("dec.data.b1", {d.data_hidden});
  p.add("dec.data.W2", {d.M, d.data_hidden});
  p.add("dec.data.b2", {d.M});

  Rng rng(seed);
  for (auto& t : p.tensors) {
    if (t.shape.size() == 2) nn::init_glorot(t, rng);
    // biases stay zero
  }
  // update-gate bias +1 biases toward state retention early in training
  for (double& v : p.at("enc.gru.bu").value) v = 1.0;
  // identity-like start for the z0 projection
  {
    auto& w = p.at("dec.z0proj.W");
    std::fill(w.value.begin(), w.value.end(), 0.0);
    const size_t n = std::min(w.rows(), w.cols());
    for (size_t i = 0; i < n; ++i) w.value[i * w.cols() + i] = 1.0;
  }
  return p;
}

nn::GruVars gru_vars(const nn::BoundParams& p, const ModelDims& d) {
  nn::GruVars g;
  g.wr = p("enc.gru.Wr");
  g.br = p("enc.gru.br");
  g.wu = p("enc.gru.Wu");
  g.bu = p("enc.gru.bu");
  g.wn = p("enc.gru.Wn");
  g.un = p("enc.gru.Un");
  g.bn = p("enc.gru.bn");
  g.input_dim = d.gru_input();
  g.hidden_dim = d.H;
  return g;
}

ad::Var enc_field(ad::Tape& t, const nn::BoundParams& p, const ModelDims& d,
                  ad::Var h) {
  ad::Var hid = nn::dense(t, h, p("enc.field.W1"), d.enc_field_hidden, d.H,
                          p("enc.field.b1"), nn::Act::tanh);
  return nn::dense(t, hid, p("enc.field.W2"), d.H, d.enc_field_hidden,
                   p("enc.field.b2"), nn::Act::linear);
}

ad::Var dec_field(ad::Tape& t, const nn::BoundParams& p, const ModelDims& d,
                  ad::Var z) {
  ad::Var hid = nn::dense(t, z, p("dec.field.W1"), d.dec_field_hidden, d.L,
                          p("dec.field.b1"), nn::Act::tanh);
  return nn::dense(t, hid, p("dec.field.W2"), d.L, d.dec_field_hidden,
                   p("dec.field.b2"), nn::Act::linear);
}

}  // namespace survode
