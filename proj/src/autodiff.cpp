#include "survode/autodiff.hpp"

#include <cmath>

namespace survode::ad {

namespace {

void require_same_size(Var a, Var b, const char* op) {
  if (a.n != b.n)
    throw DimensionError(std::string("ad::") + op + ": size mismatch " +
                         std::to_string(a.n) + " vs " + std::to_string(b.n));
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

Var Tape::push(Vec val, std::function<void(Tape&, int)> back) {
  const size_t n = val.size();
  nodes_.push_back(Node{std::move(val), {}, std::move(back)});
  return Var{static_cast<int>(nodes_.size() - 1), n};
}

Var Tape::leaf(Vec v) { return push(std::move(v), nullptr); }

void Tape::backward(Var loss) {
  if (loss.n != 1) throw ContractError("ad::backward: loss must be scalar");
  const int lid = check(loss);
  for (auto& node : nodes_) node.grad.assign(node.val.size(), 0.0);
  nodes_[lid].grad[0] = 1.0;
  for (int i = lid; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back(*this, i);
}

Var Tape::add(Var a, Var b) {
  require_same_size(a, b, "add");
  Vec out(a.n);
  const Vec &va = v(a.id), &vb = v(b.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = va[i] + vb[i];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Vec& gs = t.g(self);
    Vec &ga = t.g(a.id), &gb = t.g(b.id);
    for (size_t i = 0; i < gs.size(); ++i) {
      ga[i] += gs[i];
      gb[i] += gs[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_size(a, b, "sub");
  Vec out(a.n);
  const Vec &va = v(a.id), &vb = v(b.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = va[i] - vb[i];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Vec& gs = t.g(self);
    Vec &ga = t.g(a.id), &gb = t.g(b.id);
    for (size_t i = 0; i < gs.size(); ++i) {
      ga[i] += gs[i];
      gb[i] -= gs[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_size(a, b, "mul");
  Vec out(a.n);
  const Vec &va = v(a.id), &vb = v(b.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = va[i] * vb[i];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Vec& gs = t.g(self);
    const Vec &va = t.v(a.id), &vb = t.v(b.id);
    Vec &ga = t.g(a.id), &gb = t.g(b.id);
    for (size_t i = 0; i < gs.size(); ++i) {
      ga[i] += gs[i] * vb[i];
      gb[i] += gs[i] * va[i];
    }
  });
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::scale(Var a, double c) {
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = c * va[i];
  return push(std::move(out), [a, c](Tape& t, int self) {
    const Vec& gs = t.g(self);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i) ga[i] += c * gs[i];
  });
}

Var Tape::shift(Var a, double c) {
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = va[i] + c;
  return push(std::move(out), [a](Tape& t, int self) {
    const Vec& gs = t.g(self);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i];
  });
}

Var Tape::cmul(Var a, Vec c) {
  if (a.n != c.size()) throw DimensionError("ad::cmul: size mismatch");
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = va[i] * c[i];
  return push(std::move(out), [a, c = std::move(c)](Tape& t, int self) {
    const Vec& gs = t.g(self);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i) ga[i] += c[i] * gs[i];
  });
}

Var Tape::cadd(Var a, Vec c) {
  if (a.n != c.size()) throw DimensionError("ad::cadd: size mismatch");
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = va[i] + c[i];
  return push(std::move(out), [a](Tape& t, int self) {
    const Vec& gs = t.g(self);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i];
  });
}

Var Tape::lincomb(const std::vector<std::pair<double, Var>>& terms) {
  if (terms.empty()) throw ContractError("ad::lincomb: no terms");
  const size_t n = terms.front().second.n;
  Vec out(n, 0.0);
  for (const auto& [c, var] : terms) {
    if (var.n != n) throw DimensionError("ad::lincomb: size mismatch");
    const Vec& vv = v(var.id);
    for (size_t i = 0; i < n; ++i) out[i] += c * vv[i];
  }
  return push(std::move(out), [terms](Tape& t, int self) {
    const Vec& gs = t.g(self);
    for (const auto& [c, var] : terms) {
      Vec& gv = t.g(var.id);
      for (size_t i = 0; i < gs.size(); ++i) gv[i] += c * gs[i];
    }
  });
}

Var Tape::tanh_(Var a) {
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = std::tanh(va[i]);
  return push(std::move(out), [a](Tape& t, int self) {
    const Vec &gs = t.g(self), &y = t.v(self);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::sigmoid(Var a) {
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = 1.0 / (1.0 + std::exp(-va[i]));
  return push(std::move(out), [a](Tape& t, int self) {
    const Vec &gs = t.g(self), &y = t.v(self);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::relu(Var a) {
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = va[i] > 0.0 ? va[i] : 0.0;
  return push(std::move(out), [a](Tape& t, int self) {
    const Vec& gs = t.g(self);
    const Vec& va = t.v(a.id);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i)
      if (va[i] > 0.0) ga[i] += gs[i];
  });
}

Var Tape::softplus(Var a) {
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = stable_softplus(va[i]);
  return push(std::move(out), [a](Tape& t, int self) {
    const Vec& gs = t.g(self);
    const Vec& va = t.v(a.id);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i)
      ga[i] += gs[i] / (1.0 + std::exp(-va[i]));
  });
}

Var Tape::exp_(Var a) {
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) out[i] = std::exp(va[i]);
  return push(std::move(out), [a](Tape& t, int self) {
    const Vec &gs = t.g(self), &y = t.v(self);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * y[i];
  });
}

Var Tape::log_(Var a) {
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i) {
    if (!(va[i] > 0.0))
      throw NumericalError("ad::log: nonpositive argument " +
                           std::to_string(va[i]));
    out[i] = std::log(va[i]);
  }
  return push(std::move(out), [a](Tape& t, int self) {
    const Vec& gs = t.g(self);
    const Vec& va = t.v(a.id);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] / va[i];
  });
}

Var Tape::log_clamped(Var a, double floor) {
  Vec out(a.n);
  const Vec& va = v(a.id);
  for (size_t i = 0; i < a.n; ++i)
    out[i] = std::log(va[i] > floor ? va[i] : floor);
  return push(std::move(out), [a, floor](Tape& t, int self) {
    const Vec& gs = t.g(self);
    const Vec& va = t.v(a.id);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i)
      if (va[i] > floor) ga[i] += gs[i] / va[i];
  });
}

Var Tape::softmax(Var logits) {
  const Vec& x = v(logits.id);
  double mx = x[0];
  for (double xi : x) mx = std::max(mx, xi);
  Vec out(logits.n);
  double z = 0.0;
  for (size_t i = 0; i < logits.n; ++i) {
    out[i] = std::exp(x[i] - mx);
    z += out[i];
  }
  for (double& o : out) o /= z;
  return push(std::move(out), [logits](Tape& t, int self) {
    const Vec &gs = t.g(self), &y = t.v(self);
    Vec& ga = t.g(logits.id);
    double gy = 0.0;
    for (size_t i = 0; i < gs.size(); ++i) gy += gs[i] * y[i];
    for (size_t i = 0; i < gs.size(); ++i) ga[i] += y[i] * (gs[i] - gy);
  });
}

Var Tape::matvec(Var w, size_t rows, size_t cols, Var x) {
  if (w.n != rows * cols || x.n != cols)
    throw DimensionError("ad::matvec: shape mismatch (" + std::to_string(w.n) +
                         " vs " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", x=" + std::to_string(x.n) +
                         ")");
  const Vec &vw = v(w.id), &vx = v(x.id);
  Vec out(rows, 0.0);
  for (size_t r = 0; r < rows; ++r) {
    const double* wr = vw.data() + r * cols;
    double acc = 0.0;
    for (size_t c = 0; c < cols; ++c) acc += wr[c] * vx[c];
    out[r] = acc;
  }
  return push(std::move(out), [w, x, rows, cols](Tape& t, int self) {
    const Vec& gs = t.g(self);
    const Vec &vw = t.v(w.id), &vx = t.v(x.id);
    Vec &gw = t.g(w.id), &gx = t.g(x.id);
    for (size_t r = 0; r < rows; ++r) {
      const double gr = gs[r];
      if (gr == 0.0) continue;
      const double* wr = vw.data() + r * cols;
      double* gwr = gw.data() + r * cols;
      for (size_t c = 0; c < cols; ++c) {
        gwr[c] += gr * vx[c];
        gx[c] += gr * wr[c];
      }
    }
  });
}

Var Tape::concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("ad::concat: no parts");
  size_t n = 0;
  for (Var p : parts) n += p.n;
  Vec out;
  out.reserve(n);
  for (Var p : parts) {
    const Vec& vp = v(p.id);
    out.insert(out.end(), vp.begin(), vp.end());
  }
  return push(std::move(out), [parts](Tape& t, int self) {
    const Vec& gs = t.g(self);
    size_t off = 0;
    for (Var p : parts) {
      Vec& gp = t.g(p.id);
      for (size_t i = 0; i < p.n; ++i) gp[i] += gs[off + i];
      off += p.n;
    }
  });
}

Var Tape::slice(Var a, size_t start, size_t len) {
  if (start + len > a.n) throw DimensionError("ad::slice: out of range");
  const Vec& va = v(a.id);
  Vec out(va.begin() + start, va.begin() + start + len);
  return push(std::move(out), [a, start](Tape& t, int self) {
    const Vec& gs = t.g(self);
    Vec& ga = t.g(a.id);
    for (size_t i = 0; i < gs.size(); ++i) ga[start + i] += gs[i];
  });
}

Var Tape::sum(Var a) {
  const Vec& va = v(a.id);
  double acc = 0.0;
  for (double x : va) acc += x;
  return push(Vec{acc}, [a](Tape& t, int self) {
    const double gs = t.g(self)[0];
    Vec& ga = t.g(a.id);
    for (double& gi : ga) gi += gs;
  });
}

Var Tape::dot(Var a, Var b) {
  require_same_size(a, b, "dot");
  const Vec &va = v(a.id), &vb = v(b.id);
  double acc = 0.0;
  for (size_t i = 0; i < a.n; ++i) acc += va[i] * vb[i];
  return push(Vec{acc}, [a, b](Tape& t, int self) {
    const double gs = t.g(self)[0];
    const Vec &va = t.v(a.id), &vb = t.v(b.id);
    Vec &ga = t.g(a.id), &gb = t.g(b.id);
    for (size_t i = 0; i < va.size(); ++i) {
      ga[i] += gs * vb[i];
      gb[i] += gs * va[i];
    }
  });
}

}  // namespace survode::ad
