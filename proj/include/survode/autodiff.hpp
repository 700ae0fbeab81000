#pragma once

#include <functional>
#include <string>
#include <vector>

#include "survode/errors.hpp"

namespace survode::ad {

using Vec = std::vector<double>;

class Tape;

// Lightweight handle to a node on a Tape.
struct Var {
  int id = -1;
  size_t n = 0;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over vector-valued nodes. One tape per forward pass;
// backward() walks the nodes in exact reverse creation order and accumulates
// gradients additively.
class Tape {
 public:
  Var leaf(Vec v);
  Var constant(Vec v) { return leaf(std::move(v)); }
  Var zeros(size_t n) { return leaf(Vec(n, 0.0)); }

  const Vec& val(Var v) const { return nodes_[check(v)].val; }
  const Vec& grad(Var v) const { return nodes_[check(v)].grad; }
  size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every node created before
  // the loss. loss must be scalar (size 1).
  void backward(Var loss);

  // Elementwise (operands must share size).
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);
  Var shift(Var a, double c);           // a + c (no grad to c)
  Var cmul(Var a, Vec c);               // a .* constant vector
  Var cadd(Var a, Vec c);
  Var lincomb(const std::vector<std::pair<double, Var>>& terms);

  // Activations and transcendental ops.
  Var tanh_(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var softplus(Var a);
  Var exp_(Var a);
  Var log_(Var a);                      // requires value > 0
  Var log_clamped(Var a, double floor); // log(max(a, floor)); zero grad where clamped

  // Numerically stable softmax over the whole vector.
  Var softmax(Var logits);

  // Linear algebra / structure.
  Var matvec(Var w, size_t rows, size_t cols, Var x);
  Var concat(const std::vector<Var>& parts);
  Var slice(Var a, size_t start, size_t len);
  Var sum(Var a);                       // -> scalar
  Var dot(Var a, Var b);                // -> scalar

 private:
  struct Node {
    Vec val;
    Vec grad;
    std::function<void(Tape&, int)> back;  // nullptr for leaves
  };

  int check(Var v) const {
    if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size())
      throw ContractError("ad::Tape: variable does not belong to this tape");
    return v.id;
  }

  Var push(Vec val, std::function<void(Tape&, int)> back);
  Vec& g(int id) { return nodes_[id].grad; }
  const Vec& v(int id) const { return nodes_[id].val; }

  std::vector<Node> nodes_;
};

}  // namespace survode::ad
