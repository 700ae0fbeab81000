#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "survode/autodiff.hpp"

using namespace survode;
using ad::Tape;
using ad::Var;
using ad::Vec;

namespace {

// Central finite-difference check of d(loss)/d(inputs) for a scalar loss
// built from a single leaf vector.
void check_gradient(const Vec& x0,
                    const std::function<Var(Tape&, Var)>& build,
                    double rel_tol = 1e-3, double eps = 1e-4) {
  Tape tape;
  Var x = tape.leaf(x0);
  Var loss = build(tape, x);
  REQUIRE(tape.val(loss).size() == 1);
  tape.backward(loss);
  const Vec grad = tape.grad(x);

  for (size_t i = 0; i < x0.size(); ++i) {
    Vec xp = x0, xm = x0;
    xp[i] += eps;
    xm[i] -= eps;
    Tape tp, tm;
    const double fp = tp.val(build(tp, tp.leaf(xp)))[0];
    const double fm = tm.val(build(tm, tm.leaf(xm)))[0];
    const double fd = (fp - fm) / (2 * eps);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    CHECK(std::abs(grad[i] - fd) / denom <= rel_tol);
  }
}

}  // namespace

TEST_CASE("elementwise forward values") {
  Tape t;
  Var a = t.leaf({1.0, -2.0, 3.0});
  Var b = t.leaf({0.5, 4.0, -1.0});
  CHECK(t.val(t.add(a, b)) == Vec{1.5, 2.0, 2.0});
  CHECK(t.val(t.sub(a, b)) == Vec{0.5, -6.0, 4.0});
  CHECK(t.val(t.mul(a, b)) == Vec{0.5, -8.0, -3.0});
  CHECK(t.val(t.neg(a)) == Vec{-1.0, 2.0, -3.0});
  CHECK(t.val(t.scale(a, 2.0)) == Vec{2.0, -4.0, 6.0});
  CHECK(t.val(t.shift(a, 1.0)) == Vec{2.0, -1.0, 4.0});
  CHECK(t.val(t.relu(a)) == Vec{1.0, 0.0, 3.0});
  CHECK(t.val(t.sum(a))[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(t.val(t.dot(a, b))[0] == doctest::Approx(-10.5).epsilon(1e-15));
}

TEST_CASE("matvec and structure ops") {
  Tape t;
  Var w = t.leaf({1, 2, 3, 4});  // [[1,2],[3,4]]
  Var x = t.leaf({1, 1});
  Var y = t.matvec(w, 2, 2, x);
  CHECK(t.val(y) == Vec{3.0, 7.0});

  Var c = t.concat({x, y});
  CHECK(t.val(c) == Vec{1.0, 1.0, 3.0, 7.0});
  CHECK(t.val(t.slice(c, 2, 2)) == Vec{3.0, 7.0});
}

TEST_CASE("softmax matches closed forms") {
  Tape t;
  SUBCASE("equal logits give the uniform distribution") {
    Var p = t.softmax(t.leaf({2.0, 2.0, 2.0}));
    for (double v : t.val(p)) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-14));
  }
  SUBCASE("logits [ln2, 0] give [2/3, 1/3]") {
    Var p = t.softmax(t.leaf({std::log(2.0), 0.0}));
    CHECK(t.val(p)[0] == doctest::Approx(2.0 / 3).epsilon(1e-14));
    CHECK(t.val(p)[1] == doctest::Approx(1.0 / 3).epsilon(1e-14));
  }
  SUBCASE("shift invariance") {
    Var p1 = t.softmax(t.leaf({0.3, -1.2, 2.0}));
    Var p2 = t.softmax(t.leaf({0.3 + 7.0, -1.2 + 7.0, 2.0 + 7.0}));
    for (size_t i = 0; i < 3; ++i)
      CHECK(t.val(p1)[i] == doctest::Approx(t.val(p2)[i]).epsilon(1e-13));
  }
  SUBCASE("sums to 1 within 1e-12 for |logit| <= 50") {
    Var p = t.softmax(t.leaf({-50.0, 0.0, 50.0, 12.5}));
    double s = 0.0;
    for (double v : t.val(p)) {
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("backward on a quadratic gives 2x") {
  Tape t;
  Var x = t.leaf({1.0, -2.0, 0.5});
  Var loss = t.dot(x, x);
  t.backward(loss);
  CHECK(t.grad(x) == Vec{2.0, -4.0, 1.0});
}

TEST_CASE("disconnected leaves get zero gradients") {
  Tape t;
  Var x = t.leaf({1.0, 2.0});
  Var unused = t.leaf({3.0, 4.0});
  t.backward(t.sum(x));
  CHECK(t.grad(unused) == Vec{0.0, 0.0});
}

TEST_CASE("backward rejects non-scalar losses") {
  Tape t;
  Var x = t.leaf({1.0, 2.0});
  CHECK_THROWS_AS(t.backward(x), ContractError);
}

TEST_CASE("log_ rejects nonpositive values, log_clamped does not") {
  Tape t;
  CHECK_THROWS_AS(t.log_(t.leaf({1.0, 0.0})), NumericalError);
  Var y = t.log_clamped(t.leaf({1.0, 0.0}), 1e-12);
  CHECK(t.val(y)[1] == doctest::Approx(std::log(1e-12)));
}

TEST_CASE("finite-difference checks per op") {
  const Vec x0{0.3, -0.7, 1.1, 0.05};
  auto reduce = [](Tape& t, Var v) { return t.dot(v, v); };

  check_gradient(x0, [&](Tape& t, Var x) { return reduce(t, t.tanh_(x)); });
  check_gradient(x0, [&](Tape& t, Var x) { return reduce(t, t.sigmoid(x)); });
  check_gradient(x0, [&](Tape& t, Var x) { return reduce(t, t.softplus(x)); });
  check_gradient(x0, [&](Tape& t, Var x) { return reduce(t, t.exp_(x)); });
  check_gradient(x0, [&](Tape& t, Var x) { return reduce(t, t.softmax(x)); });
  check_gradient(x0, [&](Tape& t, Var x) {
    return reduce(t, t.log_(t.softplus(x)));
  });
  check_gradient(x0, [&](Tape& t, Var x) {
    return reduce(t, t.lincomb({{2.0, x}, {-0.5, t.mul(x, x)}}));
  });
  check_gradient(x0, [&](Tape& t, Var x) {
    Var w = t.slice(x, 0, 4);
    Var v = t.slice(x, 1, 2);
    return reduce(t, t.matvec(w, 2, 2, v));
  });
  // relu away from the kink
  check_gradient({0.4, -0.6, 1.2, -2.0},
                 [&](Tape& t, Var x) { return reduce(t, t.relu(x)); });
}

TEST_CASE("repeated passes are bit-identical") {
  auto run = [] {
    Tape t;
    Var x = t.leaf({0.2, -0.4, 0.9});
    Var loss = t.sum(t.mul(t.tanh_(x), t.softmax(x)));
    t.backward(loss);
    return t.grad(x);
  };
  CHECK(run() == run());
}
