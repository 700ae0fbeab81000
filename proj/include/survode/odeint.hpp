#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "survode/autodiff.hpp"
#include "survode/errors.hpp"

namespace survode::odeint {

using Vec = std::vector<double>;

struct SolverSettings {
  double rtol = 1e-3;
  double atol = 1e-4;
  double h_init = 0.0;  // 0 -> span / 10
  double h_min = 1e-10;
  double h_max = std::numeric_limits<double>::infinity();
  int max_steps = 10000;

  void validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0))
      throw ValidationError("SolverSettings: tolerances must be positive");
    if (!(h_min > 0.0) || !(h_min <= h_max))
      throw ValidationError("SolverSettings: need 0 < h_min <= h_max");
    if (max_steps < 1)
      throw ValidationError("SolverSettings: max_steps must be >= 1");
  }
};

struct OdeProblem {
  std::function<Vec(double, const Vec&)> vector_field;
  Vec y0;
  double t0 = 0.0;
  std::vector<double> eval_times;
};

// --- state concept -------------------------------------------------------
// A State supports ode_lincomb({(c, state)...}) -> State and
// ode_values(state) -> const Vec&. Plain Vec works directly; AdState wraps a
// tape variable so the same stepping code records the computation graph.

inline Vec ode_lincomb(const std::vector<std::pair<double, Vec>>& terms) {
  Vec out(terms.front().second.size(), 0.0);
  for (const auto& [c, s] : terms)
    for (size_t i = 0; i < out.size(); ++i) out[i] += c * s[i];
  return out;
}
inline const Vec& ode_values(const Vec& s) { return s; }

struct AdState {
  ad::Tape* tape = nullptr;
  ad::Var var;
};

inline AdState ode_lincomb(const std::vector<std::pair<double, AdState>>& terms) {
  std::vector<std::pair<double, ad::Var>> vs;
  vs.reserve(terms.size());
  for (const auto& [c, s] : terms) vs.emplace_back(c, s.var);
  ad::Tape* tape = terms.front().second.tape;
  return AdState{tape, tape->lincomb(vs)};
}
inline const Vec& ode_values(const AdState& s) { return s.tape->val(s.var); }

// --- Dormand-Prince 5(4) tableau -----------------------------------------

namespace dp {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                        c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
// 5th-order weights (also row 7 of the tableau; FSAL)
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// y5 - y4 error weights
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                        e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

template <class State>
struct StepResult {
  State y5;           // 5th-order estimate at t + h
  Vec err;            // embedded y5 - y4 componentwise
  State k1, k7;       // endpoint derivatives, reused for dense output
};

namespace detail {
inline void check_finite(const Vec& v, double t) {
  for (double x : v)
    if (!std::isfinite(x))
      throw NumericalError("odeint: non-finite stage value at t = " +
                           std::to_string(t));
}
}  // namespace detail

template <class State, class Field>
StepResult<State> dopri5_step(Field&& f, double t, const State& y, double h) {
  using namespace dp;
  if (!(h > 0.0)) throw ContractError("dopri5_step: h must be positive");
  auto stage = [&](double ti, const State& yi) {
    State k = f(ti, yi);
    detail::check_finite(ode_values(k), ti);
    return k;
  };
  State k1 = stage(t, y);
  State k2 = stage(t + c2 * h, ode_lincomb({{1.0, y}, {h * a21, k1}}));
  State k3 =
      stage(t + c3 * h, ode_lincomb({{1.0, y}, {h * a31, k1}, {h * a32, k2}}));
  State k4 = stage(t + c4 * h, ode_lincomb({{1.0, y},
                                            {h * a41, k1},
                                            {h * a42, k2},
                                            {h * a43, k3}}));
  State k5 = stage(t + c5 * h, ode_lincomb({{1.0, y},
                                            {h * a51, k1},
                                            {h * a52, k2},
                                            {h * a53, k3},
                                            {h * a54, k4}}));
  State k6 = stage(t + h, ode_lincomb({{1.0, y},
                                       {h * a61, k1},
                                       {h * a62, k2},
                                       {h * a63, k3},
                                       {h * a64, k4},
                                       {h * a65, k5}}));
  State y5 = ode_lincomb({{1.0, y},
                          {h * b1, k1},
                          {h * b3, k3},
                          {h * b4, k4},
                          {h * b5, k5},
                          {h * b6, k6}});
  State k7 = stage(t + h, y5);

  const Vec &v1 = ode_values(k1), &v3 = ode_values(k3), &v4 = ode_values(k4),
            &v5 = ode_values(k5), &v6 = ode_values(k6), &v7 = ode_values(k7);
  Vec err(v1.size());
  for (size_t i = 0; i < err.size(); ++i)
    err[i] = h * (e1 * v1[i] + e3 * v3[i] + e4 * v4[i] + e5 * v5[i] +
                  e6 * v6[i] + e7 * v7[i]);
  return StepResult<State>{std::move(y5), std::move(err), std::move(k1),
                           std::move(k7)};
}

// Cubic Hermite dense output on an accepted step (4th-order accurate).
template <class State>
State hermite_eval(const State& y0, const State& y1, const State& f0,
                   const State& f1, double theta, double h) {
  const double t2 = theta * theta, t3 = t2 * theta;
  return ode_lincomb({{2 * t3 - 3 * t2 + 1, y0},
                      {h * (t3 - 2 * t2 + theta), f0},
                      {-2 * t3 + 3 * t2, y1},
                      {h * (t3 - t2), f1}});
}

// Adaptive integration with dense evaluation at eval_times. Step-size control
// is computed from detached values only; for AdState inputs the gradient flows
// through the stage combinations and the dense-output weights.
template <class State, class Field>
std::vector<State> adaptive_solve(Field&& f, const State& y0, double t0,
                                  const std::vector<double>& eval_times,
                                  const SolverSettings& st) {
  st.validate();
  std::vector<State> out;
  if (eval_times.empty()) return out;
  for (size_t i = 1; i < eval_times.size(); ++i)
    if (eval_times[i] < eval_times[i - 1])
      throw ContractError("solve: eval_times must be nondecreasing");
  const double t_end = eval_times.back();
  const double fuzz = 1e-12 * std::max(1.0, std::abs(t_end) + std::abs(t0));
  if (eval_times.front() < t0 - fuzz)
    throw ContractError("solve: eval_times precede integration start");

  out.reserve(eval_times.size());
  size_t idx = 0;
  while (idx < eval_times.size() && eval_times[idx] <= t0 + fuzz) {
    out.push_back(y0);
    ++idx;
  }
  if (idx == eval_times.size()) return out;

  State y = y0;
  double t = t0;
  const double span = t_end - t0;
  double h = st.h_init > 0.0 ? st.h_init : span / 10.0;
  h = std::clamp(h, st.h_min, st.h_max);
  int steps = 0;
  while (t < t_end - fuzz) {
    if (++steps > st.max_steps)
      throw DivergenceError("solve: max_steps (" +
                            std::to_string(st.max_steps) +
                            ") exceeded at t = " + std::to_string(t));
    const double h_try = std::min(h, t_end - t);
    auto step = dopri5_step(f, t, y, h_try);

    const Vec &vy = ode_values(y), &vy5 = ode_values(step.y5);
    double ratio = 0.0;
    for (size_t i = 0; i < vy.size(); ++i) {
      const double sc =
          st.atol + st.rtol * std::max(std::abs(vy[i]), std::abs(vy5[i]));
      ratio = std::max(ratio, std::abs(step.err[i]) / sc);
    }
    const bool accept = ratio <= 1.0 || h_try <= st.h_min * (1.0 + 1e-12);

    double factor =
        ratio > 1e-12 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
    factor = std::clamp(factor, 0.2, 5.0);
    const double h_next = std::clamp(h_try * factor, st.h_min, st.h_max);

    if (accept) {
      const double t_new = t + h_try;
      while (idx < eval_times.size() &&
             eval_times[idx] <= t_new + fuzz) {
        const double s = eval_times[idx];
        if (s >= t_new - fuzz) {
          out.push_back(step.y5);
        } else {
          out.push_back(hermite_eval(y, step.y5, step.k1, step.k7,
                                     (s - t) / h_try, h_try));
        }
        ++idx;
      }
      y = std::move(step.y5);
      t = t_new;
    }
    h = h_next;
  }
  while (idx < eval_times.size()) {  // eval times equal to t_end within fuzz
    out.push_back(y);
    ++idx;
  }
  return out;
}

inline std::vector<Vec> solve(const OdeProblem& p, const SolverSettings& s) {
  if (p.y0.empty()) throw ContractError("solve: empty initial state");
  return adaptive_solve(p.vector_field, p.y0, p.t0, p.eval_times, s);
}

}  // namespace survode::odeint
