#pragma once

// Independent oracles for the test suite. Nothing here may call into the
// library's quadrature or samplers; cross-checks lose their point
// otherwise.

#include <cmath>
#include <functional>
#include <vector>

#include "adp/adp_core.hpp"

namespace testsup {

// Fixed-panel composite Simpson rule, deliberately separate from the
// adaptive integrator under test.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int panels = 4096) {
  const double h = (b - a) / (2.0 * panels);
  double acc = f(a) + f(b);
  for (int i = 1; i < 2 * panels; ++i)
    acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Classical RK4 for u' = g(t, u), used to cross-check closed-form flows.
inline double rk4(const std::function<double(double, double)>& g, double u0,
                  double t0, double t1, int steps = 20000) {
  const double h = (t1 - t0) / steps;
  double u = u0;
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    const double k1 = g(t, u);
    const double k2 = g(t + 0.5 * h, u + 0.5 * h * k1);
    const double k3 = g(t + 0.5 * h, u + 0.5 * h * k2);
    const double k4 = g(t + h, u + h * k3);
    u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return u;
}

inline double poisson_pmf(long long n, double mean) {
  return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

// Three states, two actions, constant rates (1, 3) everywhere, distinct
// cyclic kernels per action. The workhorse model for sampler comparisons.
inline adp::TabularAdp three_state_model() {
  adp::TabularAdp model(3, {"go", "jump"}, std::nullopt, 0);
  for (int x = 0; x < 3; ++x) {
    model.set_action_rate(x, 0, adp::RateFunction::constant(1.0));
    model.set_action_rate(x, 1, adp::RateFunction::constant(3.0));
    std::vector<double> forward(3, 0.0);
    forward[static_cast<std::size_t>((x + 1) % 3)] = 0.7;
    forward[static_cast<std::size_t>((x + 2) % 3)] = 0.3;
    model.set_transition(x, 0, forward);
    std::vector<double> backward(3, 0.0);
    backward[static_cast<std::size_t>((x + 2) % 3)] = 0.6;
    backward[static_cast<std::size_t>(x)] = 0.4;
    model.set_transition(x, 1, backward);
  }
  return model;
}

// Same rate structure with an explicit do-nothing action in slot 2.
inline adp::TabularAdp three_state_model_with_id() {
  adp::TabularAdp model(3, {"go", "jump", "Id"}, 2, 0);
  for (int x = 0; x < 3; ++x) {
    model.set_action_rate(x, 0, adp::RateFunction::constant(1.0));
    model.set_action_rate(x, 1, adp::RateFunction::constant(3.0));
    std::vector<double> forward(3, 0.0);
    forward[static_cast<std::size_t>((x + 1) % 3)] = 0.7;
    forward[static_cast<std::size_t>((x + 2) % 3)] = 0.3;
    model.set_transition(x, 0, forward);
    std::vector<double> backward(3, 0.0);
    backward[static_cast<std::size_t>((x + 2) % 3)] = 0.6;
    backward[static_cast<std::size_t>(x)] = 0.4;
    model.set_transition(x, 1, backward);
  }
  return model;
}

}  // namespace testsup
