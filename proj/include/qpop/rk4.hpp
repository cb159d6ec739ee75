#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace qpop {

/// One classical fourth-order Runge-Kutta step of size h from (t, y).
///
/// `rhs(t, y, dydt)` fills dydt. The first stage is evaluated at `t_first`,
/// which lets callers push it past a reward breakpoint sitting at `t`.
template <class Rhs>
void rk4_step(std::vector<double>& y, double t, double t_first, double h, Rhs&& rhs) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  rhs(t_first, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  rhs(t + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  rhs(t + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  rhs(t + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// Integrates from t = 0 to t_max with fixed steps no longer than `h`,
/// calling `sample(t, y)` at every integer time (including 0 and t_max).
///
/// Every integer and every breakpoint in (0, t_max) starts a fresh step, so a
/// reward discontinuity never falls inside an RK stage. `start_time(t)` maps a
/// step's start to the time its first stage is evaluated at; `post_step(y)`
/// runs after every step.
template <class Rhs, class StartTime, class PostStep, class Sample>
void rk4_integrate(std::vector<double> y, int t_max, double h, const std::vector<double>& breakpoints,
                   Rhs&& rhs, StartTime&& start_time, PostStep&& post_step, Sample&& sample) {
  sample(0.0, y);
  for (int k = 0; k < t_max; ++k) {
    std::vector<double> cuts{static_cast<double>(k)};
    for (double b : breakpoints)
      if (b > k && b < k + 1) cuts.push_back(b);
    cuts.push_back(static_cast<double>(k + 1));
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double a = cuts[s], b = cuts[s + 1];
      const auto steps = static_cast<long>(std::ceil((b - a) / h - 1e-9));
      const double dt = (b - a) / static_cast<double>(steps);
      for (long i = 0; i < steps; ++i) {
        const double t = a + static_cast<double>(i) * dt;
        rk4_step(y, t, start_time(t), dt, rhs);
        post_step(y);
      }
    }
    sample(static_cast<double>(k + 1), y);
  }
}

}  // namespace qpop
