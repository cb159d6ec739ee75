#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "qpop/errors.hpp"
#include "qpop/explore.hpp"
#include "qpop/games.hpp"
#include "qpop/rk4.hpp"
#include "qpop/trajectory.hpp"

namespace qpop {

namespace detail {
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }
}  // namespace detail

/// Replicator dynamics of Boltzmann Q-learning:
///
///   dx_j/dt = alpha tau x_j (r_j - sum_k x_k r_k) + alpha x_j sum_k x_k ln(x_k / x_j)
///
/// The mutation term is evaluated as alpha (x_j H - S x_j ln x_j) with
/// H = sum_k x_k ln x_k and S = sum_k x_k, using x ln x = 0 at x = 0, so
/// simplex vertices are rest points.
inline void rem_rhs_into(std::span<const double> x, std::span<const double> r, double alpha, double tau,
                         std::span<double> out) {
  const std::size_t m = x.size();
  double mean_r = 0.0, entropy = 0.0, total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    mean_r += x[k] * r[k];
    entropy += detail::xlogx(x[k]);
    total += x[k];
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double selection = x[j] * (r[j] - mean_r);
    const double mutation = x[j] * entropy - total * detail::xlogx(x[j]);
    out[j] = alpha * tau * selection + alpha * mutation;
  }
}

inline std::vector<double> rem_rhs(std::span<const double> x, std::span<const double> r, double alpha,
                                   double tau) {
  if (x.size() != r.size()) throw UsageError("rem_rhs: x and r differ in length");
  std::vector<double> out(x.size());
  rem_rhs_into(x, r, alpha, tau, out);
  return out;
}

/// Integrates the population-game instantiation (x := o, r_j := R(a_j, o, t))
/// with fixed-step RK4 (internal step `h`), sampled at integer times.
///
/// The state is clipped to [0, 1] and renormalized after every step; the
/// largest correction applied up to each sample is recorded as the
/// "simplex_drift" extra.
inline Trajectory rem_integrate(const GameSpec& game, const Exploration& mech, std::span<const double> x0,
                                double alpha, int t_max, double h = 0.05) {
  if (mech.kind != Exploration::Kind::boltzmann)
    throw UnsupportedError("the replicator model is derived for Boltzmann exploration only");
  if (x0.size() != game.actions()) throw UsageError("rem_integrate: x0 has wrong dimension");
  double sum = 0.0;
  for (double v : x0) {
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError("rem_integrate: x0 outside the simplex");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError("rem_integrate: x0 does not sum to 1");
  if (t_max < 1) throw UsageError("t_max must be >= 1");

  std::vector<double> rewards(game.actions());
  auto rhs = [&](double t, const std::vector<double>& x, std::vector<double>& dx) {
    game.rewards(x, t, rewards);
    rem_rhs_into(x, rewards, alpha, mech.tau, dx);
  };
  double drift = 0.0;
  auto renormalize = [&](std::vector<double>& x) {
    double s = 0.0, moved = 0.0;
    for (double& v : x) {
      const double c = std::clamp(v, 0.0, 1.0);
      moved += std::abs(c - v);
      v = c;
      s += v;
    }
    for (double& v : x) v /= s;
    drift = std::max(drift, moved + std::abs(s - 1.0));
  };
  Trajectory traj;
  rk4_integrate(
      std::vector<double>(x0.begin(), x0.end()), t_max, h, game.breakpoints(), rhs,
      [&](double t) { return step_start_time(game, t); }, renormalize,
      [&](double t, const std::vector<double>& x) {
        traj.push(t, x);
        traj.push_extra("simplex_drift", drift);
      });
  return traj;
}

}  // namespace qpop
