#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qpop/errors.hpp"
#include "qpop/random.hpp"

namespace qpop {

/// Per-action Q-values of one agent.
using QVector = std::vector<double>;
/// Per-action selection probabilities.
using PolicyVector = std::vector<double>;

/// How Q-values are turned into action probabilities.
///
/// boltzmann: p_j = exp(tau q_j) / sum_k exp(tau q_k)
/// power:     p_j = q_j^tau / sum_k q_k^tau, defined for q_j > 0 only
struct Exploration {
  enum class Kind { boltzmann, power };

  Kind kind = Kind::boltzmann;
  double tau = 3.0;

  static Exploration boltzmann(double tau) { return checked({Kind::boltzmann, tau}); }
  static Exploration power(double tau) { return checked({Kind::power, tau}); }

  static Exploration checked(Exploration e) {
    if (!(e.tau >= 0.0) || !std::isfinite(e.tau)) throw UsageError("exploration tau must be finite and >= 0");
    return e;
  }

  const char* kind_name() const noexcept { return kind == Kind::boltzmann ? "boltzmann" : "power"; }
};

namespace detail {

inline void require_power_domain(std::span<const double> q) {
  for (std::size_t j = 0; j < q.size(); ++j)
    if (!(q[j] > 0.0))
      throw DomainError("power exploration requires positive Q-values (q[" + std::to_string(j) +
                        "] = " + std::to_string(q[j]) + ")");
}

}  // namespace detail

/// Writes the policy for `q` into `out` (same length). Both kinds go through a
/// max-shifted softmax of the log-weights so large tau*q never overflows.
inline void policy_into(std::span<const double> q, const Exploration& mech, std::span<double> out) {
  const std::size_t m = q.size();
  if (mech.kind == Exploration::Kind::power) detail::require_power_domain(q);
  double wmax = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = mech.kind == Exploration::Kind::boltzmann ? mech.tau * q[j] : mech.tau * std::log(q[j]);
    wmax = std::max(wmax, out[j]);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = std::exp(out[j] - wmax);
    sum += out[j];
  }
  for (std::size_t j = 0; j < m; ++j) out[j] /= sum;
}

inline PolicyVector policy(std::span<const double> q, const Exploration& mech) {
  PolicyVector p(q.size());
  policy_into(q, mech, p);
  return p;
}

/// Probability of action 0 for two actions under Boltzmann exploration.
inline double boltzmann_p1(double q1, double q2, double tau) {
  return 1.0 / (1.0 + std::exp(-tau * (q1 - q2)));
}

/// Jacobian of the policy, row-major m x m with entry (j, k) = dp_k / dq_j.
///
/// Each row sums to zero: moving one Q-value only shifts probability between
/// actions.
inline std::vector<double> policy_grad(std::span<const double> q, const Exploration& mech) {
  const std::size_t m = q.size();
  const PolicyVector p = policy(q, mech);
  std::vector<double> grad(m * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    // boltzmann: tau p_k (delta_kj - p_j); power: (tau p_j / q_j)(delta_kj - p_k)
    for (std::size_t k = 0; k < m; ++k) {
      const double delta = j == k ? 1.0 : 0.0;
      grad[j * m + k] = mech.kind == Exploration::Kind::boltzmann
                            ? mech.tau * p[k] * (delta - p[j])
                            : mech.tau * p[j] / q[j] * (delta - p[k]);
    }
  }
  return grad;
}

/// Inverse-CDF draw from a policy vector using the given uniform in [0, 1).
inline std::size_t pick_action(std::span<const double> p, double u) {
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0) continue;
    last = j;
    cum += p[j];
    if (u < cum) return j;
  }
  return last;
}

/// Samples an action from the policy of `q`. Consumes exactly one uniform.
inline std::size_t sample_action(std::span<const double> q, const Exploration& mech, RandomStream& rng) {
  const PolicyVector p = policy(q, mech);
  return pick_action(p, rng.uniform());
}

}  // namespace qpop
