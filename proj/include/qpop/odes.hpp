#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qpop/errors.hpp"
#include "qpop/explore.hpp"
#include "qpop/games.hpp"
#include "qpop/rk4.hpp"
#include "qpop/trajectory.hpp"

namespace qpop {

// ---------------------------------------------------------------------------
// Homogeneous population: every agent shares Q*, so o = p(Q*) and
//   dQ*_j/dt = alpha p_j(Q*) (R(a_j, p(Q*), t) - Q*_j).
// ---------------------------------------------------------------------------

inline void homo_rhs_into(std::span<const double> q, const GameSpec& game, const Exploration& mech, double alpha,
                          double t, std::span<double> out) {
  const PolicyVector p = policy(q, mech);
  const std::vector<double> r = game.rewards(p, t);
  for (std::size_t j = 0; j < q.size(); ++j) out[j] = alpha * p[j] * (r[j] - q[j]);
}

inline QVector homo_rhs(std::span<const double> q, const GameSpec& game, const Exploration& mech, double alpha,
                        double t) {
  if (q.size() != game.actions()) throw UsageError("homo_rhs: Q-vector has wrong dimension");
  QVector out(q.size());
  homo_rhs_into(q, game, mech, alpha, t, out);
  return out;
}

/// RK4 solution of the homogeneous reduction, sampled at t = 0..t_max.
/// Records Q* as mean_q and o = p(Q*).
inline Trajectory homo_integrate(const GameSpec& game, const Exploration& mech, std::span<const double> q0,
                                 double alpha, int t_max, double h = 0.05) {
  if (q0.size() != game.actions()) throw UsageError("homo_integrate: q0 has wrong dimension");
  if (t_max < 1) throw UsageError("t_max must be >= 1");
  Trajectory traj;
  rk4_integrate(
      std::vector<double>(q0.begin(), q0.end()), t_max, h, game.breakpoints(),
      [&](double t, const std::vector<double>& q, std::vector<double>& dq) {
        homo_rhs_into(q, game, mech, alpha, t, dq);
      },
      [&](double t) { return step_start_time(game, t); }, [](std::vector<double>&) {},
      [&](double t, const std::vector<double>& q) { traj.push(t, policy(q, mech), q); });
  return traj;
}

struct FixedPoint {
  QVector q_star;
  PopulationState o;
  double residual = 0.0;  ///< max_j |Q*_j - R(a_j, o, t)|
  std::size_t iterations = 0;
};

struct FixedPointReport {
  std::vector<FixedPoint> points;      ///< converged, de-duplicated
  std::vector<QVector> non_converged;  ///< seeds that hit the iteration cap
};

/// Fixed points of the homogeneous reduction at frozen time `t`, found by the
/// damped iteration Q <- (1 - damping) Q + damping R(., p(Q), t) from each seed.
inline FixedPointReport fixed_points(const GameSpec& game, const Exploration& mech, double t,
                                     const std::vector<QVector>& seeds, double damping = 0.5, double tol = 1e-10,
                                     std::size_t max_iter = 100000, double dedup = 1e-6) {
  FixedPointReport report;
  const std::size_t m = game.actions();
  std::vector<double> r(m);
  auto residual_of = [&](const QVector& q) {
    game.rewards(policy(q, mech), t, r);
    double res = 0.0;
    for (std::size_t j = 0; j < m; ++j) res = std::max(res, std::abs(q[j] - r[j]));
    return res;
  };
  for (const QVector& seed : seeds) {
    if (seed.size() != m) throw UsageError("fixed_points: seed has wrong dimension");
    QVector q = seed;
    std::size_t it = 0;
    double res = residual_of(q);
    while (res >= tol && it < max_iter) {
      for (std::size_t j = 0; j < m; ++j) q[j] = (1.0 - damping) * q[j] + damping * r[j];
      res = residual_of(q);
      ++it;
    }
    if (res >= tol) {
      report.non_converged.push_back(seed);
      continue;
    }
    const bool seen = std::any_of(report.points.begin(), report.points.end(), [&](const FixedPoint& fp) {
      for (std::size_t j = 0; j < m; ++j)
        if (std::abs(fp.q_star[j] - q[j]) > dedup) return false;
      return true;
    });
    if (!seen) report.points.push_back({q, policy(q, mech), res, it});
  }
  return report;
}

/// Regular lattice of sample points, endpoints included.
struct Lattice {
  double q1_lo = -1.5, q1_hi = 1.5;
  double q2_lo = -1.5, q2_hi = 1.5;
  std::size_t n1 = 21, n2 = 21;

  double q1(std::size_t i) const { return n1 < 2 ? q1_lo : q1_lo + (q1_hi - q1_lo) * i / (n1 - 1); }
  double q2(std::size_t i) const { return n2 < 2 ? q2_lo : q2_lo + (q2_hi - q2_lo) * i / (n2 - 1); }
};

struct SlopeSample {
  double q1, q2, dq1, dq2;
  std::optional<double> slope;  ///< dQ2/dQ1; empty where |dQ1/dt| < 1e-14
};

struct SlopeField {
  std::vector<SlopeSample> samples;
  std::vector<Trajectory> trajectories;
};

/// Evaluates the homogeneous drift on a two-action lattice and integrates
/// trajectories from `seeds` over [0, t_max].
inline SlopeField slope_field(const GameSpec& game, const Exploration& mech, double alpha, double t,
                              const Lattice& box, const std::vector<QVector>& seeds = {}, int t_max = 100) {
  if (game.actions() != 2) throw UsageError("slope fields are defined for two actions");
  SlopeField field;
  for (std::size_t i2 = 0; i2 < box.n2; ++i2)
    for (std::size_t i1 = 0; i1 < box.n1; ++i1) {
      const QVector q{box.q1(i1), box.q2(i2)};
      const QVector d = homo_rhs(q, game, mech, alpha, t);
      SlopeSample s{q[0], q[1], d[0], d[1], std::nullopt};
      if (std::abs(d[0]) >= 1e-14) s.slope = d[1] / d[0];
      field.samples.push_back(s);
    }
  for (const auto& seed : seeds) field.trajectories.push_back(homo_integrate(game, mech, seed, alpha, t_max));
  return field;
}

// ---------------------------------------------------------------------------
// Finite populations and pairwise games.
// ---------------------------------------------------------------------------

/// Payoff matrix of a symmetric two-player game, U(own action, opponent action).
class PayoffMatrix {
 public:
  explicit PayoffMatrix(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
    const std::size_t m = rows_.size();
    if (m < 2) throw UsageError("payoff matrix needs at least two actions");
    for (const auto& row : rows_) {
      if (row.size() != m) throw UsageError("payoff matrix must be square");
      for (double v : row)
        if (!std::isfinite(v)) throw UsageError("payoff matrix entries must be finite");
    }
  }

  std::size_t actions() const noexcept { return rows_.size(); }
  double operator()(std::size_t own, std::size_t other) const { return rows_[own][other]; }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

  /// The population game with the same expected per-opponent reward.
  GameSpec population_game() const { return GameSpec::from_payoff_rows(rows_); }

 private:
  std::vector<std::vector<double>> rows_;
};

/// Expected payoff of `action` against one opponent drawn from population state o.
inline double pairwise_reward(const PayoffMatrix& u, std::span<const double> o, std::size_t action) {
  if (action >= u.actions() || o.size() != u.actions()) throw UsageError("pairwise_reward: index out of range");
  double r = 0.0;
  for (std::size_t k = 0; k < o.size(); ++k) r += u(action, k) * o[k];
  return r;
}

/// Per-agent rewards r[i][j] given every agent's current policy and the time.
using RewardOracle =
    std::function<std::vector<std::vector<double>>(const std::vector<PolicyVector>& profile, double t)>;

/// Oracle for agents paired with a uniformly random other member of the group.
/// A group of one plays against its own policy.
inline RewardOracle pairwise_oracle(PayoffMatrix u) {
  return [u = std::move(u)](const std::vector<PolicyVector>& profile, double) {
    const std::size_t n = profile.size();
    const std::size_t m = u.actions();
    std::vector<double> total(m, 0.0);
    for (const auto& x : profile)
      for (std::size_t k = 0; k < m; ++k) total[k] += x[k];
    std::vector<std::vector<double>> rewards(n, std::vector<double>(m));
    std::vector<double> others(m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < m; ++k)
        others[k] = n > 1 ? (total[k] - profile[i][k]) / static_cast<double>(n - 1) : profile[i][k];
      for (std::size_t j = 0; j < m; ++j) rewards[i][j] = pairwise_reward(u, others, j);
    }
    return rewards;
  };
}

/// One ODE per agent: dQ^i_j/dt = alpha p_j(Q^i) (r^i_j - Q^i_j).
inline std::vector<QVector> nplayer_rhs(const std::vector<QVector>& q_all, const RewardOracle& reward_fn,
                                        const Exploration& mech, double alpha, double t) {
  if (q_all.empty()) throw UsageError("nplayer_rhs: no agents");
  std::vector<PolicyVector> profile;
  profile.reserve(q_all.size());
  for (const auto& q : q_all) profile.push_back(policy(q, mech));
  const auto r = reward_fn(profile, t);
  std::vector<QVector> out(q_all.size());
  for (std::size_t i = 0; i < q_all.size(); ++i) {
    out[i].resize(q_all[i].size());
    for (std::size_t j = 0; j < q_all[i].size(); ++j)
      out[i][j] = alpha * profile[i][j] * (r[i][j] - q_all[i][j]);
  }
  return out;
}

}  // namespace qpop
