#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qpop/dists.hpp"
#include "qpop/errors.hpp"
#include "qpop/explore.hpp"
#include "qpop/games.hpp"
#include "qpop/random.hpp"
#include "qpop/trajectory.hpp"

namespace qpop {

/// Stateless Q-learning update of the chosen action's value.
constexpr double q_update(double q, double r, double alpha) noexcept { return (1.0 - alpha) * q + alpha * r; }

/// Q-values of n agents (row-major, n x m), the step counter, and the run's RNG.
struct AbmState {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> q;
  long t = 0;
  RandomStream rng;

  AbmState(std::size_t agents, std::size_t actions, std::uint64_t seed)
      : n(agents), m(actions), q(agents * actions, 0.0), rng(seed) {
    if (n < 1) throw UsageError("population needs at least one agent");
  }

  std::span<double> agent(std::size_t i) { return {q.data() + i * m, m}; }
  std::span<const double> agent(std::size_t i) const { return {q.data() + i * m, m}; }

  QVector mean_q() const {
    QVector mu(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) mu[j] += q[i * m + j];
    for (auto& v : mu) v /= static_cast<double>(n);
    return mu;
  }
};

/// What one round of play produced.
struct StepOutcome {
  PopulationState o;            ///< realized action fractions
  PolicyVector mean_policy;     ///< sum_i x^i / n before acting
  std::vector<std::size_t> actions;
};

/// Plays one round using the supplied uniforms (one per agent, in agent order).
///
/// All agents act on their current policies, the realized population state is
/// formed, rewards are computed from it, and only then is each agent's chosen
/// Q-value updated.
inline StepOutcome step_with_draws(AbmState& s, const GameSpec& game, const Exploration& mech, double alpha,
                                   std::span<const double> draws) {
  if (game.actions() != s.m) throw UsageError("game and agents disagree on action count");
  if (draws.size() != s.n) throw UsageError("need one draw per agent");
  StepOutcome out{PopulationState(s.m, 0.0), PolicyVector(s.m, 0.0), std::vector<std::size_t>(s.n)};
  PolicyVector p(s.m);
  for (std::size_t i = 0; i < s.n; ++i) {
    try {
      policy_into(s.agent(i), mech, p);
    } catch (const DomainError& e) {
      throw DomainError("agent " + std::to_string(i) + ": " + e.what());
    }
    const std::size_t a = pick_action(p, draws[i]);
    out.actions[i] = a;
    out.o[a] += 1.0;
    for (std::size_t j = 0; j < s.m; ++j) out.mean_policy[j] += p[j];
  }
  const double inv_n = 1.0 / static_cast<double>(s.n);
  for (std::size_t j = 0; j < s.m; ++j) {
    out.o[j] *= inv_n;
    out.mean_policy[j] *= inv_n;
  }
  const std::vector<double> r = game.rewards(out.o, static_cast<double>(s.t));
  for (std::size_t i = 0; i < s.n; ++i) {
    double& qa = s.q[i * s.m + out.actions[i]];
    qa = q_update(qa, r[out.actions[i]], alpha);
  }
  ++s.t;
  return out;
}

/// Plays one round drawing each agent's uniform from the state's own stream.
inline StepOutcome step(AbmState& s, const GameSpec& game, const Exploration& mech, double alpha) {
  std::vector<double> draws(s.n);
  for (auto& u : draws) u = s.rng.uniform();
  return step_with_draws(s, game, mech, alpha, draws);
}

/// Everything a single agent-based run needs besides its seed.
struct AbmSetup {
  GameSpec game = GameSpec::public_goods();
  Exploration mech;
  DistSpec init;
  std::size_t n_agents = 1000;
  int t_max = 300;
  double alpha = 0.05;
};

inline AbmState init_agents(const AbmSetup& setup, std::uint64_t seed) {
  if (setup.init.dims() != setup.game.actions()) throw UsageError("initial distribution has wrong dimension");
  AbmState s(setup.n_agents, setup.game.actions(), seed);
  for (std::size_t i = 0; i < s.n; ++i) {
    const QVector q = setup.init.sample(s.rng);
    std::copy(q.begin(), q.end(), s.agent(i).begin());
  }
  return s;
}

/// One seeded run: samples the initial population and records the realized
/// population state and the pre-update mean Q-values at t = 0..t_max
/// (t_max + 1 rounds of play).
inline Trajectory run(const AbmSetup& setup, std::uint64_t seed) {
  if (setup.t_max < 1) throw UsageError("t_max must be >= 1");
  if (!(setup.alpha > 0.0 && setup.alpha <= 1.0)) throw UsageError("alpha must lie in (0, 1]");
  AbmState s = init_agents(setup, seed);
#ifdef QPOP_CHECK_INVARIANTS
  Interval hull = setup.game.reward_bounds(setup.t_max);
  for (std::size_t j = 0; j < s.m; ++j) hull = hull.hull(setup.init.support(j));
#endif
  Trajectory traj;
  for (int t = 0; t <= setup.t_max; ++t) {
    QVector mq = s.mean_q();
    StepOutcome out = step(s, setup.game, setup.mech, setup.alpha);
    traj.push(t, std::move(out.o), std::move(mq));
#ifdef QPOP_CHECK_INVARIANTS
    for (double v : s.q)
      if (!(v >= hull.lo - 1e-12 && v <= hull.hi + 1e-12))
        throw ModelError("agent Q-value left the convex hull of initial values and rewards");
#endif
  }
  return traj;
}

struct EnsembleResult {
  Trajectory mean;
  Trajectory std;
  std::vector<Trajectory> runs;
};

/// Pointwise mean and sample standard deviation over `n_runs` seeded runs.
///
/// Run i uses split_seed(master_seed, i). Runs are spread over `workers`
/// threads but reduced in run-index order, so the result does not depend on
/// the worker count.
inline EnsembleResult ensemble(const AbmSetup& setup, std::size_t n_runs, std::uint64_t master_seed,
                               unsigned workers = 0) {
  if (n_runs < 1) throw UsageError("n_runs must be >= 1");
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_runs));

  EnsembleResult res;
  res.runs.resize(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n_runs; i += workers) {
      try {
        res.runs[i] = run(setup, split_seed(master_seed, i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::size_t len = res.runs.front().size();
  const std::size_t m = setup.game.actions();
  const double inv = 1.0 / static_cast<double>(n_runs);
  for (std::size_t k = 0; k < len; ++k) {
    std::vector<double> mo(m, 0.0), mq(m, 0.0), so(m, 0.0), sq(m, 0.0);
    for (const auto& r : res.runs)
      for (std::size_t j = 0; j < m; ++j) {
        mo[j] += r.o[k][j];
        mq[j] += r.mean_q[k][j];
      }
    for (std::size_t j = 0; j < m; ++j) {
      mo[j] *= inv;
      mq[j] *= inv;
    }
    if (n_runs > 1) {
      for (const auto& r : res.runs)
        for (std::size_t j = 0; j < m; ++j) {
          so[j] += (r.o[k][j] - mo[j]) * (r.o[k][j] - mo[j]);
          sq[j] += (r.mean_q[k][j] - mq[j]) * (r.mean_q[k][j] - mq[j]);
        }
      for (std::size_t j = 0; j < m; ++j) {
        so[j] = std::sqrt(so[j] / static_cast<double>(n_runs - 1));
        sq[j] = std::sqrt(sq[j] / static_cast<double>(n_runs - 1));
      }
    }
    const double t = res.runs.front().times[k];
    res.mean.push(t, std::move(mo), std::move(mq));
    res.std.push(t, std::move(so), std::move(sq));
  }
  return res;
}

}  // namespace qpop
