#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "qpop/dists.hpp"
#include "qpop/errors.hpp"
#include "qpop/explore.hpp"
#include "qpop/games.hpp"
#include "qpop/trajectory.hpp"

// Finite-volume solver for the transport of the population's Q-value density
//
//   d_t f + sum_j d_{q_j} [ f alpha p_j(q) (R(a_j, o_t, t) - q_j) ] = 0,
//   o_{j,t} = E[p_j(Q_t)],
//
// on a bounded two-action box with closed walls. Donor-cell upwind fluxes by
// default, optionally a minmod-limited second-order correction; dimensional
// splitting with alternating sweep order; o_t and the face velocities are
// refreshed every sub-step.

namespace qpop {

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 256;

  double width() const noexcept { return (hi - lo) / static_cast<double>(n); }
  double center(std::size_t i) const noexcept { return lo + (static_cast<double>(i) + 0.5) * width(); }
  double face(std::size_t i) const noexcept { return lo + static_cast<double>(i) * width(); }
};

struct Grid {
  Axis q1;
  Axis q2;

  std::size_t cells() const noexcept { return q1.n * q2.n; }
  double cell_area() const noexcept { return q1.width() * q2.width(); }
  std::size_t index(std::size_t i1, std::size_t i2) const noexcept { return i2 * q1.n + i1; }

  void validate() const {
    for (const Axis* a : {&q1, &q2}) {
      if (a->n < 16) throw UsageError("grid needs at least 16 cells per axis");
      if (!(a->lo < a->hi)) throw UsageError("grid axis needs lo < hi");
    }
  }

  /// Box covering the reward range over [0, t_max] and the initial support,
  /// padded by `pad` on every side.
  static Grid fit(const GameSpec& game, const DistSpec& init, double t_max, std::size_t n = 256,
                  double pad = 0.25) {
    if (game.actions() != 2 || init.dims() != 2)
      throw UnsupportedError("the density solver handles two actions only");
    const Interval rb = game.reward_bounds(t_max);
    Grid g;
    Axis* axes[2] = {&g.q1, &g.q2};
    for (std::size_t j = 0; j < 2; ++j) {
      const Interval box = rb.hull(init.support(j));
      *axes[j] = Axis{box.lo - pad, box.hi + pad, n};
    }
    g.validate();
    return g;
  }
};

/// Cell-averaged probability density; values are row-major with q1 varying
/// fastest (index = i2 * N1 + i1).
struct DensityField {
  Grid grid;
  std::vector<double> values;
  double t = 0.0;

  double mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_area();
  }

  double min_value() const { return *std::min_element(values.begin(), values.end()); }

  /// Mass in the outermost ring of cells.
  double boundary_mass() const {
    const std::size_t n1 = grid.q1.n, n2 = grid.q2.n;
    double s = 0.0;
    for (std::size_t i1 = 0; i1 < n1; ++i1) s += values[grid.index(i1, 0)] + values[grid.index(i1, n2 - 1)];
    for (std::size_t i2 = 1; i2 + 1 < n2; ++i2) s += values[grid.index(0, i2)] + values[grid.index(n1 - 1, i2)];
    return s * grid.cell_area();
  }
};

/// Samples the initial density at cell centers and rescales it to unit mass.
inline DensityField init_density(const Grid& grid, const DistSpec& dist) {
  grid.validate();
  if (dist.dims() != 2) throw UnsupportedError("the density solver handles two actions only");
  if (dist.has_point())
    throw UnsupportedError("point initial condition: use the homogeneous ODE reduction instead of the density solver");
  const Axis* axes[2] = {&grid.q1, &grid.q2};
  for (std::size_t j = 0; j < 2; ++j)
    if (dist.support(j).lo < axes[j]->lo || dist.support(j).hi > axes[j]->hi)
      throw ConfigError("initial distribution support exceeds the grid domain");
  DensityField f{grid, std::vector<double>(grid.cells()), 0.0};
  double q[2];
  for (std::size_t i2 = 0; i2 < grid.q2.n; ++i2) {
    q[1] = grid.q2.center(i2);
    for (std::size_t i1 = 0; i1 < grid.q1.n; ++i1) {
      q[0] = grid.q1.center(i1);
      f.values[grid.index(i1, i2)] = dist.density(q);
    }
  }
  const double mass = f.mass();
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw ConfigError("initial density has no resolvable mass on this grid (support narrower than a cell?)");
  for (double& v : f.values) v /= mass;
  return f;
}

inline QVector mean_q(const DensityField& f) {
  const Grid& g = f.grid;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i2 = 0; i2 < g.q2.n; ++i2)
    for (std::size_t i1 = 0; i1 < g.q1.n; ++i1) {
      const double v = f.values[g.index(i1, i2)];
      s1 += v * g.q1.center(i1);
      s2 += v * g.q2.center(i2);
    }
  return {s1 * g.cell_area(), s2 * g.cell_area()};
}

/// Policy of every cell center, stored as p_1 (p_2 = 1 - p_1 is never
/// materialized separately to keep the two exactly complementary).
inline std::vector<double> center_policy(const Grid& g, const Exploration& mech) {
  std::vector<double> p1(g.cells());
  double q[2], p[2];
  for (std::size_t i2 = 0; i2 < g.q2.n; ++i2) {
    q[1] = g.q2.center(i2);
    for (std::size_t i1 = 0; i1 < g.q1.n; ++i1) {
      q[0] = g.q1.center(i1);
      policy_into(q, mech, p);
      p1[g.index(i1, i2)] = p[0];
    }
  }
  return p1;
}

namespace detail {

inline PopulationState population_state(const DensityField& f, std::span<const double> p1, double* renorm) {
  double s1 = 0.0, s2 = 0.0;
  const double* v = f.values.data();
#pragma omp simd reduction(+ : s1, s2)
  for (std::size_t c = 0; c < f.values.size(); ++c) {
    s1 += v[c] * p1[c];
    s2 += v[c] * (1.0 - p1[c]);
  }
  const double a = f.grid.cell_area();
  s1 *= a;
  s2 *= a;
  const double total = s1 + s2;
  if (renorm) *renorm = std::abs(total - 1.0);
  return {s1 / total, s2 / total};
}

}  // namespace detail

/// o_j = E[p_j(Q)] by cell-center quadrature, renormalized to sum to one.
/// The size of that correction is written to `renorm` when given.
inline PopulationState population_state(const DensityField& f, const Exploration& mech, double* renorm = nullptr) {
  return detail::population_state(f, center_policy(f.grid, mech), renorm);
}

/// alpha p_j(q) (R(a_j, o, t) - q_j) at a single point.
inline QVector cell_velocity(std::span<const double> q, std::span<const double> o, const GameSpec& game,
                             const Exploration& mech, double alpha, double t) {
  const PolicyVector p = policy(q, mech);
  QVector v(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) v[j] = alpha * p[j] * (game.reward(j, o, t) - q[j]);
  return v;
}

/// Velocities on cell faces. face1 has (N1 + 1) x N2 entries (faces normal to
/// q1, index i2 * (N1 + 1) + i1f); face2 has N1 x (N2 + 1) entries (index
/// i2f * N1 + i1). Wall faces carry zero velocity.
struct VelocityField {
  Grid grid;
  std::vector<double> face1;
  std::vector<double> face2;

  /// max over cells of |v1|/h1 + |v2|/h2, each taken as the larger of the
  /// cell's two faces on that axis. dt * cfl_rate() is the Courant number.
  double cfl_rate() const {
    const std::size_t n1 = grid.q1.n, n2 = grid.q2.n;
    const double inv_h1 = 1.0 / grid.q1.width(), inv_h2 = 1.0 / grid.q2.width();
    double rate = 0.0;
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
      const double* u = face1.data() + i2 * (n1 + 1);
      const double* w_lo = face2.data() + i2 * n1;
      const double* w_hi = face2.data() + (i2 + 1) * n1;
#pragma omp simd reduction(max : rate)
      for (std::size_t i1 = 0; i1 < n1; ++i1) {
        const double a = std::max(std::abs(u[i1]), std::abs(u[i1 + 1])) * inv_h1;
        const double b = std::max(std::abs(w_lo[i1]), std::abs(w_hi[i1])) * inv_h2;
        rate = std::max(rate, a + b);
      }
    }
    return rate;
  }
};

/// Face-averaged policies, reused every sub-step because p depends on q only.
struct FacePolicy {
  std::vector<double> p1;  ///< on q1-normal faces
  std::vector<double> p2;  ///< on q2-normal faces
  std::vector<double> q1_face;
  std::vector<double> q2_face;

  static FacePolicy build(const Grid& g, std::span<const double> center_p1) {
    const std::size_t n1 = g.q1.n, n2 = g.q2.n;
    FacePolicy fp{std::vector<double>((n1 + 1) * n2, 0.0), std::vector<double>(n1 * (n2 + 1), 0.0),
                  std::vector<double>(n1 + 1), std::vector<double>(n2 + 1)};
    for (std::size_t i = 0; i <= n1; ++i) fp.q1_face[i] = g.q1.face(i);
    for (std::size_t i = 0; i <= n2; ++i) fp.q2_face[i] = g.q2.face(i);
    for (std::size_t i2 = 0; i2 < n2; ++i2)
      for (std::size_t i1 = 1; i1 < n1; ++i1)
        fp.p1[i2 * (n1 + 1) + i1] = 0.5 * (center_p1[g.index(i1 - 1, i2)] + center_p1[g.index(i1, i2)]);
    for (std::size_t i2 = 1; i2 < n2; ++i2)
      for (std::size_t i1 = 0; i1 < n1; ++i1)
        fp.p2[i2 * n1 + i1] =
            0.5 * ((1.0 - center_p1[g.index(i1, i2 - 1)]) + (1.0 - center_p1[g.index(i1, i2)]));
    return fp;
  }
};

namespace detail {

/// Face velocities for rewards (r1, r2). Wall faces are left at zero (their
/// face policies are zero).
inline void fill_velocity(VelocityField& v, const FacePolicy& fp, double r1, double r2, double alpha) {
  const Grid& g = v.grid;
  const std::size_t n1 = g.q1.n, n2 = g.q2.n;
  v.face1.resize((n1 + 1) * n2);
  v.face2.resize(n1 * (n2 + 1));
  std::vector<double> drift1(n1 + 1);
  for (std::size_t i = 0; i <= n1; ++i) drift1[i] = alpha * (r1 - fp.q1_face[i]);
  for (std::size_t i2 = 0; i2 < n2; ++i2) {
    const double* p = fp.p1.data() + i2 * (n1 + 1);
    double* out = v.face1.data() + i2 * (n1 + 1);
#pragma omp simd
    for (std::size_t i1 = 0; i1 <= n1; ++i1) out[i1] = p[i1] * drift1[i1];
  }
  for (std::size_t i2 = 0; i2 <= n2; ++i2) {
    const double drift = alpha * (r2 - fp.q2_face[i2]);
    const double* p = fp.p2.data() + i2 * n1;
    double* out = v.face2.data() + i2 * n1;
#pragma omp simd
    for (std::size_t i1 = 0; i1 < n1; ++i1) out[i1] = p[i1] * drift;
  }
}

}  // namespace detail

/// Drift field for population state `o` at time `t`; face velocities use the
/// average of the two adjacent cell-center policies.
inline VelocityField velocity_field(const Grid& grid, std::span<const double> o, const GameSpec& game,
                                    const Exploration& mech, double alpha, double t) {
  if (game.actions() != 2) throw UnsupportedError("the density solver handles two actions only");
  const std::vector<double> p1 = center_policy(grid, mech);
  VelocityField v{grid, {}, {}};
  detail::fill_velocity(v, FacePolicy::build(grid, p1), game.reward(0, o, t), game.reward(1, o, t), alpha);
  return v;
}

struct AdvectOptions {
  bool limiter = false;       ///< minmod-limited second-order correction
  bool q1_first = true;       ///< sweep order
  double max_courant = 0.9;
};

struct AdvectStats {
  double clipped_mass = 0.0;  ///< mass removed by clipping negative cells
};

namespace detail {

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

/// Flux through a face with velocity u between cells (ll, l | r, rr).
template <bool Limiter>
inline double face_flux(double u, double lambda, double ll, double l, double r, double rr) {
  if constexpr (!Limiter) {
    return std::max(u, 0.0) * l + std::min(u, 0.0) * r;
  } else {
    if (u > 0.0) return u * (l + 0.5 * (1.0 - u * lambda) * minmod(l - ll, r - l));
    if (u < 0.0) return u * (r - 0.5 * (1.0 + u * lambda) * minmod(r - l, rr - r));
    return 0.0;
  }
}

/// Conservative update along q1 (rows are contiguous).
template <bool Limiter>
void sweep_q1(DensityField& f, const VelocityField& v, double dt, std::vector<double>& flux) {
  const Grid& g = f.grid;
  const std::size_t n1 = g.q1.n, n2 = g.q2.n;
  const double lambda = dt / g.q1.width();
  flux.assign(n1 + 1, 0.0);
  double* fl = flux.data();
  for (std::size_t i2 = 0; i2 < n2; ++i2) {
    double* row = f.values.data() + i2 * n1;
    const double* u = v.face1.data() + i2 * (n1 + 1);
    if constexpr (!Limiter) {
#pragma omp simd
      for (std::size_t i = 1; i < n1; ++i) fl[i] = std::max(u[i], 0.0) * row[i - 1] + std::min(u[i], 0.0) * row[i];
    } else {
      for (std::size_t i = 1; i < n1; ++i) {
        const double ll = i >= 2 ? row[i - 2] : 0.0;
        const double rr = i + 1 < n1 ? row[i + 1] : 0.0;
        fl[i] = face_flux<true>(u[i], lambda, ll, row[i - 1], row[i], rr);
      }
    }
#pragma omp simd
    for (std::size_t i = 0; i < n1; ++i) row[i] -= lambda * (fl[i + 1] - fl[i]);
  }
}

/// Conservative update along q2, a face row at a time so memory is walked
/// contiguously.
template <bool Limiter>
void sweep_q2(DensityField& f, const VelocityField& v, double dt, std::vector<double>& flux) {
  const Grid& g = f.grid;
  const std::size_t n1 = g.q1.n, n2 = g.q2.n;
  const double lambda = dt / g.q2.width();
  flux.assign((n2 + 1) * n1, 0.0);
  const double* val = f.values.data();
  for (std::size_t i2 = 1; i2 < n2; ++i2) {
    const double* lo = val + (i2 - 1) * n1;
    const double* hi = val + i2 * n1;
    const double* u = v.face2.data() + i2 * n1;
    double* fl = flux.data() + i2 * n1;
    if constexpr (!Limiter) {
#pragma omp simd
      for (std::size_t i1 = 0; i1 < n1; ++i1) fl[i1] = std::max(u[i1], 0.0) * lo[i1] + std::min(u[i1], 0.0) * hi[i1];
    } else {
      const double* lolo = i2 >= 2 ? val + (i2 - 2) * n1 : nullptr;
      const double* hihi = i2 + 1 < n2 ? val + (i2 + 1) * n1 : nullptr;
      for (std::size_t i1 = 0; i1 < n1; ++i1)
        fl[i1] = face_flux<true>(u[i1], lambda, lolo ? lolo[i1] : 0.0, lo[i1], hi[i1], hihi ? hihi[i1] : 0.0);
    }
  }
  for (std::size_t i2 = 0; i2 < n2; ++i2) {
    double* row = f.values.data() + i2 * n1;
    const double* below = flux.data() + i2 * n1;
    const double* above = flux.data() + (i2 + 1) * n1;
#pragma omp simd
    for (std::size_t i1 = 0; i1 < n1; ++i1) row[i1] -= lambda * (above[i1] - below[i1]);
  }
}

template <bool Limiter>
void split_step(DensityField& f, const VelocityField& v, double dt, bool q1_first, std::vector<double>& flux) {
  if (q1_first) {
    sweep_q1<Limiter>(f, v, dt, flux);
    sweep_q2<Limiter>(f, v, dt, flux);
  } else {
    sweep_q2<Limiter>(f, v, dt, flux);
    sweep_q1<Limiter>(f, v, dt, flux);
  }
}

}  // namespace detail

/// One split finite-volume step of length dt. Throws ModelError when dt
/// violates the CFL bound; callers sub-cycle instead. `cfl_rate` may pass a
/// precomputed v.cfl_rate().
inline AdvectStats advect_step(DensityField& f, const VelocityField& v, double dt, const AdvectOptions& opt = {},
                               double cfl_rate = -1.0) {
  const Grid& g = f.grid;
  if (cfl_rate < 0.0) cfl_rate = v.cfl_rate();
  if (dt * cfl_rate > opt.max_courant * (1.0 + 1e-12))
    throw ModelError("advect_step: CFL bound violated (dt = " + std::to_string(dt) + ")");
  thread_local std::vector<double> flux;
  if (opt.limiter)
    detail::split_step<true>(f, v, dt, opt.q1_first, flux);
  else
    detail::split_step<false>(f, v, dt, opt.q1_first, flux);

  AdvectStats stats;
  double lowest = 0.0;
#pragma omp simd reduction(min : lowest)
  for (std::size_t c = 0; c < f.values.size(); ++c) lowest = std::min(lowest, f.values[c]);
  if (lowest < 0.0) {
    // Clipping adds mass; scale back to the pre-clip total.
    double negative = 0.0, total = 0.0;
    for (double& x : f.values) {
      if (x < 0.0) {
        negative -= x;
        x = 0.0;
      }
      total += x;
    }
    stats.clipped_mass = negative * g.cell_area();
    const double scale = (total - negative) / total;
    for (double& x : f.values) x *= scale;
  }
  f.t += dt;
  return stats;
}

struct MeanDynamics {
  std::vector<double> do_dt;   ///< d o_k / dt
  std::vector<double> dq_dt;   ///< d E[Q_j] / dt
};

/// Moment equations by cell-center quadrature:
///   dE[Q_j]/dt = alpha int f p_j (R_j - q_j) dq
///   do_k/dt    = alpha sum_j int f p_j (R_j - q_j) dp_k/dq_j dq
inline MeanDynamics mean_dynamics_rhs(const DensityField& f, const GameSpec& game, const Exploration& mech,
                                      double alpha, double t) {
  const Grid& g = f.grid;
  const PopulationState o = population_state(f, mech);
  const double r[2] = {game.reward(0, o, t), game.reward(1, o, t)};
  MeanDynamics md{{0.0, 0.0}, {0.0, 0.0}};
  double q[2];
  for (std::size_t i2 = 0; i2 < g.q2.n; ++i2) {
    q[1] = g.q2.center(i2);
    for (std::size_t i1 = 0; i1 < g.q1.n; ++i1) {
      const double w = f.values[g.index(i1, i2)];
      if (w == 0.0) continue;
      q[0] = g.q1.center(i1);
      const PolicyVector p = policy(q, mech);
      const std::vector<double> grad = policy_grad(q, mech);
      for (std::size_t j = 0; j < 2; ++j) {
        const double drift = w * p[j] * (r[j] - q[j]);
        md.dq_dt[j] += drift;
        for (std::size_t k = 0; k < 2; ++k) md.do_dt[k] += drift * grad[j * 2 + k];
      }
    }
  }
  const double scale = alpha * g.cell_area();
  for (auto* vec : {&md.do_dt, &md.dq_dt})
    for (double& x : *vec) x *= scale;
  return md;
}

/// Sets flush-to-zero / denormals-are-zero for the current thread while in
/// scope. Upwind transport leaves exponentially small tails whose subnormal
/// arithmetic is otherwise several times slower than the rest of the solve.
class ScopedFlushDenormals {
 public:
#if defined(__SSE2__)
  ScopedFlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~ScopedFlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#else
  ScopedFlushDenormals() = default;
#endif
 public:
  ScopedFlushDenormals(const ScopedFlushDenormals&) = delete;
  ScopedFlushDenormals& operator=(const ScopedFlushDenormals&) = delete;
};

struct CemOptions {
  std::size_t n = 256;                ///< cells per axis when the grid is fitted
  std::optional<Grid> grid;           ///< explicit grid; fitted when empty
  bool limiter = false;
  double cfl = 0.9;
  double max_dt = 0.1;
  double pad = 0.25;
  std::vector<double> snapshot_times;
  double boundary_warn = 1e-4;
};

struct CemResult {
  Grid grid;
  Trajectory traj;
  std::vector<DensityField> snapshots;
  std::vector<std::string> warnings;
};

/// Solves the density transport over [0, t_max], recording o and E[Q] at
/// integer times. Extras: "mass", "min_density", "clipped_mass" (largest per
/// sub-step since the previous sample), "renorm" (population-state
/// normalization correction), "boundary_mass".
inline CemResult cem_run(const GameSpec& game, const Exploration& mech, const DistSpec& init, double alpha,
                         int t_max, const CemOptions& opt = {}) {
  if (t_max < 1) throw UsageError("t_max must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in (0, 1]");
  ScopedFlushDenormals ftz;
  CemResult res;
  res.grid = opt.grid ? *opt.grid : Grid::fit(game, init, t_max, opt.n, opt.pad);
  DensityField f = init_density(res.grid, init);
  const Grid& g = res.grid;

  const std::vector<double> p1 = center_policy(g, mech);
  const FacePolicy fp = FacePolicy::build(g, p1);
  VelocityField v{g, {}, {}};

  std::vector<double> snaps = opt.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  auto take_snapshot = [&](double t) {
    for (double s : snaps)
      if (s == t) {
        DensityField copy = f;
        copy.t = t;
        res.snapshots.push_back(std::move(copy));
        return;
      }
  };

  double clipped_since = 0.0;
  bool warned = false;
  auto record = [&](double t) {
    double renorm = 0.0;
    PopulationState o = detail::population_state(f, p1, &renorm);
    res.traj.push(t, std::move(o), mean_q(f));
    res.traj.push_extra("mass", f.mass());
    res.traj.push_extra("min_density", f.min_value());
    res.traj.push_extra("clipped_mass", clipped_since);
    res.traj.push_extra("renorm", renorm);
    const double bm = f.boundary_mass();
    res.traj.push_extra("boundary_mass", bm);
    if (bm > opt.boundary_warn && !warned) {
      res.warnings.push_back("boundary-adjacent mass " + std::to_string(bm) + " at t = " + std::to_string(t) +
                             "; the grid may be too small");
      warned = true;
    }
    clipped_since = 0.0;
  };

  record(0.0);
  take_snapshot(0.0);
  AdvectOptions aopt{opt.limiter, true, opt.cfl};
  for (int k = 0; k < t_max; ++k) {
    std::vector<double> cuts;
    for (double b : game.breakpoints())
      if (b > k && b < k + 1) cuts.push_back(b);
    for (double s : snaps)
      if (s > k && s < k + 1) cuts.push_back(s);
    cuts.push_back(static_cast<double>(k + 1));
    std::sort(cuts.begin(), cuts.end());
    double t = k;
    for (double end : cuts) {
      while (t < end) {
        const PopulationState o = detail::population_state(f, p1, nullptr);
        const double te = step_start_time(game, t);
        detail::fill_velocity(v, fp, game.reward(0, o, te), game.reward(1, o, te), alpha);
        const double rate = v.cfl_rate();
        double dt = std::min(opt.max_dt, end - t);
        if (rate > 0.0) dt = std::min(dt, opt.cfl / rate);
        const bool last = dt >= end - t;
        const AdvectStats st = advect_step(f, v, dt, aopt, rate);
        aopt.q1_first = !aopt.q1_first;
        clipped_since = std::max(clipped_since, st.clipped_mass);
        t = last ? end : t + dt;
      }
      if (end < k + 1) take_snapshot(end);
    }
    f.t = k + 1;
    record(k + 1);
    take_snapshot(k + 1);
  }
  return res;
}

/// Writes a density snapshot: header `q1_lo q1_hi q2_lo q2_hi N1 N2 t`, then
/// one line per grid row (fixed q2), values in scientific notation.
inline void write_snapshot(std::ostream& os, const DensityField& f) {
  const Grid& g = f.grid;
  os << std::setprecision(17) << g.q1.lo << ' ' << g.q1.hi << ' ' << g.q2.lo << ' ' << g.q2.hi << ' ' << g.q1.n
     << ' ' << g.q2.n << ' ' << f.t << '\n';
  os << std::scientific << std::setprecision(9);
  for (std::size_t i2 = 0; i2 < g.q2.n; ++i2) {
    for (std::size_t i1 = 0; i1 < g.q1.n; ++i1) {
      if (i1) os << ' ';
      os << f.values[g.index(i1, i2)];
    }
    os << '\n';
  }
  os << std::defaultfloat;
}

}  // namespace qpop
