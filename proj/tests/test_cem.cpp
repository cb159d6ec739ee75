#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "qpop/cem.hpp"
#include "qpop/odes.hpp"
#include "qpop/random.hpp"

using namespace qpop;

namespace {

Grid square(double lo, double hi, std::size_t n) { return Grid{Axis{lo, hi, n}, Axis{lo, hi, n}}; }

DistSpec fig1b_init() { return DistSpec({Marginal::beta(15, 30, -1.5, 1.5), Marginal::beta(10, 10, -1.5, 1.5)}); }

DistSpec gaussian(double sigma) {
  return DistSpec({Marginal::truncated_normal(4, sigma, 4 - 4 * sigma, 4 + 4 * sigma),
                   Marginal::truncated_normal(4, sigma, 4 - 4 * sigma, 4 + 4 * sigma)});
}

// Constant velocity (c1, c2) on interior faces, zero on the walls.
VelocityField constant_field(const Grid& g, double c1, double c2) {
  const std::size_t n1 = g.q1.n, n2 = g.q2.n;
  VelocityField v{g, std::vector<double>((n1 + 1) * n2, 0.0), std::vector<double>(n1 * (n2 + 1), 0.0)};
  for (std::size_t i2 = 0; i2 < n2; ++i2)
    for (std::size_t i1 = 1; i1 < n1; ++i1) v.face1[i2 * (n1 + 1) + i1] = c1;
  for (std::size_t i2 = 1; i2 < n2; ++i2)
    for (std::size_t i1 = 0; i1 < n1; ++i1) v.face2[i2 * n1 + i1] = c2;
  return v;
}

double sup_gap(const Trajectory& a, const Trajectory& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) s = std::max(s, std::abs(a.o[k][0] - b.o[k][0]));
  return s;
}

}  // namespace

TEST(Cem, InitDensityUniformBox) {
  const auto f = init_density(square(-0.5, 1.5, 256), DistSpec({Marginal::uniform(0, 1), Marginal::uniform(0, 1)}));
  EXPECT_NEAR(f.mass(), 1.0, 1e-14);
  const Grid& g = f.grid;
  for (std::size_t i2 = 0; i2 < 256; ++i2)
    for (std::size_t i1 = 0; i1 < 256; ++i1) {
      const double q1 = g.q1.center(i1), q2 = g.q2.center(i2);
      const double v = f.values[g.index(i1, i2)];
      if (q1 > 0 && q1 < 1 && q2 > 0 && q2 < 1)
        EXPECT_NEAR(v, 1.0, 1e-12);
      else
        EXPECT_EQ(v, 0.0);
    }
  const auto mu = mean_q(f);
  EXPECT_NEAR(mu[0], 0.5, 1e-3);
  EXPECT_NEAR(mu[1], 0.5, 1e-3);
}

TEST(Cem, InitDensityBetaMeans) {
  const Grid g = square(-1.75, 1.75, 256);
  const auto sym = init_density(g, DistSpec({Marginal::beta(10, 10, -1.5, 1.5), Marginal::beta(10, 10, -1.5, 1.5)}));
  EXPECT_NEAR(mean_q(sym)[0], 0.0, 1e-3);
  EXPECT_NEAR(mean_q(sym)[1], 0.0, 1e-3);
  const auto f = init_density(g, fig1b_init());
  EXPECT_NEAR(mean_q(f)[0], -0.5, 1e-3);
  EXPECT_NEAR(mean_q(f)[1], 0.0, 1e-3);
  EXPECT_NEAR(f.mass(), 1.0, 1e-14);
}

TEST(Cem, InitDensityErrors) {
  EXPECT_THROW(init_density(square(-2, 2, 64), DistSpec({Marginal::point(1), Marginal::uniform(0, 1)})),
               UnsupportedError);
  EXPECT_THROW(init_density(square(-1, 1, 64), DistSpec({Marginal::uniform(0, 2), Marginal::uniform(0, 1)})),
               ConfigError);
  EXPECT_THROW(init_density(square(-1, 1, 8), DistSpec({Marginal::uniform(0, 1), Marginal::uniform(0, 1)})),
               UsageError);
}

TEST(Cem, FittedGridCoversRewardsAndSupport) {
  const auto g = Grid::fit(GameSpec::public_goods(), gaussian(0.2), 300);
  EXPECT_LE(g.q1.lo, -0.5 - 0.25);
  EXPECT_GE(g.q1.hi, 4.8 + 0.25);
  EXPECT_LE(g.q2.lo, -0.5 - 0.25);
  EXPECT_EQ(g.q1.n, 256u);
  EXPECT_THROW(Grid::fit(GameSpec::public_goods(), gaussian(0.2), 300, 8), UsageError);
}

TEST(Cem, PopulationStateSymmetry) {
  const auto f = init_density(square(-1.75, 1.75, 128),
                              DistSpec({Marginal::beta(4, 7, -1.5, 1.5), Marginal::beta(4, 7, -1.5, 1.5)}));
  double renorm = 1.0;
  const auto o = population_state(f, Exploration::boltzmann(3), &renorm);
  EXPECT_NEAR(o[0], 0.5, 1e-9);
  EXPECT_LT(renorm, 1e-6);
  EXPECT_NEAR(o[0] + o[1], 1.0, 1e-15);
}

TEST(Cem, PopulationStateConcentratedRegion) {
  // All mass where q1 - q2 >= 2.
  const auto f = init_density(square(-2, 2, 128), DistSpec({Marginal::uniform(1.0, 1.5), Marginal::uniform(-1.5, -1.0)}));
  const auto o = population_state(f, Exploration::boltzmann(3));
  EXPECT_GE(o[0], 1.0 / (1.0 + std::exp(-6.0)) - 1e-6);
}

TEST(Cem, PopulationStateMatchesMonteCarlo) {
  const auto init = fig1b_init();
  const auto f = init_density(Grid::fit(GameSpec::time_varying_product_choice(), init, 300), init);
  const double o1 = population_state(f, Exploration::boltzmann(3))[0];
  RandomStream rng(31);
  double mc = 0.0;
  constexpr int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const auto q = init.sample(rng);
    mc += boltzmann_p1(q[0], q[1], 3);
  }
  EXPECT_NEAR(o1, mc / n, 2e-3);
}

TEST(Cem, VelocityExamples) {
  const auto g = GameSpec::public_goods();
  const auto v = cell_velocity(std::vector<double>{4, 4}, std::vector<double>{0.5, 0.5}, g, Exploration::boltzmann(3), 0.1, 0);
  EXPECT_NEAR(v[0], -0.1875, 1e-15);
  EXPECT_NEAR(v[1], -0.1625, 1e-15);

  const Grid grid = square(-1, 1, 16);  // faces every 0.125
  const auto zero = velocity_field(grid, std::vector<double>{0.5, 0.5}, g, Exploration::boltzmann(3), 0.0, 0);
  for (double x : zero.face1) EXPECT_EQ(x, 0.0);
  for (double x : zero.face2) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(zero.cfl_rate(), 0.0);

  // R1 = 0.25 at o1 = 0.5: the q1-face at 0.25 (index 10) carries no flux.
  const auto vf = velocity_field(grid, std::vector<double>{0.5, 0.5}, g, Exploration::boltzmann(3), 0.1, 0);
  for (std::size_t i2 = 0; i2 < 16; ++i2) {
    EXPECT_EQ(vf.face1[i2 * 17 + 10], 0.0);
    EXPECT_GT(vf.face1[i2 * 17 + 9], 0.0);
    EXPECT_LT(vf.face1[i2 * 17 + 11], 0.0);
    EXPECT_EQ(vf.face1[i2 * 17 + 0], 0.0);  // walls
    EXPECT_EQ(vf.face1[i2 * 17 + 16], 0.0);
  }
}

TEST(Cem, ZeroVelocityLeavesDensityUntouched) {
  const Grid g = square(-1.75, 1.75, 64);
  auto f = init_density(g, fig1b_init());
  const auto before = f.values;
  for (bool lim : {false, true}) {
    advect_step(f, constant_field(g, 0, 0), 0.1, AdvectOptions{lim, true, 0.9});
    EXPECT_EQ(f.values, before);
  }
}

TEST(Cem, ConstantVelocityTranslatesBlob) {
  const Grid g = square(-2, 2, 128);
  for (bool lim : {false, true}) {
    auto f = init_density(g, DistSpec({Marginal::beta(5, 5, -1, 0), Marginal::beta(5, 5, -0.5, 0.5)}));
    const auto start = mean_q(f);
    const auto v = constant_field(g, 0.3, -0.2);
    const double dt = 0.05;
    AdvectOptions opt{lim, true, 0.9};
    for (int k = 0; k < 40; ++k) {
      const double m0 = f.mass();
      const auto st = advect_step(f, v, dt, opt);
      opt.q1_first = !opt.q1_first;
      EXPECT_NEAR(f.mass(), m0, 1e-13);
      EXPECT_LT(st.clipped_mass, 1e-12);
      EXPECT_GE(f.min_value(), 0.0);
    }
    const auto end = mean_q(f);
    EXPECT_NEAR(end[0] - start[0], 0.3 * 2.0, g.q1.width());
    EXPECT_NEAR(end[1] - start[1], -0.2 * 2.0, g.q2.width());
  }
}

TEST(Cem, OneStepShiftsMean) {
  const Grid g = square(-2, 2, 128);
  auto f = init_density(g, DistSpec({Marginal::beta(5, 5, -1, 0), Marginal::beta(5, 5, -0.5, 0.5)}));
  const auto before = mean_q(f);
  advect_step(f, constant_field(g, 0.4, 0.0), 0.05);
  const auto after = mean_q(f);
  EXPECT_NEAR(after[0] - before[0], 0.4 * 0.05, 1e-12);
  EXPECT_NEAR(after[1], before[1], 1e-14);
}

TEST(Cem, CflViolationIsAnError) {
  const Grid g = square(-2, 2, 32);
  auto f = init_density(g, DistSpec({Marginal::uniform(-1, 1), Marginal::uniform(-1, 1)}));
  const auto v = constant_field(g, 1.0, 1.0);
  EXPECT_THROW(advect_step(f, v, 1.0), ModelError);
}

TEST(Cem, MeanDynamicsExamples) {
  const Grid g = square(-1.75, 1.75, 64);
  const auto f = init_density(g, fig1b_init());
  const auto game = GameSpec::product_choice();
  const auto md = mean_dynamics_rhs(f, game, Exploration::boltzmann(0), 0.1, 0);
  const auto o = population_state(f, Exploration::boltzmann(0));
  const auto mu = mean_q(f);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(md.do_dt[j], 0.0, 1e-15);
    EXPECT_NEAR(md.dq_dt[j], 0.1 * 0.5 * (game.reward(j, o, 0) - mu[j]), 1e-12);
  }

  // Mass concentrated on the fixed point of public goods barely moves.
  const double q1 = -0.226361714, q2 = 0.273638286;
  const Grid fine = square(-1, 1, 400);
  const auto point = init_density(fine, DistSpec({Marginal::uniform(q1 - 0.01, q1 + 0.01), Marginal::uniform(q2 - 0.01, q2 + 0.01)}));
  const auto md2 = mean_dynamics_rhs(point, GameSpec::public_goods(), Exploration::boltzmann(3), 0.1, 0);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(md2.do_dt[j], 0.0, 5e-4);
    EXPECT_NEAR(md2.dq_dt[j], 0.0, 5e-4);
  }
}

TEST(Cem, NarrowGaussianFollowsOde) {
  const auto game = GameSpec::public_goods();
  const auto mech = Exploration::boltzmann(3);
  const auto cem = cem_run(game, mech, gaussian(0.05), 0.1, 300).traj;
  const auto ode = homo_integrate(game, mech, std::vector<double>{4, 4}, 0.1, 300);
  EXPECT_LE(sup_gap(cem, ode), 0.01);
}

TEST(Cem, Fig1bConvergesToA2AndConserves) {
  CemOptions opt;
  opt.snapshot_times = {0, 10.5, 300};
  const auto res = cem_run(GameSpec::time_varying_product_choice(), Exploration::boltzmann(3), fig1b_init(), 0.1, 300, opt);
  EXPECT_LT(res.traj.o.back()[0], 0.1);
  res.traj.validate();
  ASSERT_EQ(res.traj.size(), 301u);
  for (double m : res.traj.extras.at("mass")) EXPECT_NEAR(m, 1.0, 1e-6);
  for (double v : res.traj.extras.at("min_density")) EXPECT_GE(v, 0.0);
  for (double c : res.traj.extras.at("clipped_mass")) EXPECT_LT(c, 1e-12);
  for (double r : res.traj.extras.at("renorm")) EXPECT_LT(r, 1e-6);
  ASSERT_EQ(res.snapshots.size(), 3u);
  EXPECT_EQ(res.snapshots[1].t, 10.5);
  EXPECT_TRUE(res.warnings.empty());
}

TEST(Cem, ElFarolSettlesNearSixtyPercent) {
  const DistSpec init({Marginal::beta(10, 10, -1.5, 1.5), Marginal::beta(10, 10, -1.5, 1.5)});
  const auto traj = cem_run(GameSpec::el_farol(), Exploration::boltzmann(3), init, 0.05, 300).traj;
  for (std::size_t t = 200; t <= 300; ++t) {
    EXPECT_GE(traj.o[t][1], 0.55);
    EXPECT_LE(traj.o[t][1], 0.65);
  }
}

TEST(Cem, MeanDynamicsMatchesTrajectory) {
  // Centered differences of the recorded o_1 and E[Q] against the moment
  // equations evaluated on snapshots.
  const auto game = GameSpec::time_varying_product_choice();
  const auto mech = Exploration::boltzmann(3);
  CemOptions opt;
  opt.snapshot_times = {5, 40, 120};
  const auto res = cem_run(game, mech, fig1b_init(), 0.1, 150, opt);
  const double h = res.grid.q1.width();
  for (const auto& snap : res.snapshots) {
    const auto k = static_cast<std::size_t>(snap.t);
    const auto md = mean_dynamics_rhs(snap, game, mech, 0.1, snap.t);
    const double tol = std::max(0.02, 5 * h);
    EXPECT_NEAR((res.traj.o[k + 1][0] - res.traj.o[k - 1][0]) / 2, md.do_dt[0], tol);
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_NEAR((res.traj.mean_q[k + 1][j] - res.traj.mean_q[k - 1][j]) / 2, md.dq_dt[j], 0.02 + 5 * h);
  }
}

TEST(Cem, BoundaryWarningOnTightGrid) {
  CemOptions opt;
  opt.grid = square(-1.5, 1.5, 64);
  const auto res = cem_run(GameSpec::public_goods(), Exploration::boltzmann(3),
                           DistSpec({Marginal::uniform(-1.5, 1.5), Marginal::uniform(-1.5, 1.5)}), 0.1, 5, opt);
  ASSERT_FALSE(res.warnings.empty());
  EXPECT_NE(res.warnings[0].find("boundary"), std::string::npos);
}

TEST(Cem, GridConvergenceFirstOrder) {
  const auto game = GameSpec::public_goods();
  const auto mech = Exploration::boltzmann(3);
  std::vector<Trajectory> tr;
  for (std::size_t n : {128u, 256u, 512u}) {
    CemOptions opt;
    opt.n = n;
    tr.push_back(cem_run(game, mech, gaussian(0.2), 0.1, 300, opt).traj);
  }
  EXPECT_GE(sup_gap(tr[0], tr[1]) / sup_gap(tr[1], tr[2]), 1.7);
}

TEST(Cem, LimiterIsMoreAccurate) {
  const auto game = GameSpec::public_goods();
  const auto mech = Exploration::boltzmann(3);
  const auto ode = homo_integrate(game, mech, std::vector<double>{4, 4}, 0.1, 300);
  CemOptions first, second;
  first.n = second.n = 128;
  second.limiter = true;
  const auto a = cem_run(game, mech, gaussian(0.05), 0.1, 300, first).traj;
  const auto b = cem_run(game, mech, gaussian(0.05), 0.1, 300, second).traj;
  EXPECT_LT(sup_gap(b, ode), sup_gap(a, ode));
  for (double m : b.extras.at("mass")) EXPECT_NEAR(m, 1.0, 1e-6);
  for (double v : b.extras.at("min_density")) EXPECT_GE(v, 0.0);
}

TEST(Cem, SnapshotFormat) {
  const Grid g = square(-1, 1, 16);
  auto f = init_density(g, DistSpec({Marginal::uniform(-0.5, 0.5), Marginal::uniform(-0.5, 0.5)}));
  f.t = 2.5;
  std::ostringstream os;
  write_snapshot(os, f);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "-1 1 -1 1 16 16 2.5");
  int rows = 0;
  double total = 0.0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    double v;
    int cols = 0;
    while (row >> v) {
      total += v;
      ++cols;
    }
    EXPECT_EQ(cols, 16);
    EXPECT_NE(line.find('e'), std::string::npos);
    ++rows;
  }
  EXPECT_EQ(rows, 16);
  EXPECT_NEAR(total * g.cell_area(), 1.0, 1e-8);
}

TEST(Cem, RejectsBadArguments) {
  EXPECT_THROW(cem_run(GameSpec::public_goods(), Exploration::boltzmann(3), gaussian(0.1), 0.0, 10), UsageError);
  EXPECT_THROW(cem_run(GameSpec::public_goods(), Exploration::boltzmann(3), gaussian(0.1), 0.1, 0), UsageError);
  EXPECT_THROW(cem_run(GameSpec::public_goods(), Exploration::boltzmann(3),
                       DistSpec({Marginal::point(4), Marginal::point(4)}), 0.1, 10),
               UnsupportedError);
}
