#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qpop/abm.hpp"
#include "qpop/cem.hpp"
#include "qpop/errors.hpp"
#include "qpop/harness/config.hpp"
#include "qpop/harness/csv.hpp"
#include "qpop/harness/svg.hpp"
#include "qpop/odes.hpp"
#include "qpop/random.hpp"
#include "qpop/rem.hpp"

namespace qpop::harness {

/// Outcome of one model within a comparison.
struct ModelOutcome {
  std::string name;
  std::optional<Trajectory> traj;  ///< empty when the model failed
  std::optional<Trajectory> spread;  ///< ABM only: per-time sample std
  std::string error;
  double runtime_seconds = 0.0;
  std::vector<std::string> warnings;
  std::map<std::string, double> diagnostics;
  std::optional<double> sup_gap, final_gap;  ///< against the ABM mean o_1
};

struct CompareResult {
  std::vector<ModelOutcome> models;  ///< in the order abm, cem, rem, ode
  std::vector<DensityField> snapshots;
  int t_max = 0;

  const ModelOutcome* find(const std::string& name) const {
    for (const auto& m : models)
      if (m.name == name) return &m;
    return nullptr;
  }
  bool any_failed() const {
    for (const auto& m : models)
      if (!m.traj) return true;
    return false;
  }
};

/// o(0) implied by the initial distribution: p(q0) for a point start, the
/// grid quadrature of E[p(Q)] for two-action densities, and otherwise a
/// fixed-seed Monte Carlo estimate.
inline PopulationState initial_state(const ExperimentConfig& cfg) {
  if (cfg.init.all_point()) return policy(cfg.init.mean(), cfg.mech);
  if (!cfg.init.has_point() && cfg.game.actions() == 2) {
    const Grid g = Grid::fit(cfg.game, cfg.init, cfg.t_max, cfg.cem.resolution());
    return population_state(init_density(g, cfg.init), cfg.mech);
  }
  RandomStream rng(split_seed(cfg.abm.master_seed, ~std::uint64_t{0}));
  const std::size_t m = cfg.game.actions();
  PopulationState o(m, 0.0);
  constexpr int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const PolicyVector p = policy(cfg.init.sample(rng), cfg.mech);
    for (std::size_t j = 0; j < m; ++j) o[j] += p[j];
  }
  for (double& v : o) v /= draws;
  return o;
}

namespace detail {

template <class F>
ModelOutcome timed(const std::string& name, F&& body) {
  ModelOutcome out;
  out.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.traj.reset();
    out.spread.reset();
    out.error = e.what();
  }
  out.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline double extreme(const std::vector<double>& v, bool want_max) {
  return want_max ? *std::max_element(v.begin(), v.end()) : *std::min_element(v.begin(), v.end());
}

}  // namespace detail

/// Runs every selected model. A model that throws is recorded with its
/// error and the others still run.
inline CompareResult compare(const ExperimentConfig& cfg, unsigned workers = 0) {
  CompareResult res;
  res.t_max = cfg.t_max;
  for (const auto& name : known_models()) {
    if (!cfg.wants(name)) continue;
    if (name == "abm") {
      res.models.push_back(detail::timed(name, [&](ModelOutcome& out) {
        AbmSetup setup{cfg.game, cfg.mech, cfg.init, cfg.abm.n_agents, cfg.t_max, cfg.alpha};
        EnsembleResult ens = ensemble(setup, cfg.abm.n_runs, cfg.abm.master_seed, workers);
        std::size_t stuck = 0;
        for (const auto& r : ens.runs) stuck += r.o.back()[0] >= 0.1 ? 1 : 0;
        out.diagnostics["runs_final_o1_ge_0.1"] = static_cast<double>(stuck);
        out.traj = std::move(ens.mean);
        out.spread = std::move(ens.std);
      }));
    } else if (name == "cem") {
      res.models.push_back(detail::timed(name, [&](ModelOutcome& out) {
        CemOptions opt;
        opt.n = cfg.cem.resolution();
        opt.limiter = cfg.cem.limiter;
        opt.snapshot_times = cfg.cem.snapshot_times;
        CemResult r = cem_run(cfg.game, cfg.mech, cfg.init, cfg.alpha, cfg.t_max, opt);
        const auto& mass = r.traj.extras.at("mass");
        double mass_err = 0.0;
        for (double v : mass) mass_err = std::max(mass_err, std::abs(v - 1.0));
        out.diagnostics["max_mass_error"] = mass_err;
        out.diagnostics["min_density"] = detail::extreme(r.traj.extras.at("min_density"), false);
        out.diagnostics["max_clipped_mass"] = detail::extreme(r.traj.extras.at("clipped_mass"), true);
        out.diagnostics["max_boundary_mass"] = detail::extreme(r.traj.extras.at("boundary_mass"), true);
        out.diagnostics["grid_n"] = static_cast<double>(r.grid.q1.n);
        out.warnings = std::move(r.warnings);
        res.snapshots = std::move(r.snapshots);
        out.traj = std::move(r.traj);
      }));
    } else if (name == "rem") {
      res.models.push_back(detail::timed(name, [&](ModelOutcome& out) {
        Trajectory t = rem_integrate(cfg.game, cfg.mech, initial_state(cfg), cfg.alpha, cfg.t_max);
        out.diagnostics["max_simplex_drift"] = detail::extreme(t.extras.at("simplex_drift"), true);
        out.traj = std::move(t);
      }));
    } else if (name == "ode") {
      res.models.push_back(detail::timed(name, [&](ModelOutcome& out) {
        if (!cfg.init.all_point())
          out.warnings.push_back("initial distribution is not a point; the ODE starts from its mean");
        out.traj = homo_integrate(cfg.game, cfg.mech, cfg.init.mean(), cfg.alpha, cfg.t_max);
      }));
    }
  }

  const ModelOutcome* abm = res.find("abm");
  if (abm && abm->traj) {
    const auto ref = abm->traj->o_series(0);
    for (auto& m : res.models) {
      if (!m.traj) continue;
      const auto o = m.traj->o_series(0);
      double sup = 0.0;
      const std::size_t n = std::min(o.size(), ref.size());
      for (std::size_t k = 0; k < n; ++k) sup = std::max(sup, std::abs(o[k] - ref[k]));
      m.sup_gap = sup;
      m.final_gap = std::abs(o[n - 1] - ref[n - 1]);
    }
  }
  return res;
}

/// The trajectories table; models that were not run or failed leave their
/// cells empty.
inline Table trajectory_table(const CompareResult& res) {
  Table table;
  table.columns = trajectory_columns();
  auto series = [&](const char* model, bool spread) -> std::optional<std::vector<double>> {
    const ModelOutcome* m = res.find(model);
    if (!m || !m->traj) return std::nullopt;
    return spread ? m->spread->o_series(0) : m->traj->o_series(0);
  };
  const std::vector<std::optional<std::vector<double>>> cols{series("abm", false), series("abm", true),
                                                             series("cem", false), series("rem", false),
                                                             series("ode", false)};
  for (int t = 0; t <= res.t_max; ++t) {
    std::vector<std::optional<double>> row{static_cast<double>(t)};
    for (const auto& c : cols) {
      if (c && static_cast<std::size_t>(t) < c->size())
        row.emplace_back((*c)[t]);
      else
        row.emplace_back();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline nlohmann::json metrics_json(const CompareResult& res, const ExperimentConfig& cfg) {
  nlohmann::json doc = nlohmann::json::object();
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  for (const auto& m : res.models) {
    nlohmann::json entry{{"sup_gap", opt(m.sup_gap)},
                         {"final_gap", opt(m.final_gap)},
                         {"runtime_seconds", m.runtime_seconds}};
    if (m.traj) entry["final_o1"] = m.traj->o.back()[0];
    if (!m.error.empty()) entry["error"] = m.error;
    if (!m.warnings.empty()) entry["warnings"] = m.warnings;
    for (const auto& [k, v] : m.diagnostics) entry[k] = v;
    doc[m.name] = std::move(entry);
  }
  doc["config_echo"] = cfg.echo;
  return doc;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write " + path.string());
  out << text;
  if (!out) throw ModelError("failed writing " + path.string());
}

inline std::string snapshot_name(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "density_t%g.txt", t);
  return buf;
}

/// Writes trajectories.csv, metrics.json, density snapshots and, when asked,
/// plot.svg into `dir`.
inline void write_outputs(const CompareResult& res, const ExperimentConfig& cfg, const std::filesystem::path& dir,
                          bool plot) {
  std::filesystem::create_directories(dir);
  const Table table = trajectory_table(res);
  write_file(dir / "trajectories.csv", write_csv(table));
  write_file(dir / "metrics.json", metrics_json(res, cfg).dump(2) + "\n");
  for (const auto& snap : res.snapshots) {
    std::ostringstream os;
    write_snapshot(os, snap);
    write_file(dir / snapshot_name(snap.t), os.str());
  }
  if (plot) {
    bool drawable = false;
    for (const auto& m : res.models) drawable = drawable || m.traj.has_value();
    if (drawable) write_file(dir / "plot.svg", trajectory_svg(table, cfg.game_name));
  }
}

}  // namespace qpop::harness
