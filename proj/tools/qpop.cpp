// Command-line front end: runs the models, slope fields and fixed points, and
// renders trajectory plots.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qpop/harness/compare.hpp"
#include "qpop/harness/config.hpp"
#include "qpop/harness/csv.hpp"
#include "qpop/harness/svg.hpp"
#include "qpop/qpop.hpp"

namespace fs = std::filesystem;
using namespace qpop;
using namespace qpop::harness;

namespace {

constexpr int exit_config = 2;
constexpr int exit_model = 3;

struct Shared {
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_shared(CLI::App* cmd, Shared& s) {
  cmd->add_option("--config", s.config, "JSON experiment config");
  cmd->add_option("--preset", s.preset, "named experiment")->check(CLI::IsMember(preset_names()));
  cmd->add_option("--out", s.out, "output directory");
  cmd->add_option("--seed", s.seed, "master seed for the agent-based ensemble");
  cmd->add_option("--set", s.overrides, "dotted-path override, key=value")->allow_extra_args(false);
}

ExperimentConfig resolve(const Shared& s, const std::optional<std::vector<std::string>>& models) {
  nlohmann::json doc = resolve_document(s.preset, s.config, s.overrides);
  if (s.out) doc["output"] = *s.out;
  if (s.seed) doc["abm"]["master_seed"] = *s.seed;
  if (models) doc["models"] = *models;
  return from_json(doc);
}

std::string fmt(double v) { return format_number(v); }

std::string tau_tag(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", tau);
  return buf;
}

int run_models(const ExperimentConfig& cfg) {
  const CompareResult res = compare(cfg);
  write_outputs(res, cfg, cfg.output, true);
  for (const auto& m : res.models) {
    if (!m.traj) {
      std::cerr << m.name << ": failed: " << m.error << '\n';
      continue;
    }
    std::cout << m.name << ": final o1 " << fmt(m.traj->o.back()[0]);
    if (m.sup_gap) std::cout << ", sup gap " << fmt(*m.sup_gap) << ", final gap " << fmt(*m.final_gap);
    std::cout << " (" << fmt(m.runtime_seconds) << " s)\n";
    for (const auto& w : m.warnings) std::cerr << m.name << ": warning: " << w << '\n';
  }
  std::cout << "wrote " << (fs::path(cfg.output) / "trajectories.csv").string() << '\n';
  return res.any_failed() ? exit_model : 0;
}

std::vector<double> temperatures(const ExperimentConfig& cfg) {
  return cfg.slope.taus.empty() ? std::vector<double>{cfg.mech.tau} : cfg.slope.taus;
}

Exploration with_tau(const Exploration& mech, double tau) {
  return mech.kind == Exploration::Kind::boltzmann ? Exploration::boltzmann(tau) : Exploration::power(tau);
}

int run_slope_field(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output);
  for (double tau : temperatures(cfg)) {
    const Exploration mech = with_tau(cfg.mech, tau);
    const SlopeField field = slope_field(cfg.game, mech, cfg.alpha, cfg.slope.t, cfg.slope.box, cfg.slope.seeds,
                                         cfg.slope.t_max);
    const FixedPointReport fps = fixed_points(cfg.game, mech, cfg.slope.t, cfg.slope.seeds);
    std::vector<QVector> dots;
    for (const auto& p : fps.points) dots.push_back(p.q_star);
    const fs::path base = fs::path(cfg.output) / ("slope_field_tau" + tau_tag(tau));
    write_file(base.string() + ".csv", write_slope_csv(field));
    write_file(base.string() + ".svg", slope_field_svg(field, cfg.slope.box, dots, cfg.game_name + ", tau = " + tau_tag(tau)));
    std::cout << "wrote " << base.string() << ".csv\n";
  }
  return 0;
}

int run_fixed_points(const ExperimentConfig& cfg) {
  if (cfg.slope.seeds.empty()) throw ConfigError("slope_field.seeds: fixed points need seeds for this game");
  nlohmann::json doc = nlohmann::json::array();
  for (double tau : temperatures(cfg)) {
    const FixedPointReport rep = fixed_points(cfg.game, with_tau(cfg.mech, tau), cfg.slope.t, cfg.slope.seeds);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : rep.points) {
      points.push_back({{"q_star", p.q_star}, {"o", p.o}, {"residual", p.residual}, {"iterations", p.iterations}});
      std::cout << "tau " << tau_tag(tau) << ": Q* = (";
      for (std::size_t j = 0; j < p.q_star.size(); ++j) std::cout << (j ? ", " : "") << fmt(p.q_star[j]);
      std::cout << "), o1 = " << fmt(p.o[0]) << ", residual " << fmt(p.residual) << '\n';
    }
    doc.push_back({{"tau", tau}, {"points", points}, {"non_converged", rep.non_converged}});
    if (!rep.non_converged.empty())
      std::cerr << "tau " << tau_tag(tau) << ": " << rep.non_converged.size() << " seeds did not converge\n";
  }
  fs::create_directories(cfg.output);
  write_file(fs::path(cfg.output) / "fixed_points.json", doc.dump(2) + "\n");
  return 0;
}

int run_plot(const std::string& csv_path, const std::optional<std::string>& out, const std::string& title) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + csv_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const Table table = parse_trajectory_csv(buf.str());
  const fs::path dir = out ? fs::path(*out) : fs::path(csv_path).parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  write_file(dir / "plot.svg", trajectory_svg(table, title));
  std::cout << "wrote " << (dir / "plot.svg").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-learning dynamics in population games: agent-based simulation, continuity-equation and replicator models"};
  app.require_subcommand(1);

  struct Cmd {
    const char* name;
    const char* help;
    std::optional<std::vector<std::string>> models;
  };
  const std::vector<Cmd> model_cmds{{"simulate", "agent-based ensemble only", std::vector<std::string>{"abm"}},
                                    {"cem", "continuity-equation model only", std::vector<std::string>{"cem"}},
                                    {"rem", "replicator model only", std::vector<std::string>{"rem"}},
                                    {"ode", "homogeneous ODE only", std::vector<std::string>{"ode"}},
                                    {"compare", "every model selected by the config", std::nullopt}};
  std::vector<Shared> shared(model_cmds.size() + 2);
  std::vector<CLI::App*> cmds;
  for (std::size_t i = 0; i < model_cmds.size(); ++i) {
    cmds.push_back(app.add_subcommand(model_cmds[i].name, model_cmds[i].help));
    add_shared(cmds.back(), shared[i]);
  }
  CLI::App* slope_cmd = app.add_subcommand("slope-field", "homogeneous drift on a lattice, per temperature");
  add_shared(slope_cmd, shared[model_cmds.size()]);
  CLI::App* fp_cmd = app.add_subcommand("fixed-points", "fixed points of the homogeneous dynamics");
  add_shared(fp_cmd, shared[model_cmds.size() + 1]);

  CLI::App* plot_cmd = app.add_subcommand("plot", "render plot.svg from a trajectories.csv");
  std::string csv_path, title;
  std::optional<std::string> plot_out;
  plot_cmd->add_option("csv", csv_path, "trajectories CSV")->required();
  plot_cmd->add_option("--out", plot_out, "output directory (default: next to the CSV)");
  plot_cmd->add_option("--title", title, "chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    for (std::size_t i = 0; i < model_cmds.size(); ++i)
      if (cmds[i]->parsed()) return run_models(resolve(shared[i], model_cmds[i].models));
    if (slope_cmd->parsed()) return run_slope_field(resolve(shared[model_cmds.size()], std::nullopt));
    if (fp_cmd->parsed()) return run_fixed_points(resolve(shared[model_cmds.size() + 1], std::nullopt));
    if (plot_cmd->parsed()) return run_plot(csv_path, plot_out, title);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const UsageError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_model;
  }
  return exit_config;
}
