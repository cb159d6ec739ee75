#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qpop/dists.hpp"
#include "qpop/errors.hpp"
#include "qpop/explore.hpp"
#include "qpop/games.hpp"
#include "qpop/odes.hpp"

namespace qpop::harness {

using nlohmann::json;

struct AbmConfig {
  std::size_t n_agents = 1000;
  std::size_t n_runs = 100;
  std::uint64_t master_seed = 1;
};

struct CemConfig {
  std::optional<std::size_t> n;  ///< empty means "auto"
  bool limiter = false;
  std::vector<double> snapshot_times;

  std::size_t resolution() const { return n.value_or(256); }
};

/// Lattice, temperatures and seeds for slope fields and fixed points.
struct SlopeConfig {
  std::vector<double> taus;  ///< empty means "the exploration temperature"
  Lattice box;
  double t = 0.0;
  int t_max = 100;
  std::vector<QVector> seeds;  ///< trajectory and fixed-point seeds
};

struct ExperimentConfig {
  std::string game_name;
  GameSpec game = GameSpec::public_goods();
  Exploration mech;
  double alpha = 0.05;
  DistSpec init;
  int t_max = 300;
  AbmConfig abm;
  CemConfig cem;
  std::vector<std::string> models;
  std::string output = "out";
  SlopeConfig slope;
  json echo;  ///< the fully resolved document, defaults included

  bool wants(const std::string& model) const {
    return std::find(models.begin(), models.end(), model) != models.end();
  }
};

inline const std::vector<std::string>& known_models() {
  static const std::vector<std::string> names{"abm", "cem", "rem", "ode"};
  return names;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

inline double number(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(path + "." + key, "required");
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

inline double number_or(const json& obj, const std::string& path, const char* key, double fallback) {
  return obj.contains(key) ? number(obj, path, key) : fallback;
}

inline std::uint64_t count(const json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) fail(path + "." + key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

inline AffinePiece parse_piece(const json& v, const std::string& path) {
  reject_unknown(v, path, {"until", "constant", "coef"});
  AffinePiece piece;
  if (v.contains("until")) piece.until = number(v, path, "until");
  piece.constant = number_or(v, path, "constant", 0.0);
  if (!v.contains("coef")) fail(path + ".coef", "required");
  piece.coef = numbers(v.at("coef"), path + ".coef");
  return piece;
}

inline GameSpec parse_game(const json& v, std::string& name) {
  if (v.is_string()) {
    name = v.get<std::string>();
    try {
      return GameSpec::by_name(name);
    } catch (const UsageError& e) {
      fail("game", e.what());
    }
  }
  reject_unknown(v, "game", {"name", "rules", "payoff"});
  if (!v.contains("name") || !v.at("name").is_string()) fail("game.name", "required string");
  name = v.at("name").get<std::string>();
  try {
    if (name == "custom") {
      if (!v.contains("rules") || !v.at("rules").is_array()) fail("game.rules", "required array");
      std::vector<AffineRule> rules;
      const json& rs = v.at("rules");
      for (std::size_t j = 0; j < rs.size(); ++j) {
        const std::string p = "game.rules[" + std::to_string(j) + "]";
        AffineRule rule;
        if (rs[j].is_array()) {
          for (std::size_t k = 0; k < rs[j].size(); ++k)
            rule.pieces.push_back(parse_piece(rs[j][k], p + "[" + std::to_string(k) + "]"));
        } else {
          rule.pieces.push_back(parse_piece(rs[j], p));
        }
        rules.push_back(std::move(rule));
      }
      return GameSpec::custom("custom", std::move(rules));
    }
    if (name == "pairwise") {
      if (!v.contains("payoff") || !v.at("payoff").is_array()) fail("game.payoff", "required array of rows");
      std::vector<std::vector<double>> rows;
      for (std::size_t j = 0; j < v.at("payoff").size(); ++j)
        rows.push_back(numbers(v.at("payoff")[j], "game.payoff[" + std::to_string(j) + "]"));
      return PayoffMatrix(rows).population_game();
    }
    if (v.contains("rules") || v.contains("payoff")) fail("game", "'rules' and 'payoff' apply to custom and pairwise only");
    return GameSpec::by_name(name);
  } catch (const UsageError& e) {
    fail("game", e.what());
  }
}

inline Marginal parse_marginal(const json& v, const std::string& path) {
  if (v.is_number()) return Marginal::point(v.get<double>());
  if (!v.is_object() || !v.contains("kind") || !v.at("kind").is_string()) fail(path + ".kind", "required string");
  const std::string kind = v.at("kind").get<std::string>();
  try {
    if (kind == "point") {
      reject_unknown(v, path, {"kind", "value"});
      return Marginal::point(number(v, path, "value"));
    }
    if (kind == "uniform") {
      reject_unknown(v, path, {"kind", "lo", "hi"});
      return Marginal::uniform(number(v, path, "lo"), number(v, path, "hi"));
    }
    if (kind == "beta") {
      reject_unknown(v, path, {"kind", "a", "b", "lo", "hi"});
      return Marginal::beta(number(v, path, "a"), number(v, path, "b"), number_or(v, path, "lo", 0.0),
                            number_or(v, path, "hi", 1.0));
    }
    if (kind == "truncated_normal") {
      reject_unknown(v, path, {"kind", "mu", "sigma", "lo", "hi"});
      return Marginal::truncated_normal(number(v, path, "mu"), number(v, path, "sigma"), number(v, path, "lo"),
                                        number(v, path, "hi"));
    }
  } catch (const UsageError& e) {
    fail(path, e.what());
  }
  fail(path + ".kind", "unknown marginal kind '" + kind + "'");
}

inline QVector parse_point(const json& v, const std::string& path, std::size_t m) {
  QVector q = numbers(v, path);
  if (q.size() != m) fail(path, "expected " + std::to_string(m) + " values");
  return q;
}

}  // namespace detail

namespace detail {
inline ExperimentConfig build(const json& doc);
}  // namespace detail

/// Builds and validates a configuration from a JSON document. Missing keys
/// take their defaults; the resolved document is kept in `echo`.
inline ExperimentConfig from_json(const json& doc) {
  try {
    return detail::build(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig detail::build(const json& doc) {
  reject_unknown(doc, "", {"game", "exploration", "alpha", "init", "t_max", "abm", "cem", "models", "output",
                           "slope_field"});
  ExperimentConfig cfg;
  if (!doc.contains("game")) fail("game", "required");
  cfg.game = parse_game(doc.at("game"), cfg.game_name);
  const std::size_t m = cfg.game.actions();

  json ex = doc.value("exploration", json::object());
  reject_unknown(ex, "exploration", {"kind", "tau"});
  const std::string kind = ex.value("kind", "boltzmann");
  const double tau = number_or(ex, "exploration", "tau", 3.0);
  try {
    if (kind == "boltzmann")
      cfg.mech = Exploration::boltzmann(tau);
    else if (kind == "power")
      cfg.mech = Exploration::power(tau);
    else
      fail("exploration.kind", "expected 'boltzmann' or 'power'");
  } catch (const UsageError& e) {
    fail("exploration.tau", e.what());
  }

  cfg.alpha = number_or(doc, "", "alpha", 0.05);
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) fail("alpha", "must lie in (0, 1]");

  if (!doc.contains("init")) fail("init", "required");
  const json& init = doc.at("init");
  if (!init.is_array()) fail("init", "expected one marginal per action");
  if (init.size() != m) fail("init", "expected " + std::to_string(m) + " marginals, got " + std::to_string(init.size()));
  std::vector<Marginal> marginals;
  for (std::size_t j = 0; j < init.size(); ++j) marginals.push_back(parse_marginal(init[j], "init[" + std::to_string(j) + "]"));
  cfg.init = DistSpec(std::move(marginals));

  if (doc.contains("t_max")) {
    const json& t = doc.at("t_max");
    if (!t.is_number_integer() || t.get<std::int64_t>() < 1) fail("t_max", "must be an integer >= 1");
    cfg.t_max = t.get<int>();
  }

  json abm = doc.value("abm", json::object());
  reject_unknown(abm, "abm", {"n_agents", "n_runs", "master_seed"});
  cfg.abm.n_agents = count(abm, "abm", "n_agents", 1000);
  cfg.abm.n_runs = count(abm, "abm", "n_runs", 100);
  cfg.abm.master_seed = count(abm, "abm", "master_seed", 1);
  if (cfg.abm.n_agents < 1) fail("abm.n_agents", "must be >= 1");
  if (cfg.abm.n_runs < 1) fail("abm.n_runs", "must be >= 1");

  json cem = doc.value("cem", json::object());
  reject_unknown(cem, "cem", {"n", "limiter", "snapshot_times"});
  if (cem.contains("n")) {
    const json& n = cem.at("n");
    if (n.is_string() && n.get<std::string>() == "auto") {
    } else if (n.is_number_integer() && n.get<std::int64_t>() >= 16) {
      cfg.cem.n = n.get<std::size_t>();
    } else {
      fail("cem.n", "expected \"auto\" or an integer >= 16");
    }
  }
  if (cem.contains("limiter")) {
    if (!cem.at("limiter").is_boolean()) fail("cem.limiter", "expected true or false");
    cfg.cem.limiter = cem.at("limiter").get<bool>();
  }
  if (cem.contains("snapshot_times")) {
    cfg.cem.snapshot_times = numbers(cem.at("snapshot_times"), "cem.snapshot_times");
    for (double s : cfg.cem.snapshot_times)
      if (!(s >= 0.0 && s <= cfg.t_max)) fail("cem.snapshot_times", "times must lie in [0, t_max]");
  }

  if (doc.contains("models")) {
    const json& ms = doc.at("models");
    if (!ms.is_array() || ms.empty()) fail("models", "expected a non-empty array");
    for (const auto& v : ms) {
      if (!v.is_string()) fail("models", "expected model names");
      const std::string name = v.get<std::string>();
      if (std::find(known_models().begin(), known_models().end(), name) == known_models().end())
        fail("models", "unknown model '" + name + "'");
      if (cfg.wants(name)) fail("models", "'" + name + "' listed twice");
      cfg.models.push_back(name);
    }
  } else {
    cfg.models = cfg.init.has_point() ? std::vector<std::string>{"abm", "rem", "ode"}
                                      : std::vector<std::string>{"abm", "cem", "rem", "ode"};
  }
  if (cfg.wants("cem") && cfg.init.has_point())
    fail("models", "point initial values have no density; cem needs every marginal to be continuous");
  if (cfg.wants("cem") && m != 2) fail("models", "cem is implemented for two-action games only");

  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) fail("output", "expected a directory path");
    cfg.output = doc.at("output").get<std::string>();
  }

  json sf = doc.value("slope_field", json::object());
  reject_unknown(sf, "slope_field", {"taus", "box", "n", "t", "t_max", "seeds"});
  if (sf.contains("taus")) cfg.slope.taus = numbers(sf.at("taus"), "slope_field.taus");
  for (double t : cfg.slope.taus)
    if (!(t >= 0.0)) fail("slope_field.taus", "temperatures must be >= 0");
  if (sf.contains("box")) {
    const auto b = numbers(sf.at("box"), "slope_field.box");
    if (b.size() != 4 || !(b[0] < b[1]) || !(b[2] < b[3])) fail("slope_field.box", "expected [q1_lo, q1_hi, q2_lo, q2_hi]");
    cfg.slope.box.q1_lo = b[0];
    cfg.slope.box.q1_hi = b[1];
    cfg.slope.box.q2_lo = b[2];
    cfg.slope.box.q2_hi = b[3];
  }
  const auto lattice_n = count(sf, "slope_field", "n", 21);
  if (lattice_n < 2) fail("slope_field.n", "must be >= 2");
  cfg.slope.box.n1 = cfg.slope.box.n2 = lattice_n;
  cfg.slope.t = number_or(sf, "slope_field", "t", 0.0);
  cfg.slope.t_max = static_cast<int>(count(sf, "slope_field", "t_max", 100));
  if (cfg.slope.t_max < 1) fail("slope_field.t_max", "must be >= 1");
  if (sf.contains("seeds")) {
    const json& seeds = sf.at("seeds");
    if (!seeds.is_array()) fail("slope_field.seeds", "expected an array of points");
    for (std::size_t i = 0; i < seeds.size(); ++i)
      cfg.slope.seeds.push_back(parse_point(seeds[i], "slope_field.seeds[" + std::to_string(i) + "]", m));
  } else if (m == 2) {
    const Lattice& b = cfg.slope.box;
    for (int i2 = 0; i2 < 5; ++i2)
      for (int i1 = 0; i1 < 5; ++i1)
        cfg.slope.seeds.push_back({b.q1_lo + (b.q1_hi - b.q1_lo) * i1 / 4.0, b.q2_lo + (b.q2_hi - b.q2_lo) * i2 / 4.0});
  }

  cfg.echo = doc;
  cfg.echo["exploration"] = {{"kind", kind}, {"tau", tau}};
  cfg.echo["alpha"] = cfg.alpha;
  cfg.echo["t_max"] = cfg.t_max;
  cfg.echo["abm"] = {{"n_agents", cfg.abm.n_agents}, {"n_runs", cfg.abm.n_runs}, {"master_seed", cfg.abm.master_seed}};
  cfg.echo["cem"] = {{"n", cfg.cem.n ? json(*cfg.cem.n) : json("auto")},
                     {"limiter", cfg.cem.limiter},
                     {"snapshot_times", cfg.cem.snapshot_times}};
  cfg.echo["models"] = cfg.models;
  cfg.echo["output"] = cfg.output;
  return cfg;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace detail {

inline json beta_marginal(double a, double b, double lo = -1.5, double hi = 1.5) {
  return {{"kind", "beta"}, {"a", a}, {"b", b}, {"lo", lo}, {"hi", hi}};
}

// Product choice from heterogeneous starts. The beta shapes are our own
// choices; panel b is the case whose o_1 starts near 0.25 and dips first.
inline json fig2_panel(double a1, double b1, double a2, double b2) {
  return {{"game", "product_choice"},
          {"exploration", {{"kind", "boltzmann"}, {"tau", 3.0}}},
          {"alpha", 0.05},
          {"init", {beta_marginal(a1, b1), beta_marginal(a2, b2)}},
          {"t_max", 500}};
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig1a", "fig1b", "fig2a", "fig2b", "fig2c", "fig2d", "fig3", "fig4"};
  return names;
}

inline json preset(const std::string& name) {
  using detail::beta_marginal;
  if (name == "fig1a")
    return {{"game", "public_goods"},
            {"exploration", {{"kind", "boltzmann"}, {"tau", 3.0}}},
            {"alpha", 0.1},
            {"init", {4.0, 4.0}},
            {"t_max", 300}};
  if (name == "fig1b")
    return {{"game", "time_varying_product_choice"},
            {"exploration", {{"kind", "boltzmann"}, {"tau", 3.0}}},
            {"alpha", 0.1},
            {"init", {beta_marginal(15, 30), beta_marginal(10, 10)}},
            {"t_max", 300}};
  if (name == "fig2a") return detail::fig2_panel(15, 15, 15, 15);
  if (name == "fig2b") return detail::fig2_panel(8, 15, 15, 15);
  if (name == "fig2c") return detail::fig2_panel(15, 8, 15, 15);
  if (name == "fig2d") return detail::fig2_panel(5, 20, 20, 5);
  if (name == "fig3")
    return {{"game", "product_choice"},
            {"exploration", {{"kind", "boltzmann"}, {"tau", 3.0}}},
            {"alpha", 0.05},
            {"init", {0.0, 0.0}},
            {"models", {"ode"}},
            {"t_max", 100},
            {"slope_field", {{"taus", {0.5, 1.0, 3.0, 6.0}}, {"box", {-1.5, 1.5, -1.5, 1.5}}, {"n", 21}}}};
  if (name == "fig4") {
    json doc = detail::fig2_panel(8, 15, 15, 15);
    doc["exploration"]["tau"] = 1.0;
    return doc;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

inline json parse_document(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; translate it to a line number.
    std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(),
        text.begin() + static_cast<std::ptrdiff_t>(std::min(e.byte, text.size())), '\n'));
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
  }
}

inline json read_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_document(buf.str(), path);
}

/// Applies `key=value` with a dotted key. Array elements are addressed by
/// index (init.0.a=8). The value is read as JSON when it parses, else as a
/// string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set: empty path segment in '" + key + "'");
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw ConfigError("--set: '" + part + "' is not an array index in '" + key + "'");
      }
      if (idx >= node->size()) throw ConfigError("--set: index " + part + " out of range in '" + key + "'");
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("--set: '" + key + "' descends into a scalar");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = std::move(value);
      return;
    }
    node = next;
    start = dot + 1;
  }
}

/// Resolves the document the CLI flags describe: a preset and/or a config
/// file (file keys override the preset), then each override in order.
inline json resolve_document(const std::optional<std::string>& preset_name, const std::optional<std::string>& path,
                             const std::vector<std::string>& overrides) {
  if (!preset_name && !path) throw ConfigError("need --config or --preset");
  json doc = preset_name ? preset(*preset_name) : json::object();
  if (path) doc.merge_patch(read_document(*path));
  for (const auto& o : overrides) apply_override(doc, o);
  return doc;
}

inline ExperimentConfig load_config(const std::string& path) { return from_json(read_document(path)); }

}  // namespace qpop::harness
