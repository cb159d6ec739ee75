#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qpop/errors.hpp"

namespace qpop {

/// Fractions of the population playing each action.
using PopulationState = std::vector<double>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  Interval hull(const Interval& other) const {
    return {std::min(lo, other.lo), std::max(hi, other.hi)};
  }
};

/// One time slice of an affine reward rule: constant + sum_k coef[k] * o_k,
/// active while t <= until.
struct AffinePiece {
  double until = std::numeric_limits<double>::infinity();
  double constant = 0.0;
  std::vector<double> coef;
};

/// Reward rule for one action: the first piece whose `until` is >= t applies.
struct AffineRule {
  std::vector<AffinePiece> pieces;
};

enum class GameKind { public_goods, product_choice, time_varying_product_choice, el_farol, custom };

/// A stateless population game R(a_j, o, t).
///
/// Every built-in except El Farol is stored as per-action affine rules in the
/// population state, optionally switching at fixed time breakpoints. Objects
/// are immutable after construction.
class GameSpec {
 public:
  static GameSpec public_goods() {
    return GameSpec("public_goods", GameKind::public_goods,
                    {affine(-0.5, {1.5, 0.0}), affine(0.0, {1.5, 0.0})});
  }

  static GameSpec product_choice() {
    return GameSpec("product_choice", GameKind::product_choice,
                    {affine(0.5, {1.0, 0.0}), affine(1.0, {-1.5, 0.0})});
  }

  static GameSpec time_varying_product_choice() {
    AffineRule windows{{AffinePiece{10.0, 1.0, {-1.5, 0.0}},
                        AffinePiece{std::numeric_limits<double>::infinity(), 1.5, {-1.0, 0.0}}}};
    return GameSpec("time_varying_product_choice", GameKind::time_varying_product_choice,
                    {affine(0.5, {1.0, 0.0}), std::move(windows)});
  }

  /// Stay home pays 0; going pays 1 while fewer than 60% go, else -1.
  static GameSpec el_farol() { return GameSpec("el_farol", GameKind::el_farol, {}, 2); }

  static GameSpec custom(std::string name, std::vector<AffineRule> rules) {
    return GameSpec(std::move(name), GameKind::custom, std::move(rules));
  }

  /// Population game whose reward is the expected payoff against one opponent
  /// drawn from the population: R(a_j, o) = sum_k U[j][k] o_k.
  static GameSpec from_payoff_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<AffineRule> rules;
    for (const auto& row : rows) rules.push_back(affine(0.0, row));
    return GameSpec("pairwise", GameKind::custom, std::move(rules));
  }

  static GameSpec by_name(const std::string& name) {
    if (name == "public_goods") return public_goods();
    if (name == "product_choice") return product_choice();
    if (name == "time_varying_product_choice") return time_varying_product_choice();
    if (name == "el_farol") return el_farol();
    throw UsageError("unknown game '" + name + "'");
  }

  const std::string& name() const noexcept { return name_; }
  GameKind kind() const noexcept { return kind_; }
  std::size_t actions() const noexcept { return m_; }
  bool time_varying() const noexcept { return !breakpoints_.empty(); }

  /// Times at which some rule switches; rules use the earlier piece at the
  /// breakpoint itself.
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }

  double reward(std::size_t action, std::span<const double> o, double t) const {
    if (action >= m_) throw UsageError("action index out of range");
    if (o.size() != m_) throw UsageError("population state has wrong dimension");
    if (kind_ == GameKind::el_farol) {
      if (action == 0) return 0.0;
      return (o[1] >= 0.0 && o[1] < 0.6) ? 1.0 : -1.0;
    }
    const AffinePiece& piece = active_piece(rules_[action], t);
    double r = piece.constant;
    for (std::size_t k = 0; k < piece.coef.size(); ++k) r += piece.coef[k] * o[k];
    return r;
  }

  /// Rewards of every action at (o, t), written into `out`.
  void rewards(std::span<const double> o, double t, std::span<double> out) const {
    for (std::size_t j = 0; j < m_; ++j) out[j] = reward(j, o, t);
  }

  std::vector<double> rewards(std::span<const double> o, double t) const {
    std::vector<double> out(m_);
    rewards(o, t, out);
    return out;
  }

  /// Interval containing every reward attainable on the simplex for t in [0, t_max].
  Interval reward_bounds(double t_max) const {
    if (kind_ == GameKind::el_farol) return {-1.0, 1.0};
    Interval b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& rule : rules_) {
      double start = 0.0;
      for (const auto& piece : rule.pieces) {
        if (start <= t_max) {
          // Affine in o: extremes sit on simplex vertices.
          for (std::size_t k = 0; k < m_; ++k) {
            double v = piece.constant + (k < piece.coef.size() ? piece.coef[k] : 0.0);
            b.lo = std::min(b.lo, v);
            b.hi = std::max(b.hi, v);
          }
        }
        start = piece.until;
      }
    }
    return b;
  }

 private:
  GameSpec(std::string name, GameKind kind, std::vector<AffineRule> rules, std::size_t m = 0)
      : name_(std::move(name)), kind_(kind), rules_(std::move(rules)), m_(m ? m : rules_.size()) {
    if (m_ < 2) throw UsageError("a game needs at least two actions");
    for (const auto& rule : rules_) {
      if (rule.pieces.empty()) throw UsageError("reward rule without pieces");
      for (std::size_t p = 0; p < rule.pieces.size(); ++p) {
        const auto& piece = rule.pieces[p];
        if (piece.coef.size() > m_) throw UsageError("reward coefficients exceed action count");
        if (!std::isfinite(piece.constant) ||
            std::any_of(piece.coef.begin(), piece.coef.end(), [](double c) { return !std::isfinite(c); }))
          throw UsageError("reward rule has non-finite coefficients");
        if (p > 0 && !(piece.until > rule.pieces[p - 1].until))
          throw UsageError("reward pieces must have increasing 'until' times");
        if (p + 1 < rule.pieces.size()) breakpoints_.push_back(piece.until);
      }
      if (std::isfinite(rule.pieces.back().until))
        throw UsageError("last reward piece must be open-ended");
    }
    std::sort(breakpoints_.begin(), breakpoints_.end());
    breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
  }

  static AffineRule affine(double constant, std::vector<double> coef) {
    return AffineRule{{AffinePiece{std::numeric_limits<double>::infinity(), constant, std::move(coef)}}};
  }

  static const AffinePiece& active_piece(const AffineRule& rule, double t) {
    for (const auto& piece : rule.pieces)
      if (t <= piece.until) return piece;
    return rule.pieces.back();
  }

  std::string name_;
  GameKind kind_;
  std::vector<AffineRule> rules_;
  std::size_t m_;
  std::vector<double> breakpoints_;
};

/// Time to evaluate rewards at for a step starting at `t`: a step that begins
/// exactly on a breakpoint belongs to the later rule.
inline double step_start_time(const GameSpec& game, double t) {
  for (double b : game.breakpoints())
    if (t == b) return std::nextafter(t, std::numeric_limits<double>::infinity());
  return t;
}

}  // namespace qpop
