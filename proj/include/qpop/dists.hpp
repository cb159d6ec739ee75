#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "qpop/errors.hpp"
#include "qpop/explore.hpp"
#include "qpop/games.hpp"
#include "qpop/random.hpp"

namespace qpop {

/// Distribution of one action's initial Q-value.
class Marginal {
 public:
  enum class Kind { point, uniform, beta, truncated_normal };

  static Marginal point(double v) {
    if (!std::isfinite(v)) throw UsageError("point marginal must be finite");
    Marginal m(Kind::point);
    m.lo_ = m.hi_ = v;
    return m;
  }

  static Marginal uniform(double lo, double hi) {
    Marginal m(Kind::uniform);
    m.set_interval(lo, hi);
    m.validate();
    return m;
  }

  /// Beta(a, b) on [0, 1], rescaled affinely onto [lo, hi].
  static Marginal beta(double a, double b, double lo = 0.0, double hi = 1.0) {
    if (!(a > 0.0) || !(b > 0.0)) throw UsageError("beta marginal needs a > 0 and b > 0");
    Marginal m(Kind::beta);
    m.set_interval(lo, hi);
    m.a_ = a;
    m.b_ = b;
    m.log_norm_ = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    m.validate();
    return m;
  }

  /// Normal(mu, sigma) conditioned on [lo, hi].
  static Marginal truncated_normal(double mu, double sigma, double lo, double hi) {
    if (!(sigma > 0.0) || !std::isfinite(mu)) throw UsageError("truncated normal needs finite mu and sigma > 0");
    Marginal m(Kind::truncated_normal);
    m.set_interval(lo, hi);
    m.a_ = mu;
    m.b_ = sigma;
    boost::math::normal_distribution<double> n(mu, sigma);
    m.cdf_lo_ = boost::math::cdf(n, lo);
    m.mass_ = boost::math::cdf(n, hi) - m.cdf_lo_;
    if (!(m.mass_ > 0.0)) throw UsageError("truncated normal interval carries no mass");
    m.validate();
    return m;
  }

  Kind kind() const noexcept { return kind_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  bool is_point() const noexcept { return kind_ == Kind::point; }
  double param_a() const noexcept { return a_; }
  double param_b() const noexcept { return b_; }

  double density(double x) const {
    switch (kind_) {
      case Kind::point:
        throw UnsupportedError("point marginal has no density; use the homogeneous ODE reduction");
      case Kind::uniform:
        return (x >= lo_ && x <= hi_) ? 1.0 / (hi_ - lo_) : 0.0;
      case Kind::beta: {
        if (x < lo_ || x > hi_) return 0.0;
        const double w = hi_ - lo_;
        const double u = (x - lo_) / w;
        const double left = a_ == 1.0 ? 0.0 : (a_ - 1.0) * std::log(u);
        const double right = b_ == 1.0 ? 0.0 : (b_ - 1.0) * std::log1p(-u);
        return std::exp(log_norm_ + left + right) / w;
      }
      case Kind::truncated_normal: {
        if (x < lo_ || x > hi_) return 0.0;
        const double z = (x - a_) / b_;
        return std::exp(-0.5 * z * z) / (b_ * std::sqrt(2.0 * M_PI) * mass_);
      }
    }
    return 0.0;
  }

  double cdf(double x) const {
    if (x < lo_) return 0.0;
    if (x >= hi_) return 1.0;
    switch (kind_) {
      case Kind::point:
        return 1.0;
      case Kind::uniform:
        return (x - lo_) / (hi_ - lo_);
      case Kind::beta:
        return boost::math::ibeta(a_, b_, (x - lo_) / (hi_ - lo_));
      case Kind::truncated_normal:
        return (boost::math::cdf(boost::math::normal_distribution<double>(a_, b_), x) - cdf_lo_) / mass_;
    }
    return 0.0;
  }

  double mean() const {
    switch (kind_) {
      case Kind::point:
        return lo_;
      case Kind::uniform:
        return 0.5 * (lo_ + hi_);
      case Kind::beta:
        return lo_ + (hi_ - lo_) * a_ / (a_ + b_);
      case Kind::truncated_normal: {
        const double alpha = (lo_ - a_) / b_;
        const double beta = (hi_ - a_) / b_;
        const auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
        return a_ + b_ * (phi(alpha) - phi(beta)) / mass_;
      }
    }
    return 0.0;
  }

  double sample(RandomStream& rng) const {
    switch (kind_) {
      case Kind::point:
        return lo_;
      case Kind::uniform:
        return lo_ + (hi_ - lo_) * rng.uniform();
      case Kind::beta: {
        std::gamma_distribution<double> ga(a_, 1.0);
        std::gamma_distribution<double> gb(b_, 1.0);
        const double x = ga(rng.engine());
        const double y = gb(rng.engine());
        return lo_ + (hi_ - lo_) * (x / (x + y));
      }
      case Kind::truncated_normal: {
        // Inverse CDF restricted to [F(lo), F(hi)].
        const double u = cdf_lo_ + mass_ * rng.uniform();
        const double x = boost::math::quantile(boost::math::normal_distribution<double>(a_, b_),
                                               std::clamp(u, 1e-300, 1.0 - 1e-16));
        return std::clamp(x, lo_, hi_);
      }
    }
    return lo_;
  }

 private:
  explicit Marginal(Kind k) : kind_(k) {}

  void set_interval(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) throw UsageError("marginal needs finite lo < hi");
    lo_ = lo;
    hi_ = hi;
  }

  void validate() const {
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double total = integrator.integrate([this](double x) { return density(x); }, lo_, hi_);
    if (std::abs(total - 1.0) > 1e-8)
      throw UsageError("marginal density integrates to " + std::to_string(total) + ", not 1");
  }

  Kind kind_;
  double lo_ = 0.0, hi_ = 0.0;
  double a_ = 0.0, b_ = 0.0;  // beta: shape a, b; truncated normal: mu, sigma
  double log_norm_ = 0.0;
  double cdf_lo_ = 0.0, mass_ = 1.0;
};

/// Initial Q-value distribution: independent marginals, one per action.
class DistSpec {
 public:
  DistSpec() = default;
  explicit DistSpec(std::vector<Marginal> marginals) : marginals_(std::move(marginals)) {
    if (marginals_.empty()) throw UsageError("distribution needs at least one marginal");
  }

  std::size_t dims() const noexcept { return marginals_.size(); }
  const std::vector<Marginal>& marginals() const noexcept { return marginals_; }
  const Marginal& operator[](std::size_t j) const { return marginals_[j]; }

  bool has_point() const {
    for (const auto& m : marginals_)
      if (m.is_point()) return true;
    return false;
  }

  bool all_point() const {
    for (const auto& m : marginals_)
      if (!m.is_point()) return false;
    return true;
  }

  QVector sample(RandomStream& rng) const {
    QVector q(marginals_.size());
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = marginals_[j].sample(rng);
    return q;
  }

  double density(std::span<const double> q) const {
    if (has_point())
      throw UnsupportedError("point initial condition has no density; use the homogeneous ODE reduction");
    if (q.size() != marginals_.size()) throw UsageError("density: dimension mismatch");
    double d = 1.0;
    for (std::size_t j = 0; j < q.size() && d > 0.0; ++j) d *= marginals_[j].density(q[j]);
    return d;
  }

  QVector mean() const {
    QVector mu(marginals_.size());
    for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = marginals_[j].mean();
    return mu;
  }

  Interval support(std::size_t j) const { return {marginals_[j].lo(), marginals_[j].hi()}; }

 private:
  std::vector<Marginal> marginals_;
};

}  // namespace qpop
