#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "qpop/errors.hpp"

namespace qpop {

/// Time series of observables shared by every back end.
///
/// `mean_q` is either empty (the model does not track Q-values, e.g. the
/// replicator model) or has one entry per time stamp. Each named series in
/// `extras` has one entry per time stamp.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> o;
  std::vector<std::vector<double>> mean_q;
  std::map<std::string, std::vector<double>> extras;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }

  void push(double t, std::vector<double> state, std::vector<double> q = {}) {
    times.push_back(t);
    o.push_back(std::move(state));
    if (!q.empty()) mean_q.push_back(std::move(q));
  }

  void push_extra(const std::string& name, double value) { extras[name].push_back(value); }

  /// Component j of the population state over time.
  std::vector<double> o_series(std::size_t j) const {
    std::vector<double> s;
    s.reserve(o.size());
    for (const auto& v : o) s.push_back(v.at(j));
    return s;
  }

  std::vector<double> q_series(std::size_t j) const {
    std::vector<double> s;
    s.reserve(mean_q.size());
    for (const auto& v : mean_q) s.push_back(v.at(j));
    return s;
  }

  void validate() const {
    if (o.size() != times.size()) throw ModelError("trajectory: o length mismatch");
    if (!mean_q.empty() && mean_q.size() != times.size()) throw ModelError("trajectory: mean_q length mismatch");
    for (const auto& [name, series] : extras)
      if (series.size() != times.size()) throw ModelError("trajectory: extra '" + name + "' length mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw ModelError("trajectory: times not strictly increasing");
  }
};

}  // namespace qpop
