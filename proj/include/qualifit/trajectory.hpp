#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "qualifit/error.hpp"

namespace qualifit {

// Deterministic simulation output: one shared time grid plus one value series
// per named observable.  A model that blows up marks the trajectory failed
// instead of handing back NaNs silently.
struct Trajectory {
  std::vector<double> times;  // strictly increasing
  std::map<std::string, std::vector<double>> series;
  bool failed = false;
  std::string failure_reason;

  bool has(const std::string& name) const { return series.count(name) != 0; }

  const std::vector<double>& at(const std::string& name) const {
    auto it = series.find(name);
    if (it == series.end())
      throw config_error("unknown observable '" + name + "'");
    return it->second;
  }

  // Linear interpolation on the grid.  Requests outside the simulated range
  // are configuration mistakes (protocol too short), not data to clamp.
  double value_at(const std::string& name, double t) const {
    const std::vector<double>& y = at(name);
    if (times.empty() || y.size() != times.size())
      throw config_error("observable '" + name + "' has no simulated values");
    if (t < times.front() || t > times.back())
      throw config_error("time " + std::to_string(t) + " for observable '" +
                         name + "' outside simulated range [" +
                         std::to_string(times.front()) + ", " +
                         std::to_string(times.back()) + "]");
    auto hi = std::lower_bound(times.begin(), times.end(), t);
    if (hi == times.begin()) return y.front();
    std::size_t i = static_cast<std::size_t>(hi - times.begin());
    if (i == times.size()) return y.back();
    if (times[i] == t) return y[i];
    double t0 = times[i - 1], t1 = times[i];
    double w = (t - t0) / (t1 - t0);
    return y[i - 1] + w * (y[i] - y[i - 1]);
  }
};

}  // namespace qualifit
