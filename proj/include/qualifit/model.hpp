#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qualifit/error.hpp"
#include "qualifit/trajectory.hpp"

namespace qualifit {

// Simulation protocol: the observation grid shared by every observable,
// plus the fixed internal step for ODE models.
struct Protocol {
  std::vector<double> times;
  double rk_step = 0.01;
};

inline void validate_protocol(const Protocol& p) {
  if (p.times.empty()) throw config_error("protocol has no observation times");
  if (p.times.front() < 0.0)
    throw config_error("protocol times must be non-negative");
  for (std::size_t i = 1; i < p.times.size(); ++i)
    if (!(p.times[i] > p.times[i - 1]))
      throw config_error("protocol times must be strictly increasing");
  if (!(p.rk_step > 0.0)) throw config_error("rk_step must be positive");
}

// Classical fixed-step RK4 from (t0, y0), recording the state at each grid
// time.  Substeps never exceed `step` and always land exactly on grid
// points, so results are bit-reproducible.  A non-finite state sets
// `failed` and stops the march.
template <class Rhs>
std::vector<std::vector<double>> rk4_integrate(const Rhs& rhs,
                                               std::vector<double> y,
                                               double t0,
                                               std::span<const double> t_grid,
                                               double step, bool& failed) {
  failed = false;
  const std::size_t dim = y.size();
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  std::vector<std::vector<double>> out;
  out.reserve(t_grid.size());

  double t = t0;
  for (double target : t_grid) {
    double span = target - t;
    if (span > 0.0) {
      long n = std::lround(std::ceil(span / step - 1e-9));
      if (n < 1) n = 1;
      double h = span / static_cast<double>(n);
      for (long s = 0; s < n && !failed; ++s) {
        double ts = t + h * static_cast<double>(s);
        rhs(ts, y, k1);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(ts + 0.5 * h, tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(ts + 0.5 * h, tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(ts + h, tmp, k4);
        for (std::size_t i = 0; i < dim; ++i) {
          y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
          if (!std::isfinite(y[i])) failed = true;
        }
      }
      t = target;
    }
    if (failed) break;
    out.push_back(y);
  }
  return out;
}

// Deterministic model abstraction: named parameters in, named observable
// trajectories out.  Identical inputs must give bit-identical outputs.
class Model {
 public:
  virtual ~Model() = default;
  virtual const std::string& name() const = 0;
  virtual const std::vector<std::string>& parameter_names() const = 0;
  virtual const std::vector<double>& default_parameters() const = 0;
  virtual const std::vector<std::string>& observable_names() const = 0;
  virtual Trajectory simulate(std::span<const double> theta,
                              const Protocol& protocol) const = 0;

  void check_theta_size(std::span<const double> theta) const {
    if (theta.size() != parameter_names().size())
      throw config_error("model '" + name() + "' expects " +
                         std::to_string(parameter_names().size()) +
                         " parameters, got " + std::to_string(theta.size()));
  }

  int parameter_index(const std::string& pname) const {
    const std::vector<std::string>& names = parameter_names();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == pname) return static_cast<int>(i);
    return -1;
  }
};

// Closed-form two-stimulus response toy: a flat primary response p1 = A and
// a delay-dependent secondary response that can come out weaker or stronger
// than the primary depending on the gap between a slow boost and a fast
// depression:
//   p3(t) = max(0, A * (1 + b*exp(-t/tau_b) - d*exp(-t/tau_d)))
// The difference d13 = p1 - p3 is exported as its own observable so
// constraint statements can threshold it directly.
class BiphasicToyModel final : public Model {
 public:
  const std::string& name() const override {
    static const std::string n = "biphasic";
    return n;
  }
  const std::vector<std::string>& parameter_names() const override {
    static const std::vector<std::string> n = {"A", "b", "tau_b", "d", "tau_d"};
    return n;
  }
  const std::vector<double>& default_parameters() const override {
    static const std::vector<double> d = {1.0, 0.6, 30.0, 1.1, 8.0};
    return d;
  }
  const std::vector<std::string>& observable_names() const override {
    static const std::vector<std::string> n = {"p1", "p3", "d13"};
    return n;
  }

  Trajectory simulate(std::span<const double> theta,
                      const Protocol& protocol) const override {
    check_theta_size(theta);
    validate_protocol(protocol);
    Trajectory traj;
    traj.times = protocol.times;
    const double A = theta[0], b = theta[1], tau_b = theta[2];
    const double d = theta[3], tau_d = theta[4];
    bool finite = true;
    for (double v : theta) finite = finite && std::isfinite(v);
    if (!finite || !(A > 0.0) || !(tau_b > 0.0) || !(tau_d > 0.0) ||
        b < 0.0 || d < 0.0) {
      traj.failed = true;
      traj.failure_reason = "parameters outside the model domain";
      return traj;
    }
    std::vector<double>&p1 = traj.series["p1"], &p3 = traj.series["p3"];
    std::vector<double>& d13 = traj.series["d13"];
    p1.reserve(traj.times.size());
    p3.reserve(traj.times.size());
    d13.reserve(traj.times.size());
    for (double t : traj.times) {
      double secondary =
          A * (1.0 + b * std::exp(-t / tau_b) - d * std::exp(-t / tau_d));
      if (secondary < 0.0) secondary = 0.0;
      p1.push_back(A);
      p3.push_back(secondary);
      d13.push_back(A - secondary);
    }
    return traj;
  }
};

// One-dimensional exponential decay, integrated numerically on purpose: it
// exercises the RK4 path and has the closed form x0*exp(-k*t) as an oracle.
class DecayODEModel final : public Model {
 public:
  const std::string& name() const override {
    static const std::string n = "decay";
    return n;
  }
  const std::vector<std::string>& parameter_names() const override {
    static const std::vector<std::string> n = {"k", "x0"};
    return n;
  }
  const std::vector<double>& default_parameters() const override {
    static const std::vector<double> d = {1.0, 1.0};
    return d;
  }
  const std::vector<std::string>& observable_names() const override {
    static const std::vector<std::string> n = {"x"};
    return n;
  }

  Trajectory simulate(std::span<const double> theta,
                      const Protocol& protocol) const override {
    check_theta_size(theta);
    validate_protocol(protocol);
    Trajectory traj;
    traj.times = protocol.times;
    const double k = theta[0], x0 = theta[1];
    if (!std::isfinite(k) || !std::isfinite(x0)) {
      traj.failed = true;
      traj.failure_reason = "non-finite parameters";
      return traj;
    }
    bool failed = false;
    auto rhs = [k](double, const std::vector<double>& y,
                   std::vector<double>& dy) { dy[0] = -k * y[0]; };
    std::vector<std::vector<double>> states =
        rk4_integrate(rhs, {x0}, 0.0, traj.times, protocol.rk_step, failed);
    if (failed) {
      traj.failed = true;
      traj.failure_reason = "integration diverged";
      return traj;
    }
    std::vector<double>& x = traj.series["x"];
    x.reserve(states.size());
    for (const std::vector<double>& s : states) x.push_back(s[0]);
    return traj;
  }
};

inline std::unique_ptr<Model> make_model(const std::string& name) {
  if (name == "biphasic") return std::make_unique<BiphasicToyModel>();
  if (name == "decay") return std::make_unique<DecayODEModel>();
  throw config_error("unknown model '" + name +
                     "' (available: biphasic, decay)");
}

}  // namespace qualifit
