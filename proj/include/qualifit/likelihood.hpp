#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qualifit/error.hpp"
#include "qualifit/trajectory.hpp"

namespace qualifit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// P(Y <= x) for Y ~ N(mu, sigma).  sigma == 0 degenerates to a step with
// 0.5 at the tie point.  Written via erfc so the tail that is about to be
// multiplied by a small factor is the one computed directly.
inline double gaussian_cdf(double mu, double sigma, double x) {
  if (sigma == 0.0) {
    if (mu < x) return 1.0;
    if (mu > x) return 0.0;
    if (mu == x) return 0.5;
    return std::numeric_limits<double>::quiet_NaN();  // NaN input
  }
  return 0.5 * std::erfc((mu - x) / (sigma * std::numbers::sqrt2));
}

// P(Y > x); exact complement of gaussian_cdf, accurate where cdf ~ 1.
inline double gaussian_cdf_complement(double mu, double sigma, double x) {
  if (sigma == 0.0) {
    if (mu < x) return 0.0;
    if (mu > x) return 1.0;
    if (mu == x) return 0.5;
    return std::numeric_limits<double>::quiet_NaN();
  }
  return 0.5 * std::erfc((x - mu) / (sigma * std::numbers::sqrt2));
}

// P(statement observed satisfied | prediction mu):
//   p = eps_plus + (1 - eps_plus - eps_minus) * P(mu + noise < x)
// eps_plus / eps_minus are the probabilities of the observation coming out
// satisfied / violated regardless of the model.
inline double category_probability(double eps_plus, double eps_minus,
                                   double mu, double sigma, double x) {
  return eps_plus + (1.0 - eps_plus - eps_minus) * gaussian_cdf(mu, sigma, x);
}

// -log category_probability, evaluated through whichever tail keeps
// precision: near p ~ 1 the direct form loses all digits of (1 - p), so the
// complement is accumulated and fed to log1p instead.
inline double category_neg_log(double eps_plus, double eps_minus, double mu,
                               double sigma, double x) {
  if (std::isnan(mu) || std::isnan(x)) return kInf;
  const double scale = 1.0 - eps_plus - eps_minus;
  const double cdf = gaussian_cdf(mu, sigma, x);
  if (cdf <= 0.5) return -std::log(eps_plus + scale * cdf);
  const double q = eps_minus + scale * gaussian_cdf_complement(mu, sigma, x);
  return -std::log1p(-q);
}

// Scalar bindings -------------------------------------------------------

// An operand of a normalized statement: observable name or numeric literal.
struct Operand {
  std::string name;
  double literal = 0.0;
  bool is_literal = false;

  static Operand observable(std::string n) {
    Operand o;
    o.name = std::move(n);
    return o;
  }
  static Operand number(double v) {
    Operand o;
    o.literal = v;
    o.is_literal = true;
    return o;
  }

  double eval_at(const Trajectory& traj, double t) const {
    return is_literal ? literal : traj.value_at(name, t);
  }
};

inline bool operator==(const Operand& a, const Operand& b) {
  return a.is_literal == b.is_literal &&
         (a.is_literal ? a.literal == b.literal : a.name == b.name);
}

enum class Reduction {
  PointInTime,    // e(t) at one time, linearly interpolated
  MaxOverWindow,  // max over grid points in the window ("always")
  MinOverWindow,  // min over grid points in the window ("once")
};

// The scalar e = lhs - rhs reduced over the trajectory.  Every normalized
// statement reads "reduced value < 0".
struct ReducedBinding {
  Operand lhs;
  Operand rhs;
  Reduction reduction = Reduction::PointInTime;
  double time = 0.0;                                // PointInTime
  std::optional<std::pair<double, double>> window;  // Max/Min; full range if unset
  std::string label;  // source text, for error messages
};

inline double reduce_over_trajectory(const ReducedBinding& b,
                                     const Trajectory& traj) {
  if (b.reduction == Reduction::PointInTime)
    return b.lhs.eval_at(traj, b.time) - b.rhs.eval_at(traj, b.time);

  if (traj.times.empty())
    throw config_error("empty trajectory for statement '" + b.label + "'");
  double lo = b.window ? b.window->first : traj.times.front();
  double hi = b.window ? b.window->second : traj.times.back();
  if (lo < traj.times.front() || hi > traj.times.back())
    throw config_error("window [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "] for statement '" + b.label +
                       "' outside simulated range [" +
                       std::to_string(traj.times.front()) + ", " +
                       std::to_string(traj.times.back()) + "]");

  const std::vector<double>* ls = b.lhs.is_literal ? nullptr : &traj.at(b.lhs.name);
  const std::vector<double>* rs = b.rhs.is_literal ? nullptr : &traj.at(b.rhs.name);
  bool any = false;
  double best = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    double t = traj.times[i];
    if (t < lo || t > hi) continue;
    double e = (ls ? (*ls)[i] : b.lhs.literal) - (rs ? (*rs)[i] : b.rhs.literal);
    if (!any) {
      best = e;
      any = true;
    } else if (b.reduction == Reduction::MaxOverWindow) {
      best = std::max(best, e);
    } else {
      best = std::min(best, e);
    }
  }
  if (!any)
    throw config_error("window [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "] for statement '" + b.label +
                       "' contains no grid point");
  return best;
}

// Observations ----------------------------------------------------------

// One qualitative observation in normalized form: P(reduced value + noise < threshold).
struct QualitativeObservation {
  ReducedBinding binding;
  double threshold = 0.0;  // 0 after normalization
  double sigma = 0.0;      // tolerance: std dev of the reduced quantity
  double eps_plus = 0.0;   // P(observed satisfied regardless of the model)
  double eps_minus = 0.0;  // P(observed violated regardless)
};

// Symmetric-discrepancy term (two mutually exclusive outcomes and a single
// rate eps for both): the asymmetric form with eps_plus = eps_minus = eps.
inline double two_category_term(double eps, double sigma, double threshold,
                                double prediction) {
  return category_neg_log(eps, eps, prediction, sigma, threshold);
}

// General form used when a statement belongs to a family of three or more
// possible outcomes (or has asymmetric discrepancy rates).
inline double many_category_term(double eps_plus, double eps_minus,
                                 double sigma, double threshold,
                                 double prediction) {
  return category_neg_log(eps_plus, eps_minus, prediction, sigma, threshold);
}

inline double observation_term(const QualitativeObservation& o,
                               double prediction) {
  return category_neg_log(o.eps_plus, o.eps_minus, prediction, o.sigma,
                          o.threshold);
}

inline double observation_probability(const QualitativeObservation& o,
                                      double prediction) {
  return category_probability(o.eps_plus, o.eps_minus, prediction, o.sigma,
                              o.threshold);
}

// Quantitative data -----------------------------------------------------

struct QuantitativePoint {
  std::string observable;
  double time = 0.0;
  double value = 0.0;
  double sigma = 1.0;  // > 0
};

// Static penalty --------------------------------------------------------

// Core form: sum of weight * max(0, g) over already-reduced constraint
// values.  Zero exactly when every g <= 0.
inline double static_penalty(
    std::span<const std::pair<double, double>> g_and_weight) {
  double sum = 0.0;
  for (const auto& [g, w] : g_and_weight) {
    if (std::isnan(g)) return kInf;
    sum += w * std::max(0.0, g);
  }
  return sum;
}

struct PenaltyTerm {
  ReducedBinding binding;  // satisfied when reduced value < 0
  double weight = 1.0;
};

inline double static_penalty(std::span<const PenaltyTerm> terms,
                             const Trajectory& traj) {
  if (traj.failed) return kInf;
  double sum = 0.0;
  for (const PenaltyTerm& p : terms) {
    double e = reduce_over_trajectory(p.binding, traj);
    if (std::isnan(e)) return kInf;
    sum += p.weight * std::max(0.0, e);
  }
  return sum;
}

// Total NLL -------------------------------------------------------------

struct NegLogLikelihood {
  double value = 0.0;
  std::string note;  // set when value is +inf, names the offending term

  static NegLogLikelihood infinite(std::string why) {
    return {kInf, std::move(why)};
  }
};

inline NegLogLikelihood chi_squared_nll(
    std::span<const QuantitativePoint> points,
    std::span<const double> predictions) {
  if (points.size() != predictions.size())
    throw config_error("chi_squared_nll: " + std::to_string(points.size()) +
                       " points vs " + std::to_string(predictions.size()) +
                       " predictions");
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::isnan(predictions[i]))
      return NegLogLikelihood::infinite("prediction is NaN for observable '" +
                                        points[i].observable + "'");
    double r = (points[i].value - predictions[i]) / points[i].sigma;
    sum += 0.5 * r * r;
  }
  return {sum, {}};
}

inline NegLogLikelihood total_nll(std::span<const QuantitativePoint> quant,
                                  std::span<const QualitativeObservation> qual,
                                  const Trajectory& traj) {
  if (traj.failed)
    return NegLogLikelihood::infinite("simulation failed: " +
                                      traj.failure_reason);
  std::vector<double> predictions;
  predictions.reserve(quant.size());
  for (const QuantitativePoint& p : quant)
    predictions.push_back(traj.value_at(p.observable, p.time));
  NegLogLikelihood quant_part = chi_squared_nll(quant, predictions);
  if (quant_part.value == kInf) return quant_part;
  double sum = quant_part.value;
  for (const QualitativeObservation& o : qual) {
    double e = reduce_over_trajectory(o.binding, traj);
    if (std::isnan(e))
      return NegLogLikelihood::infinite("prediction is NaN for statement '" +
                                        o.binding.label + "'");
    double term = observation_term(o, e);
    if (term == kInf)
      return NegLogLikelihood::infinite("zero-probability statement '" +
                                        o.binding.label + "'");
    sum += term;
  }
  return {sum, {}};
}

}  // namespace qualifit
