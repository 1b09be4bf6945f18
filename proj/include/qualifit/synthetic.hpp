#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qualifit/constraint.hpp"
#include "qualifit/error.hpp"
#include "qualifit/likelihood.hpp"
#include "qualifit/model.hpp"
#include "qualifit/sampler.hpp"

namespace qualifit {

// ---------------------------------------------------------------------------
// Specification
// ---------------------------------------------------------------------------

// How the per-output noise sigma is combined into the sigma quoted for the
// difference p1-p3.  Independent draws truly combine in quadrature; the
// plain sum (= 2*sigma for equal outputs) is the conservative bookkeeping
// used by default.
enum class SigmaRule { Sum, Quadrature };

enum class DataMode { Quantitative, TwoCategory, ThreeCategory };

struct SyntheticSpec {
  std::string model = "biphasic";
  std::vector<double> ground_truth;  // empty -> model defaults
  std::vector<double> delays;        // ascending, > 0
  double noise_sigma = 0.025;        // per output
  SigmaRule sigma_rule = SigmaRule::Sum;
  DataMode mode = DataMode::TwoCategory;
  double confidence = 0.98;     // two-category statements
  double category_base = 0.01;  // three-category pmin; pmax = 1 - 2*pmin
  double threshold_ratio = 3.0; // threshold = ratio * difference sigma
  std::uint64_t seed = 0;
  double rk_step = 0.01;
};

// Default delay grid: geometric over (0, 64], anchored at 0.5.
inline std::vector<double> geometric_delays(int n, double lo = 0.5,
                                            double hi = 64.0) {
  if (n < 1) throw config_error("delay count must be positive");
  if (!(lo > 0.0) || !(hi > lo))
    throw config_error("delay range must satisfy 0 < lo < hi");
  std::vector<double> delays(n);
  if (n == 1) {
    delays[0] = hi;
    return delays;
  }
  for (int i = 0; i < n; ++i)
    delays[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  delays.back() = hi;
  return delays;
}

inline double difference_sigma(double per_output, SigmaRule rule) {
  return rule == SigmaRule::Sum ? 2.0 * per_output
                                : std::sqrt(2.0) * per_output;
}

namespace detail {

// Rounds to 15 significant decimal digits.  The ratio-times-sigma product
// can land one ulp away from the decimal value the user actually wrote
// (3 * 0.05 -> 0.15000000000000002); snapping keeps emitted statements
// readable while generation and files still share the exact same double.
inline double snap_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset container
// ---------------------------------------------------------------------------

enum class Category { Lower, Middle, Upper };

struct SyntheticDataset {
  std::vector<QuantitativePoint> quantitative;  // quantitative mode
  std::vector<ConstraintStatement> statements;  // categorical modes
  std::vector<Category> categories;             // per delay (3-cat)
  std::vector<bool> primary_greater;            // per delay (2-cat)
  double diff_sigma = 0.0;  // tolerance quoted on statements
  double threshold = 0.0;   // three-category threshold h
};

namespace detail {

inline void validate_spec(const SyntheticSpec& spec) {
  if (spec.delays.empty()) throw config_error("no delays specified");
  for (std::size_t i = 0; i < spec.delays.size(); ++i) {
    if (!(spec.delays[i] > 0.0))
      throw config_error("delays must be positive");
    if (i > 0 && !(spec.delays[i] > spec.delays[i - 1]))
      throw config_error("delays must be strictly increasing");
  }
  if (!(spec.noise_sigma >= 0.0))
    throw config_error("noise sigma must be non-negative");
  if (!(spec.confidence > 0.0 && spec.confidence <= 1.0))
    throw config_error("confidence must lie in (0, 1]");
  if (!(spec.category_base > 0.0 && spec.category_base < 1.0 / 3.0))
    throw config_error("category base rate must lie in (0, 1/3)");
  if (!(spec.threshold_ratio > 0.0))
    throw config_error("threshold ratio must be positive");
  if (spec.mode == DataMode::ThreeCategory && spec.noise_sigma == 0.0)
    throw config_error(
        "three-category mode needs noise sigma > 0 (threshold would vanish)");
  if (spec.mode == DataMode::Quantitative && spec.noise_sigma == 0.0)
    throw config_error("quantitative mode needs noise sigma > 0");
}

inline ConstraintStatement category_statement(const std::string& observable,
                                              RelOp op, double threshold,
                                              double time,
                                              const Qualifier& qualifier) {
  ConstraintStatement stmt;
  stmt.lhs = Operand::observable(observable);
  stmt.op = op;
  stmt.rhs = Operand::number(threshold);
  stmt.enforcement.mode = Enforcement::Mode::AtTime;
  stmt.enforcement.time = time;
  stmt.qualifier = qualifier;
  return stmt;
}

}  // namespace detail

// Generates one dataset realization.  All modes consume the noise stream
// identically (two draws per delay, in delay order), so a fixed seed pins
// the same noisy outputs regardless of which file format is requested.
inline SyntheticDataset generate(const SyntheticSpec& spec) {
  detail::validate_spec(spec);
  std::unique_ptr<Model> model = make_model(spec.model);
  std::vector<double> theta =
      spec.ground_truth.empty() ? model->default_parameters()
                                : spec.ground_truth;
  Protocol protocol;
  protocol.times = spec.delays;
  protocol.rk_step = spec.rk_step;
  Trajectory traj = model->simulate(theta, protocol);
  if (traj.failed)
    throw data_error("ground-truth simulation failed: " + traj.failure_reason);
  if (!traj.has("p1") || !traj.has("p3"))
    throw config_error("model '" + spec.model +
                       "' lacks the p1/p3 observables needed for generation");

  SyntheticDataset dataset;
  dataset.diff_sigma = difference_sigma(spec.noise_sigma, spec.sigma_rule);
  dataset.threshold =
      detail::snap_decimal(spec.threshold_ratio * dataset.diff_sigma);

  Rng rng(detail::derive_stream(spec.seed, 0));
  const std::vector<double>& p1 = traj.at("p1");
  const std::vector<double>& p3 = traj.at("p3");

  Qualifier two_cat;
  two_cat.kind = Qualifier::Kind::Likelihood;
  two_cat.confidence = spec.confidence;
  two_cat.tolerance = dataset.diff_sigma;

  Qualifier three_cat;
  three_cat.kind = Qualifier::Kind::LikelihoodAsym;
  three_cat.pmin = spec.category_base;
  three_cat.pmax = 1.0 - 2.0 * spec.category_base;
  three_cat.tolerance = dataset.diff_sigma;

  for (std::size_t i = 0; i < spec.delays.size(); ++i) {
    const double t = spec.delays[i];
    const double n1 = spec.noise_sigma * rng.normal();
    const double n2 = spec.noise_sigma * rng.normal();
    const double p1n = p1[i] + n1;
    const double p3n = p3[i] + n2;
    switch (spec.mode) {
      case DataMode::Quantitative:
        dataset.quantitative.push_back({"p1", t, p1n, spec.noise_sigma});
        dataset.quantitative.push_back({"p3", t, p3n, spec.noise_sigma});
        break;
      case DataMode::TwoCategory: {
        bool greater = p1n > p3n;
        dataset.primary_greater.push_back(greater);
        ConstraintStatement stmt;
        stmt.lhs = Operand::observable("p1");
        stmt.op = greater ? RelOp::Greater : RelOp::Less;
        stmt.rhs = Operand::observable("p3");
        stmt.enforcement.mode = Enforcement::Mode::AtTime;
        stmt.enforcement.time = t;
        stmt.qualifier = two_cat;
        dataset.statements.push_back(std::move(stmt));
        break;
      }
      case DataMode::ThreeCategory: {
        const double h = dataset.threshold;
        const double diff = p1n - p3n;
        if (diff < -h) {
          dataset.categories.push_back(Category::Lower);
          dataset.statements.push_back(detail::category_statement(
              "d13", RelOp::Less, -h, t, three_cat));
        } else if (diff > h) {
          dataset.categories.push_back(Category::Upper);
          dataset.statements.push_back(detail::category_statement(
              "d13", RelOp::Greater, h, t, three_cat));
        } else {
          // Middle band: reported as two one-sided observations.
          dataset.categories.push_back(Category::Middle);
          dataset.statements.push_back(detail::category_statement(
              "d13", RelOp::Greater, -h, t, three_cat));
          dataset.statements.push_back(detail::category_statement(
              "d13", RelOp::Less, h, t, three_cat));
        }
        break;
      }
    }
  }
  return dataset;
}

// ---------------------------------------------------------------------------
// File round-trip
// ---------------------------------------------------------------------------

inline void write_quantitative_csv(std::ostream& out,
                                   std::span<const QuantitativePoint> points) {
  out << "observable,delay,value,sigma\n";
  for (const QuantitativePoint& p : points)
    out << p.observable << ',' << format_full(p.time) << ','
        << format_full(p.value) << ',' << format_full(p.sigma) << '\n';
}

inline void write_quantitative_csv(const std::string& path,
                                   std::span<const QuantitativePoint> points) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  write_quantitative_csv(out, points);
}

inline std::vector<QuantitativePoint> read_quantitative_csv(
    std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw data_error("'" + origin + "' is empty");
  if (line != "observable,delay,value,sigma")
    throw data_error("'" + origin +
                     "': expected header observable,delay,value,sigma");
  std::vector<QuantitativePoint> points;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<std::string> fields;
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 4)
      throw parse_error("'" + origin + "': expected 4 fields", line_no, 1);
    QuantitativePoint p;
    p.observable = fields[0];
    const char* names[3] = {"delay", "value", "sigma"};
    double* slots[3] = {&p.time, &p.value, &p.sigma};
    for (int f = 0; f < 3; ++f) {
      const char* s = fields[f + 1].c_str();
      char* end = nullptr;
      *slots[f] = std::strtod(s, &end);
      if (end == s || *end != '\0')
        throw parse_error("'" + origin + "': bad " + names[f] + " '" +
                              fields[f + 1] + "'",
                          line_no, 1);
    }
    if (!(p.sigma > 0.0))
      throw data_error("'" + origin + "' line " + std::to_string(line_no) +
                       ": sigma must be positive");
    points.push_back(std::move(p));
  }
  return points;
}

inline std::vector<QuantitativePoint> read_quantitative_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open data file '" + path + "'");
  return read_quantitative_csv(in, path);
}

inline void write_statements(std::ostream& out,
                             std::span<const ConstraintStatement> statements) {
  for (const ConstraintStatement& stmt : statements)
    out << pretty_print(stmt) << '\n';
}

inline void write_statements(const std::string& path,
                             std::span<const ConstraintStatement> statements) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  write_statements(out, statements);
}

}  // namespace qualifit
