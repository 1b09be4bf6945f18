#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qualifit/analysis.hpp"
#include "qualifit/config.hpp"
#include "qualifit/constraint.hpp"
#include "qualifit/error.hpp"
#include "qualifit/likelihood.hpp"
#include "qualifit/model.hpp"
#include "qualifit/sampler.hpp"
#include "qualifit/synthetic.hpp"

namespace qualifit {

// ---------------------------------------------------------------------------
// Pipeline drivers behind the command-line subcommands.  Each driver takes an
// assembled RunConfig, works purely through the filesystem plus a log stream,
// and reports problems via the usual error classes; main() owns the mapping
// to exit codes.
// ---------------------------------------------------------------------------

struct DataBundle {
  std::vector<QuantitativePoint> quantitative;
  std::vector<ConstraintStatement> statements;
  NormalizedSet normalized;
};

inline DataBundle load_data(const RunConfig& run) {
  DataBundle bundle;
  if (!run.quantitative_path.empty())
    bundle.quantitative = read_quantitative_csv(run.quantitative_path);
  if (!run.constraints_path.empty()) {
    bundle.statements = parse_constraints_file(run.constraints_path);
    bundle.normalized = normalize_all(bundle.statements);
  }
  return bundle;
}

namespace detail {

inline void check_observable(const Model& model, const std::string& name,
                             const std::string& context) {
  const std::vector<std::string>& known = model.observable_names();
  if (std::find(known.begin(), known.end(), name) != known.end()) return;
  std::string list;
  for (const std::string& k : known) {
    if (!list.empty()) list += ", ";
    list += k;
  }
  throw config_error(context + " names unknown observable '" + name +
                     "' for model '" + model.name() + "' (available: " + list + ")");
}

inline void check_binding(const Model& model, const ReducedBinding& b) {
  std::string context = "statement '" + b.label + "'";
  if (!b.lhs.is_literal) check_observable(model, b.lhs.name, context);
  if (!b.rhs.is_literal) check_observable(model, b.rhs.name, context);
}

}  // namespace detail

// Every observable referenced by the data must exist in the model; catching
// this up front keeps the objective exception-free on worker threads.
inline void validate_data(const Model& model, const DataBundle& bundle) {
  for (const QuantitativePoint& p : bundle.quantitative)
    detail::check_observable(model, p.observable, "quantitative data");
  for (const QualitativeObservation& o : bundle.normalized.observations)
    detail::check_binding(model, o.binding);
  for (const PenaltyTerm& p : bundle.normalized.penalties)
    detail::check_binding(model, p.binding);
}

// The simulation grid: explicit [protocol] times joined with every time the
// data actually references, so point lookups hit grid nodes exactly.  Window
// statements need an explicit grid (the data does not say how finely to
// resolve the window).
inline std::vector<double> resolve_protocol(const RunConfig& run,
                                            const DataBundle& bundle) {
  std::vector<double> times = run.protocol_times;
  for (const QuantitativePoint& p : bundle.quantitative) times.push_back(p.time);
  auto scan = [&](const ReducedBinding& b) {
    if (b.reduction == Reduction::PointInTime) {
      times.push_back(b.time);
      return;
    }
    if (run.protocol_times.empty())
      throw config_error("statement '" + b.label +
                         "' enforces over a window; set [protocol] times");
    if (b.window && (b.window->first < run.protocol_times.front() ||
                     b.window->second > run.protocol_times.back()))
      throw config_error("statement '" + b.label + "' window [" +
                         format_number(b.window->first) + ", " +
                         format_number(b.window->second) +
                         "] reaches outside the [protocol] times range");
  };
  for (const QualitativeObservation& o : bundle.normalized.observations)
    scan(o.binding);
  for (const PenaltyTerm& p : bundle.normalized.penalties) scan(p.binding);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (!times.empty())
    validate_protocol({times, run.rk_step});
  return times;
}

// Assemble the sampling/optimization objective.  Non-prior parameters stay
// fixed at theta0; the callable is pure per call, so the sampler may invoke
// it from several threads at once.
inline Problem make_problem(const RunConfig& run, const DataBundle& bundle,
                            FitObjective objective) {
  validate_data(*run.model, bundle);
  Problem prob;
  prob.param_names = run.prior_names;
  prob.priors = run.priors;

  const Model* model = run.model.get();
  Protocol protocol{resolve_protocol(run, bundle), run.rk_step};
  std::vector<double> theta0 = run.theta0;
  std::vector<int> index = run.prior_index;

  if (objective == FitObjective::Likelihood) {
    if (bundle.quantitative.empty() && bundle.normalized.observations.empty()) {
      // No data: the posterior is the prior.
      prob.nll = [](std::span<const double>) { return 0.0; };
      return prob;
    }
    prob.nll = [model, protocol, theta0, index, quant = bundle.quantitative,
                obs = bundle.normalized.observations](std::span<const double> th) {
      std::vector<double> full = theta0;
      for (std::size_t i = 0; i < index.size(); ++i)
        full[static_cast<std::size_t>(index[i])] = th[i];
      Trajectory traj = model->simulate(full, protocol);
      return total_nll(quant, obs, traj).value;
    };
    return prob;
  }

  prob.nll = [model, protocol, theta0, index,
              pens = bundle.normalized.penalties](std::span<const double> th) {
    std::vector<double> full = theta0;
    for (std::size_t i = 0; i < index.size(); ++i)
      full[static_cast<std::size_t>(index[i])] = th[i];
    Trajectory traj = model->simulate(full, protocol);
    return static_penalty(pens, traj);
  };
  return prob;
}

namespace detail {

inline std::string out_path(const RunConfig& run, const std::string& name) {
  std::filesystem::create_directories(run.out_dir);
  return (std::filesystem::path(run.out_dir) / name).string();
}

}  // namespace detail

// --- generate ---------------------------------------------------------------

inline std::vector<std::string> run_generate(const RunConfig& run,
                                             std::ostream& log) {
  if (!run.has_generate)
    throw config_error(run.origin + ": generate needs a [generate] section");
  SyntheticDataset dataset = generate(run.generate);

  std::vector<std::string> files;
  std::string truth = detail::out_path(run, "ground_truth.txt");
  write_parameter_file(truth, run.model->parameter_names(), run.theta0);
  files.push_back(truth);

  if (run.generate.mode == DataMode::Quantitative) {
    std::string path = detail::out_path(run, "quantitative.csv");
    write_quantitative_csv(path, dataset.quantitative);
    files.push_back(path);
    log << "wrote " << dataset.quantitative.size() << " quantitative rows\n";
  } else {
    std::string path = detail::out_path(run, "constraints.txt");
    write_statements(path, dataset.statements);
    files.push_back(path);
    log << "wrote " << dataset.statements.size() << " constraint statements\n";
  }
  for (const std::string& f : files) log << "  " << f << "\n";
  return files;
}

// --- sample -----------------------------------------------------------------

inline void reject_weight_statements(const DataBundle& bundle,
                                     const std::string& command) {
  if (bundle.normalized.penalties.empty()) return;
  throw config_error(
      "constraint file contains " +
      std::to_string(bundle.normalized.penalties.size()) +
      " weight-qualified statement(s), which have no likelihood; " + command +
      " accepts confidence/pmin-pmax statements only (use fit with "
      "[fit] objective = penalty for weight statements)");
}

inline std::vector<std::string> run_sample(const RunConfig& run, int runs,
                                           std::ostream& log) {
  if (runs < 1) throw config_error("--runs must be >= 1");
  if (run.priors.empty())
    throw config_error(run.origin + ": sampling needs a [priors] section");
  DataBundle bundle = load_data(run);
  reject_weight_statements(bundle, "sample");
  Problem problem = make_problem(run, bundle, FitObjective::Likelihood);

  std::vector<std::string> files;
  for (int r = 0; r < runs; ++r) {
    SamplerConfig cfg = run.sampler;
    cfg.seed = run.sampler.seed + static_cast<std::uint64_t>(r);
    PosteriorSamples samples = pt_run(cfg, problem);
    std::string name = runs == 1 ? "samples.csv"
                                 : "samples_run" + std::to_string(r) + ".csv";
    std::string path = detail::out_path(run, name);
    write_samples_csv(path, samples);
    files.push_back(path);

    double accept = samples.proposals == 0
                        ? 0.0
                        : static_cast<double>(samples.accepted) /
                              static_cast<double>(samples.proposals);
    double swap = samples.swaps_attempted == 0
                      ? 0.0
                      : static_cast<double>(samples.swaps_accepted) /
                            static_cast<double>(samples.swaps_attempted);
    char stats[160];
    std::snprintf(stats, sizeof stats,
                  "seed %llu: %zu rows, acceptance %.3f, swap acceptance %.3f",
                  static_cast<unsigned long long>(cfg.seed),
                  samples.rows.size(), accept, swap);
    log << stats << "\n  " << path << "\n";
  }
  return files;
}

// --- fit --------------------------------------------------------------------

struct FitOutcome {
  std::string path;        // written parameter file
  std::vector<double> theta;  // full parameter vector behind it
  FitResult result;
};

inline FitOutcome run_fit(const RunConfig& run, std::ostream& log) {
  if (run.priors.empty())
    throw config_error(run.origin + ": fitting needs a [priors] section");
  if (run.fit_objective == FitObjective::Penalty && !run.quantitative_path.empty())
    throw config_error(
        "fit with [fit] objective = penalty takes weight statements only; "
        "remove [data] quantitative or switch to objective = likelihood");
  DataBundle bundle = load_data(run);
  if (run.fit_objective == FitObjective::Likelihood) {
    reject_weight_statements(bundle, "fit with objective = likelihood");
  } else {
    if (bundle.normalized.penalties.empty())
      throw config_error(
          "fit with [fit] objective = penalty needs weight-qualified "
          "statements");
    if (!bundle.normalized.observations.empty())
      throw config_error(
          "fit with [fit] objective = penalty takes weight statements only; "
          "remove confidence/pmin-pmax statements or switch to "
          "objective = likelihood");
  }
  Problem problem = make_problem(run, bundle, run.fit_objective);
  FitResult result = anneal_fit(run.fit, problem);

  std::vector<double> full = run.theta0;
  for (std::size_t i = 0; i < run.prior_index.size(); ++i)
    full[static_cast<std::size_t>(run.prior_index[i])] = result.best_theta[i];
  std::string path = detail::out_path(run, "fit.txt");
  write_parameter_file(path, run.model->parameter_names(), full);

  log << "objective " << format_full(result.initial_objective) << " -> "
      << format_full(result.best_objective) << " over " << result.proposals
      << " proposals\n  " << path << "\n";
  return {path, std::move(full), std::move(result)};
}

// --- analyze ----------------------------------------------------------------

struct AnalyzeRequest {
  std::vector<std::string> files;  // one merged group...
  std::vector<std::pair<std::string, std::vector<std::string>>>
      datasets;  // ...or labeled groups compared side by side
  double level = 0.95;
  int bins = 40;
  std::string out_dir = "out";
};

namespace detail {

inline PosteriorSamples read_group(const std::vector<std::string>& files) {
  std::vector<PosteriorSamples> parts;
  parts.reserve(files.size());
  for (const std::string& f : files) parts.push_back(read_samples_csv(f));
  return merge_samples(parts);
}

}  // namespace detail

inline std::vector<std::string> run_analyze(const AnalyzeRequest& req,
                                            std::ostream& log) {
  if (req.files.empty() == req.datasets.empty())
    throw config_error(
        "analyze takes either sample files or --dataset groups (and needs at "
        "least one)");
  std::filesystem::create_directories(req.out_dir);
  auto in_out = [&](const std::string& name) {
    return (std::filesystem::path(req.out_dir) / name).string();
  };
  std::vector<std::string> files;

  if (!req.datasets.empty()) {
    std::vector<std::string> labels;
    std::vector<std::vector<MarginalSummary>> groups;
    for (const auto& [label, group_files] : req.datasets) {
      PosteriorSamples samples = detail::read_group(group_files);
      groups.push_back(summarize(samples, req.level, req.bins));
      labels.push_back(label);
      std::string path = in_out("summary_" + label + ".csv");
      write_summary_csv(path, groups.back());
      files.push_back(path);
    }
    WidthReport report = compare_widths(labels, groups);
    std::string path = in_out("widths.csv");
    write_width_report_csv(path, report);
    files.push_back(path);
    for (const std::string& f : files) log << "  " << f << "\n";
    return files;
  }

  PosteriorSamples samples = detail::read_group(req.files);
  std::vector<MarginalSummary> summaries = summarize(samples, req.level, req.bins);
  std::string path = in_out("summary.csv");
  write_summary_csv(path, summaries);
  files.push_back(path);

  for (std::size_t i = 0; i < summaries.size(); ++i) {
    std::string hist = in_out(summaries[i].param + ".hist");
    write_histogram_csv(hist, summaries[i].hist);
    files.push_back(hist);
    std::string trace = in_out(summaries[i].param + ".trace");
    write_trace(trace, samples, i);
    files.push_back(trace);
  }

  if (samples.rows.size() >= 2) {
    std::vector<std::vector<double>> corr = pairwise_correlation(samples);
    std::string cpath = in_out("correlation.csv");
    std::ofstream out(cpath);
    if (!out) throw config_error("cannot open '" + cpath + "' for writing");
    out << "param";
    for (const std::string& name : samples.param_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < corr.size(); ++i) {
      out << samples.param_names[i];
      for (double v : corr[i]) out << ',' << format_full(v);
      out << '\n';
    }
    files.push_back(cpath);
  }
  if (samples.rows.size() >= 4) {
    std::vector<SplitHalfRow> rows = split_half_report(samples, req.level);
    std::string spath = in_out("split_half.csv");
    std::ofstream out(spath);
    if (!out) throw config_error("cannot open '" + spath + "' for writing");
    out << "param,width_first,width_second,rel_diff\n";
    for (const SplitHalfRow& r : rows)
      out << r.param << ',' << format_full(r.width_first) << ','
          << format_full(r.width_second) << ',' << format_full(r.rel_diff)
          << '\n';
    files.push_back(spath);
  }
  for (const std::string& f : files) log << "  " << f << "\n";
  return files;
}

// --- check ------------------------------------------------------------------

// Parses and normalizes a constraint file and prints family diagnostics.
// Parse and normalization failures throw (exit 2); family diagnostics are
// warnings and leave the exit code at 0.
inline int run_check(const std::string& path, const std::string& model_name,
                     std::ostream& log) {
  std::vector<ConstraintStatement> statements = parse_constraints_file(path);
  NormalizedSet normalized = normalize_all(statements);
  if (!model_name.empty()) {
    auto model = make_model(model_name);
    DataBundle bundle;
    bundle.statements = statements;
    bundle.normalized = normalized;
    validate_data(*model, bundle);
  }
  std::vector<Diagnostic> diags = validate_category_family(statements);
  for (const Diagnostic& d : diags)
    log << path << ":" << d.line << ": warning: " << d.message << "\n";
  log << path << ": " << statements.size() << " statement(s) ("
      << normalized.observations.size() << " likelihood, "
      << normalized.penalties.size() << " weight), " << diags.size()
      << " warning(s)\n";
  return static_cast<int>(diags.size());
}

}  // namespace qualifit
