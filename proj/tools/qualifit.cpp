#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "qualifit/qualifit.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  flags.seed_opt = cmd->add_option("--seed", flags.seed,
                                   "override every seed in the config");
  flags.out_opt =
      cmd->add_option("--out", flags.out_dir, "override the [output] dir");
}

qualifit::RunConfig load(const CommonFlags& flags) {
  qualifit::RunConfig run = qualifit::load_run_config_file(flags.config_path);
  if (*flags.seed_opt) {
    run.sampler.seed = flags.seed;
    run.generate.seed = flags.seed;
    run.fit.seed = flags.seed;
  }
  if (*flags.out_opt) run.out_dir = flags.out_dir;
  return run;
}

// "LABEL=file[,file...]" -> labeled file group.
std::pair<std::string, std::vector<std::string>> parse_dataset_spec(
    const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw qualifit::config_error("--dataset expects LABEL=file[,file...], got '" +
                                 spec + "'");
  std::string label = spec.substr(0, eq);
  std::vector<std::string> files;
  std::size_t start = eq + 1;
  while (start <= spec.size()) {
    std::size_t comma = spec.find(',', start);
    if (comma == std::string::npos) comma = spec.size();
    std::string file = spec.substr(start, comma - start);
    if (!file.empty()) files.push_back(std::move(file));
    start = comma + 1;
  }
  if (files.empty())
    throw qualifit::config_error("--dataset '" + label + "' lists no files");
  return {std::move(label), std::move(files)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Bayesian parameter estimation for deterministic simulation models "
      "from qualitative and quantitative data"};
  app.require_subcommand(1);

  CommonFlags gen_flags, smp_flags, fit_flags;
  int runs = 1;
  int threads = 1;
  std::vector<std::string> sample_files;
  std::vector<std::string> dataset_specs;
  double level = 0.95;
  int bins = 40;
  std::string analyze_out = "out";
  std::string check_path;
  std::string check_model;

  CLI::App* gen = app.add_subcommand(
      "generate", "write a synthetic dataset from the [generate] section");
  add_common(gen, gen_flags);

  CLI::App* smp = app.add_subcommand(
      "sample", "run parallel-tempering MCMC and write posterior samples");
  add_common(smp, smp_flags);
  smp->add_option("--runs", runs, "seed-offset replicate runs")
      ->check(CLI::PositiveNumber);
  CLI::Option* threads_opt =
      smp->add_option("--threads", threads, "override [sampler] threads")
          ->check(CLI::PositiveNumber);

  CLI::App* fit = app.add_subcommand(
      "fit", "anneal to a point estimate and write a parameter file");
  add_common(fit, fit_flags);

  CLI::App* ana =
      app.add_subcommand("analyze", "summarize posterior sample files");
  ana->add_option("files", sample_files, "sample CSV files (merged)");
  ana->add_option("--dataset", dataset_specs,
                  "LABEL=file[,file...] group; repeat to compare widths");
  ana->add_option("--level", level, "credible level");
  ana->add_option("--bins", bins, "histogram bins")->check(CLI::PositiveNumber);
  ana->add_option("--out", analyze_out, "output directory");

  CLI::App* chk =
      app.add_subcommand("check", "parse and validate a constraint file");
  chk->add_option("file", check_path, "constraint file")->required();
  chk->add_option("--model", check_model,
                  "also check observable names against this model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      qualifit::run_generate(load(gen_flags), std::cout);
    } else if (smp->parsed()) {
      qualifit::RunConfig run = load(smp_flags);
      if (*threads_opt) run.sampler.threads = threads;
      qualifit::run_sample(run, runs, std::cout);
    } else if (fit->parsed()) {
      qualifit::run_fit(load(fit_flags), std::cout);
    } else if (ana->parsed()) {
      qualifit::AnalyzeRequest req;
      req.files = sample_files;
      for (const std::string& spec : dataset_specs)
        req.datasets.push_back(parse_dataset_spec(spec));
      req.level = level;
      req.bins = bins;
      req.out_dir = analyze_out;
      qualifit::run_analyze(req, std::cout);
    } else if (chk->parsed()) {
      qualifit::run_check(check_path, check_model, std::cout);
    }
  } catch (const qualifit::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const qualifit::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
