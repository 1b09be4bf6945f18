#pragma once

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qualifit/error.hpp"
#include "qualifit/model.hpp"
#include "qualifit/sampler.hpp"
#include "qualifit/synthetic.hpp"

namespace qualifit {

// ---------------------------------------------------------------------------
// Raw configuration files
// ---------------------------------------------------------------------------
// Plain text, one `key = value` per line, grouped under `[section]` headers.
// '#' starts a comment, blank lines are ignored, values keep internal spaces.
// Lists are comma-separated; grids may also be written geom(lo, hi, n) or
// lin(lo, hi, n).

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> to_double(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const char* begin = text.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + text.size()) return std::nullopt;
  return v;
}

inline std::optional<long> to_long(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const char* begin = text.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end != begin + text.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(trim(std::string_view(text).substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
  mutable bool used = false;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;
};

// Parsed configuration file.  Typed getters mark entries as consumed so that
// ensure_all_used() can flag misspelled or misplaced keys instead of
// silently ignoring them.
class Config {
 public:
  std::string origin = "<config>";
  std::vector<ConfigSection> sections;

  static Config parse(const std::string& text, std::string origin) {
    Config cfg;
    cfg.origin = std::move(origin);
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    ConfigSection* current = nullptr;
    while (std::getline(in, raw)) {
      ++line_no;
      auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      std::string line = detail::trim(raw);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw config_error(cfg.where(line_no) + "unterminated section header");
        std::string name = detail::trim(std::string_view(line).substr(1, line.size() - 2));
        if (name.empty())
          throw config_error(cfg.where(line_no) + "empty section name");
        if (cfg.find_section(name))
          throw config_error(cfg.where(line_no) + "duplicate section [" + name + "]");
        cfg.sections.push_back({name, line_no, {}});
        current = &cfg.sections.back();
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw config_error(cfg.where(line_no) + "expected 'key = value', got '" + line + "'");
      std::string key = detail::trim(std::string_view(line).substr(0, eq));
      std::string value = detail::trim(std::string_view(line).substr(eq + 1));
      if (key.empty())
        throw config_error(cfg.where(line_no) + "missing key before '='");
      if (value.empty())
        throw config_error(cfg.where(line_no) + "missing value for key '" + key + "'");
      if (!current)
        throw config_error(cfg.where(line_no) + "key '" + key +
                           "' appears before any [section] header");
      for (const ConfigEntry& e : current->entries)
        if (e.key == key)
          throw config_error(cfg.where(line_no) + "duplicate key '" + key + "' in [" +
                             current->name + "] (first set on line " +
                             std::to_string(e.line) + ")");
      current->entries.push_back({key, value, line_no, false});
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse(text, path);
  }

  const ConfigSection* find_section(const std::string& name) const {
    for (const ConfigSection& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }

  bool has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
  }

  // Entries handed out through find() count as consumed.
  const ConfigEntry* find(const std::string& section, const std::string& key) const {
    const ConfigSection* s = find_section(section);
    if (!s) return nullptr;
    for (const ConfigEntry& e : s->entries)
      if (e.key == key) {
        e.used = true;
        return &e;
      }
    return nullptr;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         std::string fallback) const {
    const ConfigEntry* e = find(section, key);
    return e ? e->value : std::move(fallback);
  }

  std::string require_string(const std::string& section, const std::string& key) const {
    const ConfigEntry* e = find(section, key);
    if (!e)
      throw config_error(origin + ": missing required key '" + key + "' in [" +
                         section + "]");
    return e->value;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    const ConfigEntry* e = find(section, key);
    if (!e) return fallback;
    auto v = detail::to_double(e->value);
    if (!v)
      throw config_error(where(e->line) + "[" + section + "] " + key +
                         " expects a number, got '" + e->value + "'");
    return *v;
  }

  long get_long(const std::string& section, const std::string& key,
                long fallback) const {
    const ConfigEntry* e = find(section, key);
    if (!e) return fallback;
    auto v = detail::to_long(e->value);
    if (!v)
      throw config_error(where(e->line) + "[" + section + "] " + key +
                         " expects an integer, got '" + e->value + "'");
    return *v;
  }

  // Comma list of numbers.
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key) const {
    const ConfigEntry* e = find(section, key);
    if (!e) return {};
    std::vector<double> out;
    for (const std::string& item : detail::split_list(e->value)) {
      auto v = detail::to_double(item);
      if (!v)
        throw config_error(where(e->line) + "[" + section + "] " + key +
                           " expects numbers, got '" + item + "'");
      out.push_back(*v);
    }
    return out;
  }

  // Grid value: geom(lo, hi, n), lin(lo, hi, n), or an explicit ascending
  // comma list.
  std::vector<double> get_grid(const std::string& section,
                               const std::string& key) const {
    const ConfigEntry* e = find(section, key);
    if (!e) return {};
    auto fail = [&](const std::string& why) {
      return config_error(where(e->line) + "[" + section + "] " + key + ": " + why);
    };
    const std::string& v = e->value;
    bool geom = v.rfind("geom(", 0) == 0;
    bool lin = v.rfind("lin(", 0) == 0;
    if (geom || lin) {
      if (v.back() != ')') throw fail("missing closing ')'");
      std::size_t open = v.find('(');
      std::vector<std::string> args =
          detail::split_list(v.substr(open + 1, v.size() - open - 2));
      if (args.size() != 3) throw fail("expected (lo, hi, n)");
      auto lo = detail::to_double(args[0]);
      auto hi = detail::to_double(args[1]);
      auto n = detail::to_long(args[2]);
      if (!lo || !hi || !n) throw fail("expected (lo, hi, n) with numeric arguments");
      if (*n < 1) throw fail("n must be >= 1");
      if (geom) {
        if (!(*lo > 0.0 && *hi > *lo)) throw fail("geom needs 0 < lo < hi");
        return geometric_delays(static_cast<int>(*n), *lo, *hi);
      }
      if (*n == 1) {
        if (*lo != *hi) throw fail("lin with n=1 needs lo == hi");
        return {*lo};
      }
      if (!(*hi > *lo)) throw fail("lin needs lo < hi");
      std::vector<double> out(static_cast<std::size_t>(*n));
      for (long i = 0; i < *n; ++i)
        out[static_cast<std::size_t>(i)] =
            *lo + (*hi - *lo) * static_cast<double>(i) / static_cast<double>(*n - 1);
      out.back() = *hi;
      return out;
    }
    std::vector<double> out;
    for (const std::string& item : detail::split_list(v)) {
      auto x = detail::to_double(item);
      if (!x) throw fail("expected a number, got '" + item + "'");
      out.push_back(*x);
    }
    for (std::size_t i = 1; i < out.size(); ++i)
      if (!(out[i] > out[i - 1])) throw fail("values must be strictly increasing");
    return out;
  }

  // Unknown keys are configuration mistakes, not extensions to ignore.
  void ensure_all_used() const {
    for (const ConfigSection& s : sections)
      for (const ConfigEntry& e : s.entries)
        if (!e.used)
          throw config_error(where(e.line) + "unknown key '" + e.key + "' in [" +
                             s.name + "]");
  }

  std::string where(int line) const {
    return origin + ":" + std::to_string(line) + ": ";
  }
};

// ---------------------------------------------------------------------------
// Parameter files
// ---------------------------------------------------------------------------
// `name = value` lines, '#' comments; used for model parameter overrides and
// for fit results, so a fit output can feed straight back in.

inline std::vector<std::pair<std::string, double>> read_parameter_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open parameter file '" + path + "'");
  std::vector<std::pair<std::string, double>> out;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = detail::trim(raw);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw data_error(path + ":" + std::to_string(line_no) +
                       ": expected 'name = value', got '" + line + "'");
    std::string key = detail::trim(std::string_view(line).substr(0, eq));
    std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    auto v = detail::to_double(value);
    if (key.empty() || !v)
      throw data_error(path + ":" + std::to_string(line_no) +
                       ": expected 'name = value', got '" + line + "'");
    for (const auto& [k, _] : out)
      if (k == key)
        throw data_error(path + ":" + std::to_string(line_no) +
                         ": duplicate parameter '" + key + "'");
    out.emplace_back(key, *v);
  }
  return out;
}

inline void write_parameter_file(const std::string& path,
                                 std::span<const std::string> names,
                                 std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write parameter file '" + path + "'");
  for (std::size_t i = 0; i < names.size(); ++i)
    out << names[i] << " = " << format_full(values[i]) << "\n";
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

enum class FitObjective { Likelihood, Penalty };

// Everything a pipeline command needs, assembled from one config file.
// theta0 holds the model's working parameter values (defaults overlaid with
// the [model] parameters file); generate uses it as the ground truth and
// sample/fit hold non-prior parameters fixed at it.
struct RunConfig {
  std::string origin;
  std::unique_ptr<Model> model;
  std::vector<double> theta0;

  std::vector<double> protocol_times;  // empty: derive from the data files
  double rk_step = 0.01;

  std::vector<std::string> prior_names;  // declaration order
  std::vector<int> prior_index;          // position in the model's theta
  std::vector<PriorSpec> priors;

  SamplerConfig sampler;
  std::string quantitative_path;  // empty: none
  std::string constraints_path;   // empty: none

  bool has_generate = false;
  SyntheticSpec generate;

  FitObjective fit_objective = FitObjective::Likelihood;
  FitConfig fit;

  std::string out_dir = "out";
};

namespace detail {

inline PriorSpec parse_prior(const Config& cfg, const ConfigEntry& entry) {
  std::istringstream in(entry.value);
  std::string kind;
  double lo = 0.0, hi = 0.0;
  std::string rest;
  if (!(in >> kind >> lo >> hi) || (in >> rest))
    throw config_error(cfg.where(entry.line) + "prior '" + entry.key +
                       "' expects 'uniform LO HI' or 'loguniform LO HI', got '" +
                       entry.value + "'");
  try {
    if (kind == "uniform") return PriorSpec::uniform(lo, hi);
    if (kind == "loguniform") return PriorSpec::log_uniform(lo, hi);
  } catch (const config_error& err) {
    throw config_error(cfg.where(entry.line) + "prior '" + entry.key +
                       "': " + err.what());
  }
  throw config_error(cfg.where(entry.line) + "unknown prior kind '" + kind +
                     "' (available: uniform, loguniform)");
}

}  // namespace detail

inline RunConfig load_run_config(const Config& cfg) {
  RunConfig run;
  run.origin = cfg.origin;

  // [model]
  run.model = make_model(cfg.require_string("model", "name"));
  run.theta0 = run.model->default_parameters();
  if (cfg.has("model", "parameters")) {
    std::string path = cfg.require_string("model", "parameters");
    for (const auto& [name, value] : read_parameter_file(path)) {
      int idx = run.model->parameter_index(name);
      if (idx < 0)
        throw config_error(path + ": unknown parameter '" + name + "' for model '" +
                           run.model->name() + "'");
      run.theta0[static_cast<std::size_t>(idx)] = value;
    }
  }

  // [protocol]
  run.protocol_times = cfg.get_grid("protocol", "times");
  run.rk_step = cfg.get_double("protocol", "rk_step", run.rk_step);
  if (!(run.rk_step > 0.0))
    throw config_error(cfg.origin + ": [protocol] rk_step must be > 0");

  // [priors]
  if (const ConfigSection* priors = cfg.find_section("priors")) {
    for (const ConfigEntry& e : priors->entries) {
      int idx = run.model->parameter_index(e.key);
      if (idx < 0)
        throw config_error(cfg.where(e.line) + "prior names unknown parameter '" +
                           e.key + "' for model '" + run.model->name() + "'");
      e.used = true;
      run.prior_names.push_back(e.key);
      run.prior_index.push_back(idx);
      run.priors.push_back(detail::parse_prior(cfg, e));
    }
  }

  // [sampler]
  SamplerConfig& s = run.sampler;
  s.n_temperatures = static_cast<int>(cfg.get_long("sampler", "n_temperatures", s.n_temperatures));
  s.chains_per_temperature = static_cast<int>(
      cfg.get_long("sampler", "chains_per_temperature", s.chains_per_temperature));
  s.n_steps = cfg.get_long("sampler", "n_steps", s.n_steps);
  s.burn_in = cfg.get_long("sampler", "burn_in", s.burn_in);
  s.swap_interval = static_cast<int>(cfg.get_long("sampler", "swap_interval", s.swap_interval));
  s.t_max = cfg.get_double("sampler", "t_max", s.t_max);
  if (cfg.has("sampler", "ladder")) s.ladder = cfg.get_doubles("sampler", "ladder");
  if (cfg.has("sampler", "proposal_scale"))
    s.proposal_scale = cfg.get_doubles("sampler", "proposal_scale");
  s.seed = static_cast<std::uint64_t>(cfg.get_long("sampler", "seed", 0));
  s.threads = static_cast<int>(cfg.get_long("sampler", "threads", s.threads));
  if (cfg.has("sampler", "initial")) {
    std::vector<double> init = cfg.get_doubles("sampler", "initial");
    if (init.size() != run.priors.size())
      throw config_error(cfg.origin + ": [sampler] initial needs one value per prior (" +
                         std::to_string(run.priors.size()) + "), got " +
                         std::to_string(init.size()));
    s.initial_theta = std::move(init);
  }

  // [data]  (existence is checked when a command reads the file, so a single
  // config may name outputs an earlier pipeline step has yet to produce)
  run.quantitative_path = cfg.get_string("data", "quantitative", "");
  run.constraints_path = cfg.get_string("data", "constraints", "");

  // [generate]
  if (const ConfigSection* gen = cfg.find_section("generate")) {
    run.has_generate = true;
    SyntheticSpec& g = run.generate;
    g.model = run.model->name();
    g.ground_truth = run.theta0;
    g.rk_step = run.rk_step;
    std::string mode = cfg.get_string("generate", "mode", "two-category");
    if (mode == "quantitative")
      g.mode = DataMode::Quantitative;
    else if (mode == "two-category")
      g.mode = DataMode::TwoCategory;
    else if (mode == "three-category")
      g.mode = DataMode::ThreeCategory;
    else
      throw config_error(cfg.origin + ": [generate] mode '" + mode +
                         "' unknown (available: quantitative, two-category, three-category)");
    g.delays = cfg.get_grid("generate", "delays");
    if (g.delays.empty())
      throw config_error(cfg.origin + ": [generate] requires delays");
    g.noise_sigma = cfg.get_double("generate", "noise_sigma", g.noise_sigma);
    std::string rule = cfg.get_string("generate", "sigma_rule", "sum");
    if (rule == "sum")
      g.sigma_rule = SigmaRule::Sum;
    else if (rule == "quadrature")
      g.sigma_rule = SigmaRule::Quadrature;
    else
      throw config_error(cfg.origin + ": [generate] sigma_rule '" + rule +
                         "' unknown (available: sum, quadrature)");
    g.confidence = cfg.get_double("generate", "confidence", g.confidence);
    g.category_base = cfg.get_double("generate", "category_base", g.category_base);
    g.threshold_ratio = cfg.get_double("generate", "threshold_ratio", g.threshold_ratio);
    g.seed = static_cast<std::uint64_t>(cfg.get_long("generate", "seed", 0));
    (void)gen;
  }

  // [fit]
  std::string objective = cfg.get_string("fit", "objective", "likelihood");
  if (objective == "likelihood")
    run.fit_objective = FitObjective::Likelihood;
  else if (objective == "penalty")
    run.fit_objective = FitObjective::Penalty;
  else
    throw config_error(cfg.origin + ": [fit] objective '" + objective +
                       "' unknown (available: likelihood, penalty)");
  run.fit.n_steps = cfg.get_long("fit", "n_steps", run.fit.n_steps);
  run.fit.t_start = cfg.get_double("fit", "t_start", run.fit.t_start);
  run.fit.t_end = cfg.get_double("fit", "t_end", run.fit.t_end);
  run.fit.proposal_scale = run.sampler.proposal_scale;
  run.fit.seed = run.sampler.seed;
  run.fit.initial_theta = run.sampler.initial_theta;

  // [output]
  run.out_dir = cfg.get_string("output", "dir", run.out_dir);

  cfg.ensure_all_used();
  return run;
}

inline RunConfig load_run_config_file(const std::string& path) {
  return load_run_config(Config::parse_file(path));
}

}  // namespace qualifit
