#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qualifit/error.hpp"
#include "qualifit/likelihood.hpp"

namespace qualifit {

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

// Box prior for one parameter.  Log-uniform parameters are sampled in log10
// space, where the prior density is flat; uniform parameters are sampled
// as-is.  Either way the walker sees a flat density inside a box, so the
// prior term cancels from every acceptance ratio and the energy is just the
// negative log-likelihood.
struct PriorSpec {
  enum class Kind { Uniform, LogUniform };
  Kind kind = Kind::Uniform;
  double lo = 0.0;
  double hi = 1.0;

  static PriorSpec uniform(double lo, double hi) {
    if (!(lo < hi)) throw config_error("prior requires lo < hi");
    return {Kind::Uniform, lo, hi};
  }
  static PriorSpec log_uniform(double lo, double hi) {
    if (!(lo < hi)) throw config_error("prior requires lo < hi");
    if (!(lo > 0.0)) throw config_error("log-uniform prior requires lo > 0");
    return {Kind::LogUniform, lo, hi};
  }

  double to_sampling(double x) const {
    return kind == Kind::LogUniform ? std::log10(x) : x;
  }
  double from_sampling(double s) const {
    return kind == Kind::LogUniform ? std::pow(10.0, s) : s;
  }
  double sampling_lo() const { return to_sampling(lo); }
  double sampling_hi() const { return to_sampling(hi); }
};

// ---------------------------------------------------------------------------
// Deterministic RNG streams
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent stream per (seed, stream id): two mixing rounds give a
// well-scrambled 64-bit seed for the per-stream engine.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  splitmix64(x);
  return splitmix64(x);
}

}  // namespace detail

// Explicit uniform/normal draws on top of mt19937_64 so the number of engine
// calls per draw is fixed and results do not depend on library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in the open interval (0, 1).
  double u01() {
    return std::ldexp(static_cast<double>(gen_() >> 11) + 0.5, -53);
  }

  // Standard normal via Box-Muller; always consumes exactly two uniforms.
  double normal() {
    double u1 = u01();
    double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Sampler configuration
// ---------------------------------------------------------------------------

struct SamplerConfig {
  int n_temperatures = 9;
  int chains_per_temperature = 4;
  std::vector<double> ladder;  // empty -> geometric up to t_max
  double t_max = 100.0;
  long n_steps = 50000;
  long burn_in = 10000;
  int swap_interval = 10;
  std::vector<double> proposal_scale = {0.1};  // size 1 broadcasts
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<std::vector<double>> initial_theta;  // model space
};

inline std::vector<double> make_ladder(int n_temperatures, double t_max) {
  if (n_temperatures < 1)
    throw config_error("n_temperatures must be at least 1");
  std::vector<double> ladder(n_temperatures);
  if (n_temperatures == 1) {
    ladder[0] = 1.0;
    return ladder;
  }
  if (!(t_max >= 1.0)) throw config_error("t_max must be at least 1");
  double ratio = std::pow(t_max, 1.0 / (n_temperatures - 1));
  double t = 1.0;
  for (int i = 0; i < n_temperatures; ++i) {
    ladder[i] = t;
    t *= ratio;
  }
  ladder.back() = t_max;  // kill accumulated rounding at the hot end
  return ladder;
}

// The target density a chain actually samples: NLL over model-space theta.
// Must return +infinity (never NaN) for impossible or failed evaluations.
struct Problem {
  std::vector<std::string> param_names;
  std::vector<PriorSpec> priors;
  std::function<double(std::span<const double>)> nll;
};

inline std::vector<double> resolve_ladder(const SamplerConfig& cfg) {
  if (cfg.ladder.empty()) return make_ladder(cfg.n_temperatures, cfg.t_max);
  std::vector<double> ladder = cfg.ladder;
  if (static_cast<int>(ladder.size()) != cfg.n_temperatures)
    throw config_error("explicit ladder must list n_temperatures values");
  if (ladder.front() != 1.0)
    throw config_error("temperature ladder must start at 1");
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (!(ladder[i] >= ladder[i - 1]))
      throw config_error("temperature ladder must be non-decreasing");
  return ladder;
}

inline std::vector<double> resolve_scales(const SamplerConfig& cfg,
                                          std::size_t n_params) {
  std::vector<double> scales = cfg.proposal_scale;
  if (scales.size() == 1 && n_params > 1)
    scales.assign(n_params, scales[0]);
  if (scales.size() != n_params)
    throw config_error("proposal_scale must give 1 or one-per-parameter "
                       "values");
  for (double s : scales)
    if (!(s > 0.0)) throw config_error("proposal scales must be positive");
  return scales;
}

inline void validate_config(const SamplerConfig& cfg, const Problem& problem) {
  if (cfg.n_temperatures < 1)
    throw config_error("n_temperatures must be at least 1");
  if (cfg.chains_per_temperature < 1)
    throw config_error("chains_per_temperature must be at least 1");
  if (cfg.n_steps < 1) throw config_error("n_steps must be positive");
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.n_steps)
    throw config_error("burn_in must satisfy 0 <= burn_in < n_steps");
  if (cfg.swap_interval < 1)
    throw config_error("swap_interval must be at least 1");
  if (cfg.threads < 1) throw config_error("threads must be at least 1");
  if (problem.priors.size() != problem.param_names.size())
    throw config_error("problem needs one prior per parameter");
  if (problem.priors.empty())
    throw config_error("problem has no free parameters");
  if (!problem.nll) throw config_error("problem has no objective");
  resolve_ladder(cfg);
  resolve_scales(cfg, problem.priors.size());
  if (cfg.initial_theta) {
    if (cfg.initial_theta->size() != problem.priors.size())
      throw config_error("initial_theta size does not match the priors");
    for (std::size_t i = 0; i < problem.priors.size(); ++i) {
      double v = (*cfg.initial_theta)[i];
      if (!(v >= problem.priors[i].lo && v <= problem.priors[i].hi))
        throw config_error("initial_theta lies outside the prior box");
    }
  }
}

// ---------------------------------------------------------------------------
// Chain state and elementary moves
// ---------------------------------------------------------------------------

struct ChainState {
  std::vector<double> s;  // sampling-space coordinates
  double nll = kInf;      // energy at s (recomputable)
  int temp_slot = 0;
  Rng rng{0};
};

inline double mh_acceptance(double delta_e, double temperature) {
  if (std::isnan(delta_e)) return 0.0;
  if (delta_e <= 0.0) return 1.0;  // includes -inf
  return std::exp(-delta_e / temperature);
}

inline double swap_acceptance(double e_a, double e_b, double t_a, double t_b) {
  if (t_a == t_b) return 1.0;  // degenerate ladder: exponent is zero
  if (e_a == e_b) return 1.0;  // also covers both-infinite energies
  double q = (e_a - e_b) * (1.0 / t_a - 1.0 / t_b);
  if (std::isnan(q)) return 1.0;
  return q >= 0.0 ? 1.0 : std::exp(q);
}

namespace detail {

struct SamplingBox {
  std::vector<double> lo, hi;
};

inline SamplingBox make_box(std::span<const PriorSpec> priors) {
  SamplingBox box;
  for (const PriorSpec& p : priors) {
    box.lo.push_back(p.sampling_lo());
    box.hi.push_back(p.sampling_hi());
  }
  return box;
}

inline double eval_nll(const Problem& problem, std::span<const double> s,
                       std::vector<double>& theta_scratch) {
  theta_scratch.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    theta_scratch[i] = problem.priors[i].from_sampling(s[i]);
  double v = problem.nll(theta_scratch);
  return std::isnan(v) ? kInf : v;
}

struct ChainCounters {
  long proposed = 0;
  long accepted = 0;
  long infinite = 0;  // proposals whose energy came back +infinity
};

}  // namespace detail

// One random-walk Metropolis step at temperature T.  The proposal is an
// isotropic Gaussian in sampling space; a proposal outside the prior box is
// rejected before the objective is evaluated (and before the acceptance
// uniform is drawn).  In-box proposals always cost one objective evaluation
// and one acceptance uniform, so the chain's random stream advances the same
// way whether or not the move is accepted.
inline void mh_step(ChainState& chain, const Problem& problem,
                    const detail::SamplingBox& box,
                    std::span<const double> scales, double temperature,
                    std::vector<double>& proposal_scratch,
                    std::vector<double>& theta_scratch,
                    detail::ChainCounters& counters) {
  const std::size_t dim = chain.s.size();
  proposal_scratch.resize(dim);
  bool in_box = true;
  for (std::size_t i = 0; i < dim; ++i) {
    proposal_scratch[i] = chain.s[i] + scales[i] * chain.rng.normal();
    in_box = in_box && proposal_scratch[i] >= box.lo[i] &&
             proposal_scratch[i] <= box.hi[i];
  }
  ++counters.proposed;
  if (!in_box) return;
  double nll_new = detail::eval_nll(problem, proposal_scratch, theta_scratch);
  if (std::isinf(nll_new)) ++counters.infinite;
  double u = chain.rng.u01();
  if (u < mh_acceptance(nll_new - chain.nll, temperature)) {
    chain.s.swap(proposal_scratch);
    chain.nll = nll_new;
    ++counters.accepted;
  }
}

// Replica exchange between adjacent temperatures.  `u` is supplied by the
// caller so all swap randomness comes from one dedicated stream.
inline bool swap_attempt(ChainState& a, ChainState& b, double t_a, double t_b,
                         double u) {
  if (u < swap_acceptance(a.nll, b.nll, t_a, t_b)) {
    a.s.swap(b.s);
    std::swap(a.nll, b.nll);
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Posterior sample container and CSV round-trip
// ---------------------------------------------------------------------------

struct SampleRow {
  int chain = 0;
  long step = 0;
  double nll = 0.0;
  std::vector<double> theta;  // model space
};

struct PosteriorSamples {
  std::vector<std::string> param_names;
  std::vector<SampleRow> rows;  // step-major, chain-minor; T=1 only
  std::vector<double> ladder;
  long proposals = 0;
  long accepted = 0;
  long infinite_proposals = 0;
  long swaps_attempted = 0;
  long swaps_accepted = 0;
};

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_samples_csv(std::ostream& out,
                              const PosteriorSamples& samples) {
  out << "chain,step,nll";
  for (const std::string& n : samples.param_names) out << ',' << n;
  out << '\n';
  for (const SampleRow& row : samples.rows) {
    out << row.chain << ',' << row.step << ',' << format_full(row.nll);
    for (double v : row.theta) out << ',' << format_full(v);
    out << '\n';
  }
}

inline void write_samples_csv(const std::string& path,
                              const PosteriorSamples& samples) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  write_samples_csv(out, samples);
  if (!out) throw data_error("failed writing samples to '" + path + "'");
}

inline PosteriorSamples read_samples_csv(std::istream& in,
                                         const std::string& origin) {
  PosteriorSamples samples;
  std::string line;
  if (!std::getline(in, line))
    throw data_error("'" + origin + "' is empty");
  std::vector<std::string> header;
  std::stringstream hs(line);
  std::string field;
  while (std::getline(hs, field, ',')) header.push_back(field);
  if (header.size() < 4 || header[0] != "chain" || header[1] != "step" ||
      header[2] != "nll")
    throw data_error("'" + origin +
                     "': expected header chain,step,nll,<parameters>");
  samples.param_names.assign(header.begin() + 3, header.end());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ls(line);
    SampleRow row;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != header.size())
      throw parse_error("'" + origin + "': wrong field count", line_no, 1);
    char* end = nullptr;
    row.chain = static_cast<int>(std::strtol(fields[0].c_str(), &end, 10));
    row.step = std::strtol(fields[1].c_str(), &end, 10);
    row.nll = std::strtod(fields[2].c_str(), &end);
    for (std::size_t i = 3; i < fields.size(); ++i) {
      const char* s = fields[i].c_str();
      double v = std::strtod(s, &end);
      if (end == s)
        throw parse_error("'" + origin + "': bad number '" + fields[i] + "'",
                          line_no, 1);
      row.theta.push_back(v);
    }
    samples.rows.push_back(std::move(row));
  }
  return samples;
}

inline PosteriorSamples read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open samples file '" + path + "'");
  return read_samples_csv(in, path);
}

// ---------------------------------------------------------------------------
// Parallel-tempering driver
// ---------------------------------------------------------------------------

namespace detail {

// Advances one chain for `block` steps, buffering rows if it is a cold chain
// past burn-in.  Runs with no shared mutable state, so the thread partition
// cannot change results.
struct ChainWorkspace {
  std::vector<double> proposal, theta;
  std::vector<SampleRow> buffer;
  ChainCounters counters;
};

}  // namespace detail

// Runs parallel tempering and returns the cold-chain samples.  Chain c uses
// random stream c+1; stream 0 is reserved for swap decisions.  Chains evolve
// independently between swap barriers (optionally on several threads), then
// adjacent temperature pairs are visited in a fixed alternating even/odd
// order.  Output is bit-identical for any thread count.
inline PosteriorSamples pt_run(const SamplerConfig& cfg,
                               const Problem& problem) {
  validate_config(cfg, problem);
  const std::vector<double> ladder = resolve_ladder(cfg);
  const std::size_t dim = problem.priors.size();
  const std::vector<double> scales = resolve_scales(cfg, dim);
  const detail::SamplingBox box = detail::make_box(problem.priors);
  const int cpt = cfg.chains_per_temperature;
  const int n_chains = cfg.n_temperatures * cpt;

  // Chain index c = slot*cpt + j: slot picks the temperature, j names the
  // replica column that swaps stay inside.
  std::vector<ChainState> chains;
  std::vector<detail::ChainWorkspace> work(n_chains);
  chains.reserve(n_chains);
  for (int c = 0; c < n_chains; ++c) {
    ChainState chain;
    chain.temp_slot = c / cpt;
    chain.rng = Rng(detail::derive_stream(cfg.seed, c + 1));
    chain.s.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (cfg.initial_theta) {
        chain.s[i] = problem.priors[i].to_sampling((*cfg.initial_theta)[i]);
      } else {
        double u = chain.rng.u01();
        chain.s[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * u;
      }
    }
    chain.nll = detail::eval_nll(problem, chain.s, work[c].theta);
    chains.push_back(std::move(chain));
  }
  Rng swap_rng(detail::derive_stream(cfg.seed, 0));

  auto advance = [&](int c, long step0, long block) {
    ChainState& chain = chains[c];
    detail::ChainWorkspace& ws = work[c];
    const double t = ladder[chain.temp_slot];
    const bool cold = chain.temp_slot == 0;
    for (long s = 0; s < block; ++s) {
      mh_step(chain, problem, box, scales, t, ws.proposal, ws.theta,
              ws.counters);
      long step = step0 + s + 1;
      if (cold && step > cfg.burn_in) {
        SampleRow row;
        row.chain = c % cpt;
        row.step = step;
        row.nll = chain.nll;
        row.theta.resize(dim);
        for (std::size_t i = 0; i < dim; ++i)
          row.theta[i] = problem.priors[i].from_sampling(chain.s[i]);
        ws.buffer.push_back(std::move(row));
      }
    }
  };

  PosteriorSamples samples;
  samples.param_names = problem.param_names;
  samples.ladder = ladder;

  long step0 = 0;
  long swap_round = 0;
  while (step0 < cfg.n_steps) {
    const long block = std::min<long>(cfg.swap_interval, cfg.n_steps - step0);
    if (cfg.threads == 1 || n_chains == 1) {
      for (int c = 0; c < n_chains; ++c) advance(c, step0, block);
    } else {
      int n_workers = std::min(cfg.threads, n_chains);
      std::vector<std::thread> workers;
      workers.reserve(n_workers);
      for (int w = 0; w < n_workers; ++w)
        workers.emplace_back([&, w] {
          for (int c = w; c < n_chains; c += n_workers)
            advance(c, step0, block);
        });
      for (std::thread& worker : workers) worker.join();
    }
    step0 += block;

    if (step0 >= cfg.n_steps) break;
    // Swap barrier: alternate even/odd adjacent temperature pairs; one
    // uniform is consumed per attempted pair no matter the outcome.
    int parity = static_cast<int>(swap_round++ % 2);
    for (int j = 0; j < cpt; ++j) {
      for (int slot = parity; slot + 1 < cfg.n_temperatures; slot += 2) {
        ChainState& a = chains[slot * cpt + j];
        ChainState& b = chains[(slot + 1) * cpt + j];
        double u = swap_rng.u01();
        ++samples.swaps_attempted;
        if (swap_attempt(a, b, ladder[slot], ladder[slot + 1], u))
          ++samples.swaps_accepted;
      }
    }
  }

  // Deterministic merge: step-major, then chain.  Every cold chain buffered
  // exactly one row per post-burn-in step, in step order.
  const long saved = cfg.n_steps - cfg.burn_in;
  samples.rows.reserve(static_cast<std::size_t>(saved) * cpt);
  std::vector<std::size_t> cursor(cpt, 0);
  for (long s = 0; s < saved; ++s)
    for (int j = 0; j < cpt; ++j)
      samples.rows.push_back(std::move(work[j].buffer[cursor[j]++]));
  for (int c = 0; c < n_chains; ++c) {
    samples.proposals += work[c].counters.proposed;
    samples.accepted += work[c].counters.accepted;
    samples.infinite_proposals += work[c].counters.infinite;
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Simulated-annealing point fit (shares the move machinery)
// ---------------------------------------------------------------------------

struct FitConfig {
  long n_steps = 20000;
  double t_start = 1.0;
  double t_end = 1e-3;
  std::vector<double> proposal_scale = {0.1};
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> initial_theta;
};

struct FitResult {
  std::vector<double> best_theta;  // model space
  double best_objective = kInf;
  double initial_objective = kInf;
  long accepted = 0;
  long proposals = 0;
};

inline FitResult anneal_fit(const FitConfig& cfg, const Problem& problem) {
  if (cfg.n_steps < 1) throw config_error("n_steps must be positive");
  if (!(cfg.t_start > 0.0) || !(cfg.t_end > 0.0) || cfg.t_end > cfg.t_start)
    throw config_error("annealing needs 0 < t_end <= t_start");
  SamplerConfig probe;  // reuse the prior/scale validation paths
  probe.proposal_scale = cfg.proposal_scale;
  probe.initial_theta = cfg.initial_theta;
  validate_config(probe, problem);

  const std::size_t dim = problem.priors.size();
  const std::vector<double> scales = resolve_scales(probe, dim);
  const detail::SamplingBox box = detail::make_box(problem.priors);

  ChainState chain;
  chain.rng = Rng(detail::derive_stream(cfg.seed, 1));
  chain.s.resize(dim);
  std::vector<double> proposal, theta;
  for (std::size_t i = 0; i < dim; ++i) {
    if (cfg.initial_theta)
      chain.s[i] = problem.priors[i].to_sampling((*cfg.initial_theta)[i]);
    else
      chain.s[i] =
          box.lo[i] + (box.hi[i] - box.lo[i]) * chain.rng.u01();
  }
  chain.nll = detail::eval_nll(problem, chain.s, theta);

  FitResult result;
  result.initial_objective = chain.nll;
  result.best_objective = chain.nll;
  std::vector<double> best_s = chain.s;

  detail::ChainCounters counters;
  const double cool = cfg.n_steps > 1
                          ? std::pow(cfg.t_end / cfg.t_start,
                                     1.0 / static_cast<double>(cfg.n_steps - 1))
                          : 1.0;
  double t = cfg.t_start;
  for (long s = 0; s < cfg.n_steps; ++s) {
    mh_step(chain, problem, box, scales, t, proposal, theta, counters);
    if (chain.nll < result.best_objective) {
      result.best_objective = chain.nll;
      best_s = chain.s;
    }
    t *= cool;
  }
  result.proposals = counters.proposed;
  result.accepted = counters.accepted;
  result.best_theta.resize(dim);
  for (std::size_t i = 0; i < dim; ++i)
    result.best_theta[i] = problem.priors[i].from_sampling(best_s[i]);
  return result;
}

}  // namespace qualifit
