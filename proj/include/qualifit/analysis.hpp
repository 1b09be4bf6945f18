#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qualifit/error.hpp"
#include "qualifit/sampler.hpp"

namespace qualifit {

// ---------------------------------------------------------------------------
// Order statistics
// ---------------------------------------------------------------------------

// Linear interpolation between order statistics (the common "type 7" rule):
// the p-quantile sits at rank h = (n-1)p, interpolated between neighbors.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw config_error("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0))
    throw config_error("quantile level must lie in [0, 1]");
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double h = static_cast<double>(n - 1) * p;
  std::size_t i = static_cast<std::size_t>(h);
  if (i >= n - 1) return sorted[n - 1];
  double frac = h - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

struct Histogram {
  std::vector<double> edges;  // counts.size() + 1 ascending edges
  std::vector<long> counts;
};

inline Histogram make_histogram(std::span<const double> sorted, int bins) {
  if (sorted.empty()) throw config_error("histogram of an empty sample");
  if (bins < 1) throw config_error("histogram needs at least one bin");
  Histogram h;
  double lo = sorted.front(), hi = sorted.back();
  if (lo == hi) {
    // Degenerate sample: one unit-width bin centered on the constant.
    h.edges = {lo - 0.5, lo + 0.5};
    h.counts = {static_cast<long>(sorted.size())};
    return h;
  }
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b)
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : sorted) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    if (b >= bins) b = bins - 1;  // top edge is inclusive
    if (b < 0) b = 0;
    ++h.counts[b];
  }
  return h;
}

// ---------------------------------------------------------------------------
// Marginal summaries
// ---------------------------------------------------------------------------

struct MarginalSummary {
  std::string param;
  double mean = 0.0;
  double median = 0.0;
  double lo = 0.0;  // level/2 lower tail quantile
  double hi = 0.0;
  Histogram hist;
  double width() const { return hi - lo; }
};

// Equal-tailed credible summaries per parameter.  All statistics are
// computed on the sorted column, so the result is independent of row order
// (merging sample files commutes with summarizing).
inline std::vector<MarginalSummary> summarize(const PosteriorSamples& samples,
                                              double level = 0.95,
                                              int bins = 40) {
  if (samples.rows.empty()) throw config_error("no samples to summarize");
  if (!(level > 0.0 && level < 1.0))
    throw config_error("credible level must lie strictly inside (0, 1)");
  std::vector<MarginalSummary> out;
  const std::size_t n_params = samples.param_names.size();
  std::vector<double> column(samples.rows.size());
  for (std::size_t p = 0; p < n_params; ++p) {
    for (std::size_t r = 0; r < samples.rows.size(); ++r) {
      if (samples.rows[r].theta.size() != n_params)
        throw data_error("sample row has wrong parameter count");
      column[r] = samples.rows[r].theta[p];
    }
    std::sort(column.begin(), column.end());
    MarginalSummary s;
    s.param = samples.param_names[p];
    double sum = 0.0;
    for (double v : column) sum += v;
    s.mean = sum / static_cast<double>(column.size());
    s.median = quantile_sorted(column, 0.5);
    s.lo = quantile_sorted(column, (1.0 - level) / 2.0);
    s.hi = quantile_sorted(column, 1.0 - (1.0 - level) / 2.0);
    s.hist = make_histogram(column, bins);
    out.push_back(std::move(s));
  }
  return out;
}

// Pearson correlation matrix; a zero-variance column correlates 0 with
// everything (and 1 with itself, by convention).
inline std::vector<std::vector<double>> pairwise_correlation(
    const PosteriorSamples& samples) {
  if (samples.rows.size() < 2)
    throw config_error("correlation needs at least two samples");
  const std::size_t n_params = samples.param_names.size();
  const std::size_t n = samples.rows.size();
  std::vector<double> mean(n_params, 0.0);
  for (const SampleRow& row : samples.rows)
    for (std::size_t p = 0; p < n_params; ++p) mean[p] += row.theta[p];
  for (double& m : mean) m /= static_cast<double>(n);
  std::vector<std::vector<double>> cov(n_params,
                                       std::vector<double>(n_params, 0.0));
  for (const SampleRow& row : samples.rows)
    for (std::size_t a = 0; a < n_params; ++a)
      for (std::size_t b = a; b < n_params; ++b)
        cov[a][b] += (row.theta[a] - mean[a]) * (row.theta[b] - mean[b]);
  std::vector<std::vector<double>> corr(n_params,
                                        std::vector<double>(n_params, 0.0));
  for (std::size_t a = 0; a < n_params; ++a) {
    corr[a][a] = 1.0;
    for (std::size_t b = a + 1; b < n_params; ++b) {
      double denom = std::sqrt(cov[a][a] * cov[b][b]);
      double r = denom > 0.0 ? cov[a][b] / denom : 0.0;
      corr[a][b] = corr[b][a] = r;
    }
  }
  return corr;
}

// ---------------------------------------------------------------------------
// Width comparison across datasets
// ---------------------------------------------------------------------------

struct WidthReport {
  std::vector<std::string> dataset_labels;
  std::vector<std::string> param_names;
  std::vector<std::vector<double>> widths;  // [param][dataset]
  std::vector<bool> non_increasing;         // per param, across dataset order
};

inline WidthReport compare_widths(
    std::span<const std::string> labels,
    std::span<const std::vector<MarginalSummary>> summaries) {
  if (labels.size() != summaries.size() || summaries.empty())
    throw config_error("width comparison needs one label per dataset");
  WidthReport report;
  report.dataset_labels.assign(labels.begin(), labels.end());
  for (const MarginalSummary& s : summaries[0])
    report.param_names.push_back(s.param);
  for (const std::vector<MarginalSummary>& set : summaries) {
    if (set.size() != report.param_names.size())
      throw config_error("datasets disagree on the parameter set");
    for (std::size_t p = 0; p < set.size(); ++p)
      if (set[p].param != report.param_names[p])
        throw config_error("datasets disagree on the parameter set");
  }
  report.widths.assign(report.param_names.size(),
                       std::vector<double>(labels.size(), 0.0));
  for (std::size_t d = 0; d < summaries.size(); ++d)
    for (std::size_t p = 0; p < report.param_names.size(); ++p)
      report.widths[p][d] = summaries[d][p].width();
  for (std::size_t p = 0; p < report.param_names.size(); ++p) {
    bool mono = true;
    for (std::size_t d = 1; d < labels.size(); ++d)
      mono = mono && report.widths[p][d] <= report.widths[p][d - 1];
    report.non_increasing.push_back(mono);
  }
  return report;
}

// Split-half probe: summary widths from the first vs second half of the
// rows, as a cheap stationarity indicator.
struct SplitHalfRow {
  std::string param;
  double width_first = 0.0;
  double width_second = 0.0;
  double rel_diff = 0.0;
};

inline std::vector<SplitHalfRow> split_half_report(
    const PosteriorSamples& samples, double level = 0.95) {
  if (samples.rows.size() < 4)
    throw config_error("split-half needs at least four samples");
  PosteriorSamples first, second;
  first.param_names = second.param_names = samples.param_names;
  std::size_t half = samples.rows.size() / 2;
  first.rows.assign(samples.rows.begin(), samples.rows.begin() + half);
  second.rows.assign(samples.rows.begin() + half, samples.rows.end());
  std::vector<MarginalSummary> a = summarize(first, level);
  std::vector<MarginalSummary> b = summarize(second, level);
  std::vector<SplitHalfRow> out;
  for (std::size_t p = 0; p < a.size(); ++p) {
    SplitHalfRow row;
    row.param = a[p].param;
    row.width_first = a[p].width();
    row.width_second = b[p].width();
    double scale = std::max(row.width_first, row.width_second);
    row.rel_diff = scale > 0.0
                       ? std::fabs(row.width_first - row.width_second) / scale
                       : 0.0;
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov utilities
// ---------------------------------------------------------------------------

// One-sample D against an analytic CDF.
inline double ks_statistic(std::span<const double> values,
                           const std::function<double(double)>& cdf) {
  if (values.empty()) throw config_error("KS test on an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double f = cdf(sorted[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// Two-sample D.
inline double ks_statistic(std::span<const double> xs,
                           std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw config_error("KS test on empty sample");
  std::vector<double> a(xs.begin(), xs.end()), b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() -
                              static_cast<double>(j) / b.size()));
  }
  return d;
}

// Asymptotic KS tail probability Q(lambda) with the standard finite-n
// correction; n_eff is n for one sample and n1*n2/(n1+n2) for two.
inline double ks_p_value(double d, double n_eff) {
  double sn = std::sqrt(n_eff);
  double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-6) return 1.0;  // series degenerates; p is 1 to 12 digits
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12 * std::fabs(sum)) break;
    sign = -sign;
  }
  double p = 2.0 * sum;
  return std::clamp(p, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Merging and file exports
// ---------------------------------------------------------------------------

inline PosteriorSamples merge_samples(
    std::span<const PosteriorSamples> parts) {
  if (parts.empty()) throw config_error("nothing to merge");
  PosteriorSamples merged;
  merged.param_names = parts[0].param_names;
  for (const PosteriorSamples& part : parts) {
    if (part.param_names != merged.param_names)
      throw data_error("sample files disagree on parameter names");
    merged.rows.insert(merged.rows.end(), part.rows.begin(), part.rows.end());
  }
  return merged;
}

inline void write_summary_csv(std::ostream& out,
                              std::span<const MarginalSummary> summaries) {
  out << "param,mean,median,lo,hi,width\n";
  for (const MarginalSummary& s : summaries)
    out << s.param << ',' << format_full(s.mean) << ','
        << format_full(s.median) << ',' << format_full(s.lo) << ','
        << format_full(s.hi) << ',' << format_full(s.width()) << '\n';
}

inline void write_summary_csv(const std::string& path,
                              std::span<const MarginalSummary> summaries) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  write_summary_csv(out, summaries);
}

inline void write_histogram_csv(std::ostream& out, const Histogram& hist) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < hist.counts.size(); ++b)
    out << format_full(hist.edges[b]) << ',' << format_full(hist.edges[b + 1])
        << ',' << hist.counts[b] << '\n';
}

inline void write_histogram_csv(const std::string& path,
                                const Histogram& hist) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  write_histogram_csv(out, hist);
}

// Gnuplot-friendly trace: whitespace columns, one block per chain separated
// by blank lines (usable with `plot ... index k`).
inline void write_trace(std::ostream& out, const PosteriorSamples& samples,
                        std::size_t param_index) {
  if (param_index >= samples.param_names.size())
    throw config_error("trace parameter index out of range");
  bool first = true;
  std::vector<int> chains;
  for (const SampleRow& row : samples.rows)
    if (std::find(chains.begin(), chains.end(), row.chain) == chains.end())
      chains.push_back(row.chain);
  std::sort(chains.begin(), chains.end());
  for (int chain : chains) {
    if (!first) out << "\n\n";
    first = false;
    out << "# chain " << chain << '\n';
    for (const SampleRow& row : samples.rows)
      if (row.chain == chain)
        out << row.step << ' ' << format_full(row.theta[param_index]) << '\n';
  }
}

inline void write_trace(const std::string& path,
                        const PosteriorSamples& samples,
                        std::size_t param_index) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  write_trace(out, samples, param_index);
}

inline void write_width_report_csv(std::ostream& out,
                                   const WidthReport& report) {
  out << "param";
  for (const std::string& label : report.dataset_labels) out << ',' << label;
  out << ",non_increasing\n";
  for (std::size_t p = 0; p < report.param_names.size(); ++p) {
    out << report.param_names[p];
    for (double w : report.widths[p]) out << ',' << format_full(w);
    out << ',' << (report.non_increasing[p] ? "yes" : "no") << '\n';
  }
}

inline void write_width_report_csv(const std::string& path,
                                   const WidthReport& report) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  write_width_report_csv(out, report);
}

}  // namespace qualifit
