#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "qualifit/likelihood.hpp"
#include "qualifit/trajectory.hpp"

using namespace qualifit;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent oracle for the standard normal CDF: Simpson's rule on the
// density over [0, z], plus one half.
double phi_quadrature(double z) {
  const int n = 4000;  // even; error ~ h^4, far below 1e-12 here
  const double h = z / n;
  auto dens = [](double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::acos(-1.0));
  };
  double sum = dens(0.0) + dens(z);
  for (int i = 1; i < n; ++i) sum += dens(i * h) * (i % 2 ? 4.0 : 2.0);
  return 0.5 + sum * h / 3.0;
}

// Direct simulation of the reporting process the likelihood describes:
// with probability eps_plus the observation comes out satisfied regardless,
// with probability eps_minus violated regardless, otherwise it reflects
// whether the noisy draw lands below the threshold.
double sampled_frequency(double eps_plus, double eps_minus, double sigma,
                         double c, double pred, long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  long hits = 0;
  for (long i = 0; i < n; ++i) {
    double u = unif(rng);
    bool sat;
    if (u < eps_plus)
      sat = true;
    else if (u < eps_plus + eps_minus)
      sat = false;
    else
      sat = (pred + sigma * noise(rng)) < c;
    if (sat) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

Trajectory toy_trajectory() {
  Trajectory traj;
  traj.times = {0.0, 1.0, 2.0, 3.0, 4.0};
  traj.series["A"] = {0.0, 1.0, 4.0, 9.0, 16.0};
  traj.series["B"] = {2.0, 2.0, 2.0, 2.0, 2.0};
  return traj;
}

}  // namespace

TEST_CASE("gaussian_cdf basics and quadrature oracle") {
  REQUIRE(gaussian_cdf(0.0, 1.0, 0.0) == 0.5);
  REQUIRE(gaussian_cdf(3.0, 2.0, 3.0) == 0.5);
  REQUIRE(gaussian_cdf(5.0, 0.0, 4.0) == 0.0);
  REQUIRE(gaussian_cdf(3.0, 0.0, 4.0) == 1.0);
  REQUIRE(gaussian_cdf(4.0, 0.0, 4.0) == 0.5);

  REQUIRE_THAT(gaussian_cdf(0.0, 1.0, 1.96), WithinAbs(0.9750, 1e-4));
  REQUIRE_THAT(gaussian_cdf(0.0, 1.0, 1.96),
               WithinAbs(phi_quadrature(1.96), 1e-12));
  REQUIRE_THAT(gaussian_cdf(0.0, 1.0, -0.7),
               WithinAbs(phi_quadrature(-0.7), 1e-12));
  REQUIRE_THAT(gaussian_cdf(10.0, 2.0, 12.5),
               WithinAbs(phi_quadrature(1.25), 1e-12));
}

TEST_CASE("gaussian_cdf translation/scale reduction to standard form") {
  for (double mu : {-3.0, 0.0, 7.5}) {
    for (double sigma : {0.1, 1.0, 40.0}) {
      for (double z = -5.0; z <= 5.0; z += 0.5) {
        double x = mu + z * sigma;
        REQUIRE_THAT(gaussian_cdf(mu, sigma, x),
                     WithinAbs(gaussian_cdf(0.0, 1.0, (x - mu) / sigma), 1e-12));
      }
    }
  }
}

TEST_CASE("gaussian_cdf complement is the accurate far tail") {
  for (double z = -8.0; z <= 8.0; z += 0.25) {
    double c = gaussian_cdf(0.0, 1.0, z);
    double cc = gaussian_cdf_complement(0.0, 1.0, z);
    REQUIRE(c >= 0.0);
    REQUIRE(cc >= 0.0);
    REQUIRE_THAT(c + cc, WithinAbs(1.0, 1e-14));
  }
  // the complement keeps digits where 1 - cdf has none left
  REQUIRE(gaussian_cdf_complement(0.0, 1.0, 10.0) > 0.0);
  REQUIRE(gaussian_cdf_complement(0.0, 1.0, 10.0) < 1e-22);
}

TEST_CASE("chi_squared_nll worked values") {
  std::vector<QuantitativePoint> pts = {{"y", 0.0, 1.0, 0.5}};
  std::vector<double> f = {1.0};
  REQUIRE(chi_squared_nll(pts, f).value == 0.0);

  pts = {{"y", 0.0, 1.0, 1.0}};
  f = {0.0};
  REQUIRE_THAT(chi_squared_nll(pts, f).value, WithinAbs(0.5, 1e-15));

  pts = {{"y1", 0.0, 1.0, 1.0}, {"y2", 0.0, 2.0, 2.0}};
  f = {0.0, 4.0};
  REQUIRE_THAT(chi_squared_nll(pts, f).value, WithinAbs(1.0, 1e-15));

  f = {0.0};
  REQUIRE_THROWS_AS(chi_squared_nll(pts, f), config_error);

  f = {0.0, std::nan("")};
  NegLogLikelihood nll = chi_squared_nll(pts, f);
  REQUIRE(std::isinf(nll.value));
  REQUIRE_THAT(nll.note, ContainsSubstring("y2"));
}

TEST_CASE("two-category term worked values") {
  // prediction at the threshold: cdf is one half
  REQUIRE_THAT(two_category_term(0.01, 0.5, 4.0, 4.0),
               WithinAbs(-std::log(0.5), 1e-14));
  // saturation far below the threshold
  REQUIRE_THAT(two_category_term(0.01, 0.5, 4.0, 4.0 - 10.0 * 0.5),
               WithinAbs(-std::log(0.99), 1e-13));
  REQUIRE_THAT(two_category_term(0.01, 0.5, 4.0, 4.0 - 10.0 * 0.5),
               WithinAbs(0.01005, 5e-6));
}

TEST_CASE("two-category term against the sampling-model oracle") {
  struct Case {
    double eps, sigma, c, pred;
    std::uint64_t seed;
  };
  const Case cases[] = {
      {0.02, 1.0, 0.0, 1.0, 20240901},
      {0.10, 0.5, 4.0, 3.6, 20240902},
      {0.00, 2.0, 1.0, 2.0, 20240903},
  };
  const long n = 1000000;
  for (const Case& k : cases) {
    double p = std::exp(-two_category_term(k.eps, k.sigma, k.c, k.pred));
    double freq = sampled_frequency(k.eps, k.eps, k.sigma, k.c, k.pred, n, k.seed);
    double se = std::sqrt(p * (1.0 - p) / n);
    INFO("eps=" << k.eps << " pred=" << k.pred << " p=" << p
                << " freq=" << freq);
    REQUIRE(std::abs(freq - p) <= 3.0 * se);
  }
}

TEST_CASE("asymmetric term against the sampling-model oracle") {
  double p = std::exp(-many_category_term(0.03, 0.06, 5.0, 85.0, 83.0));
  double freq = sampled_frequency(0.03, 0.06, 5.0, 85.0, 83.0, 1000000, 20240904);
  double se = std::sqrt(p * (1.0 - p) / 1000000.0);
  REQUIRE(std::abs(freq - p) <= 3.0 * se);
}

TEST_CASE("many-category term saturation matches the asymmetric coefficients") {
  // floor pmin = 0.01, ceiling pmax = 0.98: at full saturation the observed
  // probability is the ceiling
  double term = many_category_term(0.01, 0.02, 0.5, 4.0, 4.0 - 12.0 * 0.5);
  REQUIRE_THAT(term, WithinAbs(-std::log(0.98), 1e-13));
  // and the floor on the other side
  term = many_category_term(0.01, 0.02, 0.5, 4.0, 4.0 + 12.0 * 0.5);
  REQUIRE_THAT(term, WithinAbs(-std::log(0.01), 1e-12));
}

TEST_CASE("many-category probability curve plateaus at the rate limits") {
  // shape check: observation "a < 85" with floor 0.03 and ceiling 0.94
  QualitativeObservation o;
  o.sigma = 5.0;
  o.threshold = 85.0;
  o.eps_plus = 0.03;
  o.eps_minus = 0.06;
  double prev = 2.0;
  for (double pred = 55.0; pred <= 115.0; pred += 0.25) {
    double p = observation_probability(o, pred);
    REQUIRE(p >= 0.03 - 1e-12);
    REQUIRE(p <= 0.94 + 1e-12);
    REQUIRE(p <= prev + 1e-12);  // decreasing as the prediction violates more
    prev = p;
  }
  REQUIRE_THAT(observation_probability(o, 55.0), WithinAbs(0.94, 1e-6));
  REQUIRE_THAT(observation_probability(o, 115.0), WithinAbs(0.03, 1e-6));
}

TEST_CASE("two- and many-category terms agree bit-for-bit when rates match") {
  for (int i = 0; i < 10000; ++i) {
    double eps = 0.25 * (i % 7) / 7.0;
    double sigma = 0.1 + 3.0 * ((i * 37) % 11) / 11.0;
    double c = -5.0 + 10.0 * ((i * 101) % 13) / 13.0;
    double pred = c + (i / 10000.0 - 0.5) * 16.0 * sigma;
    REQUIRE(two_category_term(eps, sigma, c, pred) ==
            many_category_term(eps, eps, sigma, c, pred));
  }
}

TEST_CASE("term is monotone in the prediction") {
  const double eps = 0.01, sigma = 0.7, c = 2.0;
  double prev = -1.0;
  for (int i = 0; i < 1000; ++i) {
    double pred = c - 8.0 * sigma + i * (16.0 * sigma / 999.0);
    double term = two_category_term(eps, sigma, c, pred);
    REQUIRE(term >= prev);
    // strictly increasing away from the saturated tails
    if (std::abs(pred - c) < 6.0 * sigma && i > 0) REQUIRE(term > prev);
    prev = term;
  }
}

TEST_CASE("term bounds are the rate limits and are attained") {
  const double ep = 0.02, em = 0.05, sigma = 1.3, c = -1.0;
  for (double z = -14.0; z <= 14.0; z += 0.125) {
    double term = many_category_term(ep, em, sigma, c, c + z * sigma);
    REQUIRE(term >= -std::log(1.0 - em) - 1e-12);
    REQUIRE(term <= -std::log(ep) + 1e-12);
  }
  REQUIRE_THAT(many_category_term(ep, em, sigma, c, c + 14.0 * sigma),
               WithinRel(-std::log(ep), 1e-13));
  REQUIRE_THAT(many_category_term(ep, em, sigma, c, c - 14.0 * sigma),
               WithinRel(-std::log(1.0 - em), 1e-13));
}

TEST_CASE("direction symmetry via canonical negation") {
  // "y > c" normalized to "c - y < 0" carries the complement category's
  // rates; the result must equal the explicit 1-cdf form.
  for (double ep : {0.0, 0.01, 0.2}) {
    for (double em : {0.0, 0.05}) {
      for (double sigma : {0.5, 2.0}) {
        for (double c : {-1.0, 3.0}) {
          for (double z = -3.0; z <= 3.0; z += 0.25) {
            double pred = c - z * sigma;
            double via_negation =
                many_category_term(em, ep, sigma, 0.0, c - pred);
            double direct = -std::log(
                em + (1.0 - ep - em) *
                         (1.0 - gaussian_cdf(pred, sigma, c)));
            REQUIRE_THAT(via_negation, WithinAbs(direct, 2e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("zero rates allow infinite terms, never NaN") {
  // degenerate step likelihood, prediction on the wrong side
  REQUIRE(std::isinf(two_category_term(0.0, 0.0, 4.0, 5.0)));
  // cdf underflows to exactly zero
  REQUIRE(std::isinf(two_category_term(0.0, 0.5, 0.0, 40.0)));
  REQUIRE(!std::isnan(two_category_term(0.0, 0.5, 0.0, 40.0)));
  // NaN prediction maps to +infinity, not NaN
  REQUIRE(std::isinf(two_category_term(0.01, 1.0, 0.0, std::nan(""))));
}

TEST_CASE("far tail keeps sub-epsilon resolution through log1p") {
  // both terms are ~1e-24 and must stay ordered; a naive -log(cdf) would
  // round both to zero
  double t10 = two_category_term(0.0, 1.0, 0.0, -10.0);
  double t11 = two_category_term(0.0, 1.0, 0.0, -11.0);
  REQUIRE(t11 > 0.0);
  REQUIRE(t11 < t10);
  REQUIRE(t10 < 1e-20);
}

TEST_CASE("three-category decomposition sums to one plus the tail overlap") {
  const double sigma = 2.0;
  const double c1 = 0.0;
  auto sweep = [&](double c2, double bound) {
    double max_surplus = 0.0;
    for (double pred = c1 - 4.0 * sigma; pred <= c2 + 4.0 * sigma;
         pred += sigma / 16.0) {
      double p1 = category_probability(0.0, 0.0, pred, sigma, c1);
      double p2 = category_probability(0.0, 0.0, pred, sigma, c2);
      double lower = p1;
      double middle = (1.0 - p1) * p2;  // product of the two one-sided parts
      double upper = 1.0 - p2;
      double sum = lower + middle + upper;
      // exact surplus: cdf at the lower threshold times the upper tail
      REQUIRE_THAT(sum, WithinAbs(1.0 + p1 * (1.0 - p2), 1e-14));
      REQUIRE(sum >= 1.0 - 1e-15);
      REQUIRE(sum <= 1.0 + bound);
      max_surplus = std::max(max_surplus, sum - 1.0);
    }
    return max_surplus;
  };
  // at 6 sigma separation the overlap peaks near Phi(-3)^2 ~ 1.8e-6
  double peak = sweep(c1 + 6.0 * sigma, 2e-6);
  REQUIRE(peak > 1.7e-6);
  REQUIRE(peak < 1.9e-6);
  // from 7.5 sigma on it is below 1e-8 everywhere
  sweep(c1 + 7.5 * sigma, 1e-8);
}

TEST_CASE("static penalty on reduced values") {
  std::vector<std::pair<double, double>> gs = {{-1.0, 2.0}};
  REQUIRE(static_penalty(gs) == 0.0);
  gs = {{3.0, 2.0}};
  REQUIRE(static_penalty(gs) == 6.0);
  // A(1) = 5 against "A < 4 weight 2": g = A(1) - 4
  gs = {{5.0 - 4.0, 2.0}};
  REQUIRE(static_penalty(gs) == 2.0);
  gs = {{-1.0, 2.0}, {3.0, 2.0}, {0.0, 7.0}};
  REQUIRE(static_penalty(gs) == 6.0);
}

TEST_CASE("static penalty over a trajectory") {
  Trajectory traj = toy_trajectory();
  PenaltyTerm p;
  p.binding.lhs = Operand::observable("A");
  p.binding.rhs = Operand::number(4.0);
  p.binding.reduction = Reduction::PointInTime;
  p.binding.time = 3.0;
  p.weight = 2.0;
  std::vector<PenaltyTerm> terms = {p};
  REQUIRE(static_penalty(terms, traj) == 2.0 * (9.0 - 4.0));

  p.binding.time = 1.0;  // A(1) = 1 < 4: satisfied
  terms = {p};
  REQUIRE(static_penalty(terms, traj) == 0.0);
}

TEST_CASE("reduce: point in time interpolates linearly") {
  Trajectory traj = toy_trajectory();
  ReducedBinding b;
  b.lhs = Operand::observable("A");
  b.rhs = Operand::observable("B");
  b.reduction = Reduction::PointInTime;
  b.time = 1.5;
  REQUIRE_THAT(reduce_over_trajectory(b, traj), WithinAbs(2.5 - 2.0, 1e-15));
  b.time = 4.0;  // exact endpoint
  REQUIRE(reduce_over_trajectory(b, traj) == 14.0);
  b.time = 0.0;
  REQUIRE(reduce_over_trajectory(b, traj) == -2.0);
}

TEST_CASE("reduce: window extrema over grid points") {
  Trajectory traj = toy_trajectory();
  ReducedBinding b;
  b.lhs = Operand::observable("A");
  b.rhs = Operand::observable("B");
  b.label = "A > B between";
  b.reduction = Reduction::MaxOverWindow;
  b.window = {{1.0, 3.0}};
  REQUIRE(reduce_over_trajectory(b, traj) == 7.0);
  b.reduction = Reduction::MinOverWindow;
  REQUIRE(reduce_over_trajectory(b, traj) == -1.0);

  b.window.reset();  // whole range
  b.reduction = Reduction::MaxOverWindow;
  REQUIRE(reduce_over_trajectory(b, traj) == 14.0);
  b.reduction = Reduction::MinOverWindow;
  REQUIRE(reduce_over_trajectory(b, traj) == -2.0);

  // literal operand on one side
  b.rhs = Operand::number(3.0);
  b.reduction = Reduction::MaxOverWindow;
  b.window = {{0.0, 2.0}};
  REQUIRE(reduce_over_trajectory(b, traj) == 1.0);
}

TEST_CASE("reduce: bad windows are configuration errors") {
  Trajectory traj = toy_trajectory();
  ReducedBinding b;
  b.lhs = Operand::observable("A");
  b.rhs = Operand::number(0.0);
  b.label = "A > 0 always";
  b.reduction = Reduction::MaxOverWindow;
  b.window = {{-1.0, 2.0}};
  REQUIRE_THROWS_AS(reduce_over_trajectory(b, traj), config_error);
  b.window = {{1.0, 9.0}};
  REQUIRE_THROWS_AS(reduce_over_trajectory(b, traj), config_error);
  b.window = {{0.4, 0.9}};  // inside the range but between grid points
  REQUIRE_THROWS_WITH(reduce_over_trajectory(b, traj),
                      ContainsSubstring("no grid point"));
}

TEST_CASE("trajectory lookup is loud about unknowns and range") {
  Trajectory traj = toy_trajectory();
  REQUIRE(traj.value_at("A", 2.0) == 4.0);
  REQUIRE_THAT(traj.value_at("A", 2.5), WithinAbs(6.5, 1e-15));
  REQUIRE_THROWS_WITH(traj.value_at("C", 1.0),
                      ContainsSubstring("unknown observable 'C'"));
  REQUIRE_THROWS_AS(traj.value_at("A", 4.5), config_error);
  REQUIRE_THROWS_AS(traj.value_at("A", -0.5), config_error);
}

TEST_CASE("total NLL: empty data scores zero") {
  Trajectory traj = toy_trajectory();
  REQUIRE(total_nll({}, {}, traj).value == 0.0);
}

TEST_CASE("total NLL adds the quantitative and qualitative parts") {
  Trajectory traj;
  traj.times = {0.0, 1.0, 2.0};
  traj.series["A"] = {5.0, 5.0, 5.0};

  std::vector<QuantitativePoint> quant = {{"A", 1.0, 5.0, 0.5}};
  QualitativeObservation o;
  o.binding.lhs = Operand::observable("A");
  o.binding.rhs = Operand::number(5.0);
  o.binding.reduction = Reduction::PointInTime;
  o.binding.time = 1.0;
  o.sigma = 0.5;  // prediction exactly at the threshold
  std::vector<QualitativeObservation> qual = {o};

  NegLogLikelihood nll = total_nll(quant, qual, traj);
  REQUIRE_THAT(nll.value, WithinAbs(std::log(2.0), 1e-14));

  // quant-only and qual-only are the respective parts exactly
  REQUIRE(total_nll(quant, {}, traj).value == 0.0);
  REQUIRE(total_nll({}, qual, traj).value ==
          observation_term(o, 0.0));
}

TEST_CASE("total NLL failure modes") {
  Trajectory traj = toy_trajectory();

  std::vector<QuantitativePoint> quant = {{"missing", 1.0, 5.0, 0.5}};
  REQUIRE_THROWS_WITH(total_nll(quant, {}, traj),
                      ContainsSubstring("missing"));

  Trajectory failed;
  failed.failed = true;
  failed.failure_reason = "state diverged";
  NegLogLikelihood nll = total_nll({}, {}, failed);
  REQUIRE(std::isinf(nll.value));
  REQUIRE_THAT(nll.note, ContainsSubstring("state diverged"));

  Trajectory with_nan = toy_trajectory();
  with_nan.series["A"][1] = std::nan("");
  quant = {{"A", 1.0, 5.0, 0.5}};
  nll = total_nll(quant, {}, with_nan);
  REQUIRE(std::isinf(nll.value));
  REQUIRE(!std::isnan(nll.value));
  REQUIRE_THAT(nll.note, ContainsSubstring("NaN"));

  // zero-probability qualitative observation reports which statement died
  QualitativeObservation o;
  o.binding.lhs = Operand::observable("A");
  o.binding.rhs = Operand::number(0.0);
  o.binding.time = 3.0;
  o.binding.label = "A < 0 at time=3";
  o.sigma = 0.0;
  std::vector<QualitativeObservation> qual = {o};
  nll = total_nll({}, qual, toy_trajectory());
  REQUIRE(std::isinf(nll.value));
  REQUIRE_THAT(nll.note, ContainsSubstring("A < 0 at time=3"));
}
