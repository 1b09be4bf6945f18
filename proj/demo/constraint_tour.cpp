// Constraint-language walkthrough: parse statements, show their normalized
// sampling models, and trace the three-category probability curves that the
// asymmetric-discrepancy qualifier produces.
#include <cstdio>
#include <string>
#include <vector>

#include "qualifit/qualifit.hpp"

using namespace qualifit;

int main() {
  const std::string text =
      "A < 4 at time=1 confidence 0.98 tolerance 0.5\n"
      "A < 4 at time=1 pmin 0.01 pmax 0.98 tolerance 0.5\n"
      "p1 > p3 once between time=2, time=10 confidence 0.9 tolerance 0.05\n"
      "d13 < 0.2 always weight 5\n";
  std::vector<ConstraintStatement> statements = parse_constraints(text);

  std::printf("%zu statements:\n", statements.size());
  for (const ConstraintStatement& st : statements) {
    std::printf("  %s\n", pretty_print(st).c_str());
    NormalizedConstraint n = normalize(st);
    if (std::holds_alternative<QualitativeObservation>(n)) {
      const auto& o = std::get<QualitativeObservation>(n);
      std::printf("    -> P(reduced + noise < 0), eps+ %.3g, eps- %.3g, sigma %.3g\n",
                  o.eps_plus, o.eps_minus, o.sigma);
    } else {
      const auto& p = std::get<PenaltyTerm>(n);
      std::printf("    -> penalty %.3g * max(0, reduced)\n", p.weight);
    }
  }

  // Three ordered outcomes for a scalar a: below 85, between, above 115.
  // Tolerance 5, floor 0.03, ceiling 0.94: the outer curves plateau at those
  // values and the three probabilities sum to one everywhere.
  const double eps_plus = 0.03, eps_minus = 1.0 - 0.94;
  std::printf("\n%8s %10s %10s %10s %10s\n", "a", "P(below)", "P(middle)",
              "P(above)", "sum");
  for (double a = 70.0; a <= 130.0; a += 5.0) {
    double p_below = category_probability(eps_plus, eps_minus, a, 5.0, 85.0);
    double p_above = category_probability(eps_plus, eps_minus, -a, 5.0, -115.0);
    double p_middle = 1.0 - p_below - p_above;
    std::printf("%8.1f %10.4f %10.4f %10.4f %10.6f\n", a, p_below, p_middle,
                p_above, p_below + p_middle + p_above);
  }
  return 0;
}
