#pragma once

#include <string>

// Margin statistics of expert-labeled Gaussian data scored by a probe
// direction at angle gamma to the expert, and the selection strategies
// that keep a fraction f of the margin distribution.

namespace dsl::theory {

enum class StrategyKind { KeepHardest, KeepEasiest, KeepRandom };

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& s);

struct SelectionStrategy {
  StrategyKind kind = StrategyKind::KeepRandom;
  // Kept margin interval [cutoff_lo, cutoff_hi].  When absolute_margin is
  // set the interval applies to |z| instead of the signed margin.
  double cutoff_lo;
  double cutoff_hi;
  bool absolute_margin = false;
  double gamma_probe = 0.0;  // angle the cutoffs were computed for
  double fraction = 1.0;

  SelectionStrategy();
  std::string label() const;  // e.g. "keep-hardest", "keep-easiest-abs"
};

// Density of the signed probe margin m = probe.(y x) (per-root-d units):
//   p(m) = 2 phi(m) Phi(m cos(g)/sin(g))   for g > 0,
//   p(m) = 2 phi(m) [m >= 0]               at g = 0 (half-normal).
double margin_density(double gamma_probe, double m);

// Cumulative mass of margin_density below c.
double margin_cdf(double gamma_probe, double c);

// Kept interval with margin-density mass f.  keep-hardest keeps
// (-inf, c_hi], keep-easiest [c_lo, +inf), keep-random everything
// (uniform thinning).  absolute_margin ranks by |z|; |z| is half-normal
// for every gamma, so those cutoffs do not depend on the angle.
SelectionStrategy cutoffs_from_fraction(double f, double gamma_probe,
                                        StrategyKind kind,
                                        bool absolute_margin = false);

// Probability mass the strategy keeps (equals fraction by construction;
// recomputed from the density for verification).
double kept_mass(const SelectionStrategy& s);

}  // namespace dsl::theory
