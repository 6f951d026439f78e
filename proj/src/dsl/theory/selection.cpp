#include "dsl/theory/selection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dsl/math/quadrature.hpp"
#include "dsl/math/special.hpp"

namespace dsl::theory {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Monotone bisection for cdf(c) = target on [-13, 13].
template <typename Cdf>
double invert_cdf(Cdf cdf, double target) {
  double lo = -13.0, hi = 13.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Half-normal upper quantile: mass of 2*phi on [0, c] equals q.
double half_normal_quantile(double q) {
  // 1 - 2 H(c) = q  =>  c = Hinv((1-q)/2)
  return dsl::math::inverse_gaussian_tail(0.5 * (1.0 - q));
}
}  // namespace

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::KeepHardest: return "keep-hardest";
    case StrategyKind::KeepEasiest: return "keep-easiest";
    case StrategyKind::KeepRandom: return "keep-random";
  }
  return "?";
}

StrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "keep-hardest") return StrategyKind::KeepHardest;
  if (s == "keep-easiest") return StrategyKind::KeepEasiest;
  if (s == "keep-random") return StrategyKind::KeepRandom;
  throw std::invalid_argument("unknown selection strategy: " + s);
}

SelectionStrategy::SelectionStrategy() : cutoff_lo(-kInf), cutoff_hi(kInf) {}

std::string SelectionStrategy::label() const {
  return to_string(kind) + (absolute_margin ? "-abs" : "");
}

double margin_density(double gamma_probe, double m) {
  using dsl::math::normal_cdf;
  using dsl::math::normal_pdf;
  if (gamma_probe <= 0.0)
    return (m >= 0.0) ? 2.0 * normal_pdf(m) : 0.0;
  const double cot = std::cos(gamma_probe) / std::sin(gamma_probe);
  return 2.0 * normal_pdf(m) * normal_cdf(m * cot);
}

double margin_cdf(double gamma_probe, double c) {
  using namespace dsl::math;
  if (gamma_probe <= 0.0) {
    if (c <= 0.0) return 0.0;
    return 1.0 - 2.0 * h_function(c);
  }
  if (c <= -kGaussTailCut) return 0.0;
  if (c >= kGaussTailCut) return 1.0;
  const double cot = std::cos(gamma_probe) / std::sin(gamma_probe);
  Quadrature quad;
  return gaussian_integral([cot](double z) { return 2.0 * normal_cdf(z * cot); },
                           -kInf, c, quad);
}

SelectionStrategy cutoffs_from_fraction(double f, double gamma_probe,
                                        StrategyKind kind,
                                        bool absolute_margin) {
  if (!(f > 0.0 && f <= 1.0))
    throw std::domain_error("cutoffs_from_fraction: f must lie in (0, 1]");
  SelectionStrategy s;
  s.kind = kind;
  s.gamma_probe = gamma_probe;
  s.fraction = f;
  s.absolute_margin = absolute_margin;
  if (kind == StrategyKind::KeepRandom || f == 1.0) return s;

  if (absolute_margin || gamma_probe <= 0.0) {
    // |z| (and the perfect-probe signed margin) is half-normal.
    if (kind == StrategyKind::KeepHardest) {
      s.cutoff_hi = half_normal_quantile(f);
      if (absolute_margin) s.cutoff_lo = 0.0;
    } else {
      s.cutoff_lo = half_normal_quantile(1.0 - f);
    }
    return s;
  }

  const double g = gamma_probe;
  if (kind == StrategyKind::KeepHardest)
    s.cutoff_hi = invert_cdf([g](double c) { return margin_cdf(g, c); }, f);
  else
    s.cutoff_lo = invert_cdf([g](double c) { return margin_cdf(g, c); }, 1.0 - f);
  return s;
}

double kept_mass(const SelectionStrategy& s) {
  using dsl::math::h_function;
  if (s.kind == StrategyKind::KeepRandom) return s.fraction;
  if (s.absolute_margin) {
    const double lo = std::max(0.0, s.cutoff_lo);
    const double hlo = std::isinf(s.cutoff_hi) ? 0.0 : h_function(s.cutoff_hi);
    return 2.0 * (h_function(lo) - hlo);
  }
  const double mlo = std::isinf(s.cutoff_lo) && s.cutoff_lo < 0
                         ? 0.0
                         : margin_cdf(s.gamma_probe, s.cutoff_lo);
  const double mhi = std::isinf(s.cutoff_hi) ? 1.0 : margin_cdf(s.gamma_probe, s.cutoff_hi);
  return mhi - mlo;
}

}  // namespace dsl::theory
