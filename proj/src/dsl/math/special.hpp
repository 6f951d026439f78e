#pragma once

#include <stdexcept>

// Scalar special functions for Gaussian-measure computations.
//
// erf/erfc are implemented locally (Cody's rational Chebyshev
// approximations, netlib SPECFUN) instead of delegating to libm, so the
// results do not depend on the platform math library.

namespace dsl::math {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;
// Gaussian mass beyond |t| = 12 is below 1e-32; semi-infinite integrals
// against the standard normal measure are clipped here.
inline constexpr double kGaussTailCut = 12.0;

double erf_local(double x);
double erfc_local(double x);

// Standard normal density phi(t).
double normal_pdf(double t);

// Standard normal CDF Phi(x).
double normal_cdf(double x);

// H(x) = 1 - Phi(x) = 0.5*erfc(x/sqrt(2)); Gaussian upper-tail mass.
double h_function(double x);

// Solves h_function(x) = p for 0 < p < 1.  Accurate to ~1e-14 via a
// rational initial guess polished with Newton steps on h_function.
double inverse_gaussian_tail(double p);

}  // namespace dsl::math
