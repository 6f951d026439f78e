#include "dsl/math/special.hpp"

#include <cmath>

namespace dsl::math {

namespace {

// W. J. Cody, "Rational Chebyshev approximation for the error function",
// Math. Comp. 23 (1969).  Coefficients as published in netlib SPECFUN.
constexpr double kA[5] = {3.1611237438705656, 113.864154151050156,
                          377.485237685302021, 3209.37758913846947,
                          0.185777706184603153};
constexpr double kB[4] = {23.6012909523441209, 244.024637934444173,
                          1282.61652607737228, 2844.23683343917062};
constexpr double kC[9] = {0.564188496988670089, 8.88314979438837594,
                          66.1191906371416295,  298.635138197400131,
                          881.95222124176909,   1712.04761263407058,
                          2051.07837782607147,  1230.33935479799725,
                          2.15311535474403846e-8};
constexpr double kD[8] = {15.7449261107098347, 117.693950891312499,
                          537.181101862009858, 1621.38957456669019,
                          3290.79923573345963, 4362.61909014324716,
                          3439.36767414372164, 1230.33935480374942};
constexpr double kP[6] = {0.305326634961232344, 0.360344899949804439,
                          0.125781726111229246, 0.0160837851487422766,
                          6.58749161529837803e-4, 0.0163153871373020978};
constexpr double kQ[5] = {2.56852019228982242, 1.87295284992346047,
                          0.527905102951428412, 0.0605183413124413191,
                          0.00233520497626869185};

constexpr double kRsqrtPi = 0.56418958354775628695;  // 1/sqrt(pi)
constexpr double kErfcBig = 26.543;                  // erfc underflows past here

// exp(-y*y) evaluated as exp(-ysq*ysq)*exp(-del) with ysq a 1/16 grid
// point, which keeps the cancellation in y*y out of the exponent.
double exp_msq(double y) {
  const double ysq = std::trunc(y * 16.0) / 16.0;
  const double del = (y - ysq) * (y + ysq);
  return std::exp(-ysq * ysq) * std::exp(-del);
}

// erfc(y) for y >= 0.46875.
double erfc_tail(double y) {
  if (y >= kErfcBig) return 0.0;
  double result;
  if (y <= 4.0) {
    double num = kC[8] * y;
    double den = y;
    for (int i = 0; i < 7; ++i) {
      num = (num + kC[i]) * y;
      den = (den + kD[i]) * y;
    }
    result = (num + kC[7]) / (den + kD[7]);
  } else {
    const double z = 1.0 / (y * y);
    double num = kP[5] * z;
    double den = z;
    for (int i = 0; i < 4; ++i) {
      num = (num + kP[i]) * z;
      den = (den + kQ[i]) * z;
    }
    result = z * (num + kP[4]) / (den + kQ[4]);
    result = (kRsqrtPi - result) / y;
  }
  return exp_msq(y) * result;
}

}  // namespace

double erf_local(double x) {
  const double y = std::fabs(x);
  if (y <= 0.46875) {
    const double z = (y > 1.11e-16) ? y * y : 0.0;
    double num = kA[4] * z;
    double den = z;
    for (int i = 0; i < 3; ++i) {
      num = (num + kA[i]) * z;
      den = (den + kB[i]) * z;
    }
    return x * (num + kA[3]) / (den + kB[3]);
  }
  const double r = 1.0 - erfc_tail(y);
  return (x < 0.0) ? -r : r;
}

double erfc_local(double x) {
  const double y = std::fabs(x);
  if (y <= 0.46875) return 1.0 - erf_local(x);
  const double r = erfc_tail(y);
  return (x < 0.0) ? 2.0 - r : r;
}

double normal_pdf(double t) { return std::exp(-0.5 * t * t) / kSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * erfc_local(-x / kSqrt2); }

double h_function(double x) { return 0.5 * erfc_local(x / kSqrt2); }

double inverse_gaussian_tail(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("inverse_gaussian_tail: p must lie in (0,1)");

  // Acklam's rational approximation for the normal quantile, then Newton
  // polish against h_function itself (x = Phi^{-1}(1-p) = -Phi^{-1}(p)).
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};

  const double plow = 0.02425;
  const double q = 1.0 - p;  // quantile wanted at lower-tail prob q
  double x;
  if (q < plow) {
    const double u = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  } else if (q <= 1.0 - plow) {
    const double u = q - 0.5;
    const double r = u * u;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        u /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double u = std::sqrt(-2.0 * std::log(1.0 - q));
    x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }

  for (int it = 0; it < 3; ++it) {
    const double err = h_function(x) - p;
    const double pdf = normal_pdf(x);
    if (pdf <= 0.0) break;
    const double step = err / pdf;  // H'(x) = -phi(x)
    x += step;
    if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(x))) break;
  }
  return x;
}

}  // namespace dsl::math
