#include "dsl/theory/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "dsl/math/quadrature.hpp"
#include "dsl/math/special.hpp"

namespace dsl::theory {

namespace {

using dsl::math::GaussLegendre;
using dsl::math::graded_edges;
using dsl::math::h_function;
using dsl::math::kGaussTailCut;
using dsl::math::normal_cdf;
using dsl::math::normal_pdf;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kappaMax = 60.0;

// Kept z-intervals (signed margin space), clipped to the Gaussian window.
std::vector<std::pair<double, double>> kept_intervals(const SelectionStrategy& s) {
  std::vector<std::pair<double, double>> iv;
  const double cut = kGaussTailCut;
  if (s.kind == StrategyKind::KeepRandom || s.fraction >= 1.0) {
    iv.push_back({-cut, cut});
    return iv;
  }
  if (s.absolute_margin) {
    const double lo = std::max(0.0, s.cutoff_lo);
    const double hi = std::min(s.cutoff_hi, cut);
    if (lo < hi) {
      iv.push_back({-hi, -lo});
      iv.push_back({lo, hi});
    }
    return iv;
  }
  const double lo = std::max(s.cutoff_lo, -cut);
  const double hi = std::min(s.cutoff_hi, cut);
  if (lo < hi) iv.push_back({lo, hi});
  return iv;
}

// Normalizing mass of the kept measure (1 for keep-random: uniform
// thinning leaves the distribution itself intact).
double norm_mass(const SelectionStrategy& s) {
  if (s.kind == StrategyKind::KeepRandom || s.fraction >= 1.0) return 1.0;
  return kept_mass(s);
}

struct Functionals {
  double F0 = 0.0;   // E[Phi(T)]
  double F1a = 0.0;  // E[a (T Phi + phi)]   (perfect; a = margin coordinate)
  double F1z = 0.0;  // E[z (T Phi + phi)]
  double F1w = 0.0;  // E[w (T Phi + phi)]
  double F2 = 0.0;   // E[(1+T^2) Phi + T phi]
};

// ---------------------------------------------------------------------
// Perfect probe: margins a >= 0 are half-normal; kept measure is the
// restriction to the cutoff interval normalized by its mass.  The
// student field is lam = R a + Q xi with Q = sqrt(1-R^2), and
// T = (kappa - R a)/Q.
// ---------------------------------------------------------------------
Functionals perfect_functionals(const SelectionStrategy& strategy, double R,
                                double kappa) {
  const double Q = std::sqrt(std::max(1e-300, 1.0 - R * R));
  const double fmass = norm_mass(strategy);
  Functionals F;
  const GaussLegendre& gl = GaussLegendre::rule(16);
  for (auto [zlo, zhi] : kept_intervals(strategy)) {
    const double alo = std::max(0.0, zlo);
    const double ahi = zhi;
    if (!(alo < ahi)) continue;
    // The Phi(T) transition sits at a* = kappa/R with width ~ Q/R.
    const double scale = Q / std::max(R, 0.05);
    std::vector<double> edges =
        graded_edges(alo, ahi, 0.25, kappa / std::max(R, 1e-8), 9.0 * scale,
                     0.35 * scale);
    for (size_t k = 0; k + 1 < edges.size(); ++k) {
      const double h = 0.5 * (edges[k + 1] - edges[k]);
      const double c = 0.5 * (edges[k + 1] + edges[k]);
      for (size_t i = 0; i < gl.nodes.size(); ++i) {
        const double a = c + h * gl.nodes[i];
        const double wgt = gl.weights[i] * h * 2.0 * normal_pdf(a) / fmass;
        const double T = (kappa - R * a) / Q;
        const double cdf = normal_cdf(T);
        const double pdf = normal_pdf(T);
        const double j1 = T * cdf + pdf;
        F.F0 += wgt * cdf;
        F.F1a += wgt * a * j1;
        F.F2 += wgt * ((1.0 + T * T) * cdf + T * pdf);
      }
    }
  }
  return F;
}

// ---------------------------------------------------------------------
// Imperfect probe.  Coordinates: z = probe margin, w = label-folded
// component orthogonal to the probe inside the expert-probe plane.  The
// folded measure is 2 phi(z) phi(w) on {w <= z cot(g)}; selection
// restricts z.  Student field lam = rho z + gq w + Q xi with
// gq = (rho cos g - R)/sin g and Q^2 = 1 - rho^2 - gq^2 = Lambda^2/sin^2 g.
// ---------------------------------------------------------------------
Functionals imperfect_functionals(double gamma, const SelectionStrategy& strategy,
                                  double rho, double gq, double kappa) {
  const double Q2 = 1.0 - rho * rho - gq * gq;
  const double Q = std::sqrt(std::max(1e-300, Q2));
  const double cot = std::cos(gamma) / std::sin(gamma);
  const double fmass = norm_mass(strategy);
  Functionals F;
  const GaussLegendre& gl = GaussLegendre::rule(12);

  for (auto [zlo, zhi] : kept_intervals(strategy)) {
    std::vector<double> zedges = graded_edges(
        zlo, zhi, 0.4, kappa / std::max(std::fabs(rho), 1e-8),
        9.0 * Q / std::max(std::fabs(rho), 0.05),
        0.35 * Q / std::max(std::fabs(rho), 0.05));
    for (size_t kz = 0; kz + 1 < zedges.size(); ++kz) {
      const double hz = 0.5 * (zedges[kz + 1] - zedges[kz]);
      const double cz = 0.5 * (zedges[kz + 1] + zedges[kz]);
      for (size_t iz = 0; iz < gl.nodes.size(); ++iz) {
        const double z = cz + hz * gl.nodes[iz];
        const double wz = gl.weights[iz] * hz * 2.0 * normal_pdf(z) / fmass;
        const double wcap = std::min(z * cot, kGaussTailCut);
        if (wcap <= -kGaussTailCut) continue;
        // Inner transition at w* = (kappa - rho z)/gq, width ~ Q/|gq|.
        const double gscale = Q / std::max(std::fabs(gq), 0.05);
        const double wstar =
            (std::fabs(gq) > 1e-10) ? (kappa - rho * z) / gq : 0.0;
        std::vector<double> wedges =
            graded_edges(-kGaussTailCut, wcap, 0.5, wstar, 9.0 * gscale,
                         0.35 * gscale);
        for (size_t kw = 0; kw + 1 < wedges.size(); ++kw) {
          const double hw = 0.5 * (wedges[kw + 1] - wedges[kw]);
          const double cw = 0.5 * (wedges[kw + 1] + wedges[kw]);
          for (size_t iw = 0; iw < gl.nodes.size(); ++iw) {
            const double w = cw + hw * gl.nodes[iw];
            const double wgt = wz * gl.weights[iw] * hw * normal_pdf(w);
            const double T = (kappa - rho * z - gq * w) / Q;
            const double cdf = normal_cdf(T);
            const double pdf = normal_pdf(T);
            const double j1 = T * cdf + pdf;
            F.F0 += wgt * cdf;
            F.F1z += wgt * z * j1;
            F.F1w += wgt * w * j1;
            F.F2 += wgt * ((1.0 + T * T) * cdf + T * pdf);
          }
        }
      }
    }
  }
  return F;
}

double probe_orth_overlap(double R, double rho, double gamma) {
  return (rho * std::cos(gamma) - R) / std::sin(gamma);
}

// ---------------------------------------------------------------------
// Damped Newton with numerical Jacobian (central differences).
// ---------------------------------------------------------------------
template <int N, typename Residual, typename Project>
struct NewtonResult {
  std::array<double, N> x;
  double residual_norm;
  bool converged;
  int iterations;
  std::string trace;
};

template <int N, typename Residual, typename Project>
NewtonResult<N, Residual, Project> damped_newton(std::array<double, N> x,
                                                 Residual res, Project project,
                                                 const SolveOptions& opts) {
  auto norm = [](const std::array<double, N>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return std::sqrt(s);
  };
  std::ostringstream trace;
  project(x);
  std::array<double, N> r = res(x);
  double rn = norm(r);
  int it = 0;
  for (; it < opts.max_iterations && rn > opts.tol; ++it) {
    // Numerical Jacobian, central differences.
    double J[N][N];
    for (int j = 0; j < N; ++j) {
      const double step = 1e-6 * std::max(1.0, std::fabs(x[j]));
      std::array<double, N> xp = x, xm = x;
      xp[j] += step;
      xm[j] -= step;
      project(xp);
      project(xm);
      const auto rp = res(xp);
      const auto rm = res(xm);
      const double den = xp[j] - xm[j];
      for (int i = 0; i < N; ++i) J[i][j] = (rp[i] - rm[i]) / den;
    }
    // Solve J d = -r by Gaussian elimination with partial pivoting.
    std::array<double, N> d{};
    {
      double A[N][N + 1];
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) A[i][j] = J[i][j];
        A[i][N] = -r[i];
      }
      bool singular = false;
      for (int col = 0; col < N; ++col) {
        int piv = col;
        for (int i = col + 1; i < N; ++i)
          if (std::fabs(A[i][col]) > std::fabs(A[piv][col])) piv = i;
        if (std::fabs(A[piv][col]) < 1e-30) {
          singular = true;
          break;
        }
        if (piv != col)
          for (int j = col; j <= N; ++j) std::swap(A[piv][j], A[col][j]);
        for (int i = col + 1; i < N; ++i) {
          const double m = A[i][col] / A[col][col];
          for (int j = col; j <= N; ++j) A[i][j] -= m * A[col][j];
        }
      }
      if (singular) break;
      for (int i = N - 1; i >= 0; --i) {
        double s = A[i][N];
        for (int j = i + 1; j < N; ++j) s -= A[i][j] * d[j];
        d[i] = s / A[i][i];
      }
    }
    // Backtracking line search with domain projection.
    bool accepted = false;
    for (double t = 1.0; t >= 1.0 / 4096.0; t *= 0.5) {
      std::array<double, N> xn = x;
      for (int i = 0; i < N; ++i) xn[i] += t * d[i];
      project(xn);
      const auto rnew = res(xn);
      const double rnn = norm(rnew);
      if (rnn < (1.0 - 1e-4 * t) * rn) {
        x = xn;
        r = rnew;
        rn = rnn;
        accepted = true;
        break;
      }
    }
    trace << "it=" << it << " |r|=" << rn << "; ";
    if (!accepted) break;
  }
  return {x, rn, rn <= opts.tol, it, trace.str()};
}

}  // namespace

// ---------------------------------------------------------------------
// Residual systems.
// ---------------------------------------------------------------------

std::array<double, 2> perfect_residuals(double alpha_syn,
                                        const SelectionStrategy& strategy,
                                        double R, double kappa) {
  const double Q = std::sqrt(std::max(1e-300, 1.0 - R * R));
  const Functionals F = perfect_functionals(strategy, R, kappa);
  return {R - alpha_syn * (Q * F.F1a + R * F.F0), 1.0 - alpha_syn * F.F2};
}

std::array<double, 3> imperfect_residuals(double alpha_syn, double gamma_probe,
                                          const SelectionStrategy& strategy,
                                          double R, double rho, double kappa) {
  const double gq = probe_orth_overlap(R, rho, gamma_probe);
  const double Q2 = 1.0 - rho * rho - gq * gq;
  if (Q2 <= 0.0) {
    // Lambda^2 < 0: outside the physical region; signal with large
    // residuals so the line search backs off.
    return {1e6 * (1.0 - Q2), 1e6 * (1.0 - Q2), 1e6 * (1.0 - Q2)};
  }
  const double Q = std::sqrt(Q2);
  const Functionals F = imperfect_functionals(gamma_probe, strategy, rho, gq, kappa);
  return {rho - alpha_syn * (Q * F.F1z + rho * F.F0),
          gq - alpha_syn * (Q * F.F1w + gq * F.F0), 1.0 - alpha_syn * F.F2};
}

std::array<double, 2> perfect_fieldform_residuals(double alpha_syn,
                                                  const SelectionStrategy& strategy,
                                                  double R, double kappa) {
  const double Q2 = 1.0 - R * R;
  const double Q = std::sqrt(Q2);
  const double fmass = norm_mass(strategy);
  auto iv = kept_intervals(strategy);
  double I1 = 0.0, I2 = 0.0;
  auto dens = [&](double a, double t) {
    return std::exp(-0.5 * (a - R * t) * (a - R * t) / Q2) /
           (dsl::math::kSqrt2Pi * Q);
  };
  const GaussLegendre& gl = GaussLegendre::rule(16);
  std::vector<double> edges = graded_edges(-kGaussTailCut, kappa, 0.2, kappa, 0.0, 1.0);
  for (size_t k = 0; k + 1 < edges.size(); ++k) {
    const double h = 0.5 * (edges[k + 1] - edges[k]);
    const double c = 0.5 * (edges[k + 1] + edges[k]);
    for (size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = c + h * gl.nodes[i];
      const double wgt = gl.weights[i] * h * normal_pdf(t);
      double bracket1 = 0.0, bracket2 = 0.0;
      for (auto [zlo, zhi] : iv) {
        const double alo = std::max(0.0, zlo);
        const double ahi = zhi;
        if (!(alo < ahi)) continue;
        bracket1 += dens(alo, t) - (std::isinf(ahi) ? 0.0 : dens(ahi, t));
        bracket2 += h_function((alo - R * t) / Q) - h_function((ahi - R * t) / Q);
      }
      I1 += wgt * (kappa - t) * bracket1;
      I2 += wgt * (kappa - t) * (kappa - t) * bracket2;
    }
  }
  const double pref = 2.0 * alpha_syn / fmass;
  return {R - pref * I1, (1.0 - R * R) - pref * I2};
}

std::array<double, 2> imperfect_fieldform_residuals(double alpha_syn,
                                                    double gamma_probe,
                                                    const SelectionStrategy& strategy,
                                                    double R, double rho,
                                                    double kappa) {
  const double cg = std::cos(gamma_probe), sg = std::sin(gamma_probe);
  const double L2 = sg * sg - R * R - rho * rho + 2.0 * rho * R * cg;
  const double L = std::sqrt(std::max(1e-300, L2));
  const double one_m_rho2 = 1.0 - rho * rho;
  const double fmass = norm_mass(strategy);

  auto Gamma = [&](double t, double z) {
    return z * (rho * R - cg) - t * (R - rho * cg);
  };
  auto Delta = [&](double t, double z) {
    return z * z * (rho * rho + cg * cg - 2.0 * rho * R * cg) +
           2.0 * t * z * (R * cg - rho) + t * t * sg * sg;
  };

  double rhs1 = 0.0, rhs2 = 0.0;
  const GaussLegendre& gl = GaussLegendre::rule(16);
  for (auto [zlo, zhi] : kept_intervals(strategy)) {
    std::vector<double> zedges = graded_edges(zlo, zhi, 0.25, 0.0, 0.0, 1.0);
    for (size_t kz = 0; kz + 1 < zedges.size(); ++kz) {
      const double hz = 0.5 * (zedges[kz + 1] - zedges[kz]);
      const double cz = 0.5 * (zedges[kz + 1] + zedges[kz]);
      for (size_t iz = 0; iz < gl.nodes.size(); ++iz) {
        const double z = cz + hz * gl.nodes[iz];
        // <.>_z averages against phi(z)/f on the kept set.
        const double wz = gl.weights[iz] * hz * normal_pdf(z) / fmass;
        std::vector<double> tedges =
            graded_edges(-kGaussTailCut, kappa, 0.2, kappa, 0.0, 1.0);
        double in1 = 0.0, in2 = 0.0;
        for (size_t kt = 0; kt + 1 < tedges.size(); ++kt) {
          const double ht = 0.5 * (tedges[kt + 1] - tedges[kt]);
          const double ct = 0.5 * (tedges[kt + 1] + tedges[kt]);
          for (size_t it = 0; it < gl.nodes.size(); ++it) {
            const double t = ct + ht * gl.nodes[it];
            const double wt = gl.weights[it] * ht;
            in1 += wt * std::exp(-0.5 * Delta(t, z) / L2) * (kappa - t);
            const double gfield = std::exp(-0.5 * (t - rho * z) * (t - rho * z) /
                                           one_m_rho2) /
                                  (dsl::math::kSqrt2Pi * std::sqrt(one_m_rho2));
            in2 += wt * gfield *
                   h_function(Gamma(t, z) / (std::sqrt(one_m_rho2) * L)) *
                   (kappa - t) * (kappa - t);
          }
        }
        rhs1 += wz * in1;
        rhs2 += wz * in2;
      }
    }
  }
  rhs1 *= alpha_syn / (dsl::math::kPi * L);
  rhs2 *= 2.0 * alpha_syn;
  const double lhs1 = (R - rho * cg) / (sg * sg);
  const double lhs2 = 1.0 - (rho * rho + R * R - 2.0 * rho * R * cg) / (sg * sg);
  return {lhs1 - rhs1, lhs2 - rhs2};
}

// ---------------------------------------------------------------------
// Solvers.
// ---------------------------------------------------------------------

TheoryPoint solve_perfect(double alpha_syn, double f,
                          const SelectionStrategy& strategy,
                          const SolveOptions& opts,
                          const TheoryPoint* warm_start) {
  if (!(alpha_syn > 0.0)) throw std::domain_error("solve_perfect: alpha_syn > 0 required");
  if (strategy.gamma_probe != 0.0 && !strategy.absolute_margin)
    throw std::invalid_argument("solve_perfect: strategy must be built for gamma_probe = 0");

  auto res = [&](const std::array<double, 2>& x) {
    return perfect_residuals(alpha_syn, strategy, x[0], x[1]);
  };
  auto project = [](std::array<double, 2>& x) {
    x[0] = std::clamp(x[0], 1e-9, 1.0 - 1e-12);
    x[1] = std::clamp(x[1], 1e-9, kappaMax);
  };

  std::array<double, 2> x0 = {0.5, 0.5};
  if (warm_start && warm_start->converged) x0 = {warm_start->R, warm_start->kappa};

  auto nr = damped_newton<2, decltype(res), decltype(project)>(x0, res, project, opts);

  if (!nr.converged) {
    // Continuation in alpha: chain Newton solves up from easier problems.
    std::array<double, 2> x = {0.5, 0.5};
    bool ok = true;
    for (double scale : {0.125, 0.25, 0.5, 0.75, 1.0}) {
      auto ress = [&, scale](const std::array<double, 2>& xx) {
        return perfect_residuals(alpha_syn * scale, strategy, xx[0], xx[1]);
      };
      auto step = damped_newton<2, decltype(ress), decltype(project)>(
          x, ress, project, opts);
      if (!step.converged) {
        ok = false;
        break;
      }
      x = step.x;
    }
    if (ok) nr = damped_newton<2, decltype(res), decltype(project)>(x, res, project, opts);
  }

  if (!nr.converged) {
    // Fallback: bisection in kappa with damped fixed point in R.
    auto solve_R = [&](double kappa, double Rstart) {
      double R = Rstart;
      for (int it = 0; it < 400; ++it) {
        const double Q = std::sqrt(std::max(1e-300, 1.0 - R * R));
        const Functionals F = perfect_functionals(strategy, R, kappa);
        double Rn = alpha_syn * Q * F.F1a / std::max(1e-12, 1.0 - alpha_syn * F.F0);
        if (!(Rn > 0.0)) Rn = 1e-6;
        Rn = std::clamp(Rn, 1e-9, 1.0 - 1e-12);
        const double Rmix = 0.5 * R + 0.5 * Rn;
        if (std::fabs(Rmix - R) < 1e-13) {
          R = Rmix;
          break;
        }
        R = Rmix;
      }
      return R;
    };
    double klo = 1e-6, khi = kappaMax;
    double Rlo = solve_R(klo, x0[0]);
    double rlo = perfect_residuals(alpha_syn, strategy, Rlo, klo)[1];
    double Rcur = Rlo;
    bool bracket = rlo > 0.0;
    if (bracket) {
      for (int it = 0; it < 200; ++it) {
        const double km = 0.5 * (klo + khi);
        Rcur = solve_R(km, Rcur);
        const double rm = perfect_residuals(alpha_syn, strategy, Rcur, km)[1];
        if (rm > 0.0)
          klo = km;
        else
          khi = km;
        if (khi - klo < 1e-13) break;
      }
      const double kap = 0.5 * (klo + khi);
      Rcur = solve_R(kap, Rcur);
      nr = damped_newton<2, decltype(res), decltype(project)>({Rcur, kap}, res,
                                                              project, opts);
    }
  }

  if (!nr.converged)
    throw ConvergenceError("solve_perfect failed: alpha=" + std::to_string(alpha_syn) +
                           " f=" + std::to_string(f) + " strategy=" + strategy.label() +
                           " |r|=" + std::to_string(nr.residual_norm) +
                           " path: " + nr.trace);
  if (nr.x[0] < 0.0)
    throw ConvergenceError("solve_perfect: unphysical solution R < 0 (bracketing failure)");

  TheoryPoint p;
  p.alpha_syn = alpha_syn;
  p.f = f;
  p.gamma_probe = 0.0;
  p.strategy = strategy;
  p.R = nr.x[0];
  p.rho = nr.x[0];  // probe coincides with the expert
  p.kappa = nr.x[1];
  p.epsilon = std::acos(std::clamp(p.R, -1.0, 1.0)) / dsl::math::kPi;
  p.residual = nr.residual_norm;
  p.converged = true;
  p.iterations = nr.iterations;
  return p;
}

TheoryPoint solve_imperfect(double alpha_syn, double f, double gamma_probe,
                            const SelectionStrategy& strategy,
                            const SolveOptions& opts,
                            const TheoryPoint* warm_start) {
  if (!(alpha_syn > 0.0)) throw std::domain_error("solve_imperfect: alpha_syn > 0 required");
  if (!(gamma_probe > 0.0 && gamma_probe <= 0.5 * dsl::math::kPi))
    throw std::domain_error("solve_imperfect: gamma_probe must lie in (0, pi/2]");

  auto make_res = [&](const SelectionStrategy& strat, double gamma) {
    return [&, strat, gamma](const std::array<double, 3>& x) {
      return imperfect_residuals(alpha_syn, gamma, strat, x[0], x[1], x[2]);
    };
  };
  auto make_project = [&](double gamma) {
    return [gamma](std::array<double, 3>& x) {
      x[0] = std::clamp(x[0], -1.0 + 1e-12, 1.0 - 1e-12);  // R
      x[1] = std::clamp(x[1], -1.0 + 1e-12, 1.0 - 1e-12);  // rho
      x[2] = std::clamp(x[2], 1e-9, kappaMax);             // kappa
      // Pull back inside the Lambda^2 > 0 region if needed.
      for (int it = 0; it < 60; ++it) {
        const double gq = probe_orth_overlap(x[0], x[1], gamma);
        if (1.0 - x[1] * x[1] - gq * gq > 1e-10) break;
        x[0] *= 0.97;
        x[1] *= 0.97;
      }
    };
  };

  std::array<double, 3> x0 = {0.5, 0.5 * std::cos(gamma_probe), 0.5};
  if (warm_start && warm_start->converged)
    x0 = {warm_start->R, warm_start->rho, warm_start->kappa};

  auto res = make_res(strategy, gamma_probe);
  auto project = make_project(gamma_probe);
  auto nr = damped_newton<3, decltype(res), decltype(project)>(x0, res, project, opts);

  if (!nr.converged) {
    // Continuation from smaller angles, rebuilding the cutoffs per angle.
    std::array<double, 3> x = {0.5, 0.5, 0.5};
    bool ok = true;
    for (double scale : {0.25, 0.5, 1.0}) {
      const double g = gamma_probe * scale;
      SelectionStrategy strat =
          (strategy.kind == StrategyKind::KeepRandom || strategy.fraction >= 1.0)
              ? strategy
              : cutoffs_from_fraction(strategy.fraction, g, strategy.kind,
                                      strategy.absolute_margin);
      auto resg = make_res(strat, g);
      auto projg = make_project(g);
      auto step = damped_newton<3, decltype(resg), decltype(projg)>(x, resg, projg, opts);
      if (!step.converged) {
        ok = false;
        break;
      }
      x = step.x;
    }
    if (ok)
      nr = damped_newton<3, decltype(res), decltype(project)>(x, res, project, opts);
  }
  if (!nr.converged) {
    // Continuation in alpha at the target angle and cutoffs.
    std::array<double, 3> x = {0.5, 0.5 * std::cos(gamma_probe), 0.5};
    bool ok = true;
    for (double scale : {0.125, 0.25, 0.5, 0.75, 1.0}) {
      auto resa = [&, scale](const std::array<double, 3>& xx) {
        return imperfect_residuals(alpha_syn * scale, gamma_probe, strategy,
                                   xx[0], xx[1], xx[2]);
      };
      auto step = damped_newton<3, decltype(resa), decltype(project)>(x, resa, project, opts);
      if (!step.converged) {
        ok = false;
        break;
      }
      x = step.x;
    }
    if (ok) nr = damped_newton<3, decltype(res), decltype(project)>(x, res, project, opts);
  }

  if (!nr.converged)
    throw ConvergenceError("solve_imperfect failed: alpha=" + std::to_string(alpha_syn) +
                           " f=" + std::to_string(f) +
                           " gamma=" + std::to_string(gamma_probe) + " strategy=" +
                           strategy.label() + " |r|=" + std::to_string(nr.residual_norm) +
                           " path: " + nr.trace);
  if (nr.x[0] < 0.0)
    throw ConvergenceError("solve_imperfect: unphysical solution R < 0");

  TheoryPoint p;
  p.alpha_syn = alpha_syn;
  p.f = f;
  p.gamma_probe = gamma_probe;
  p.strategy = strategy;
  p.R = nr.x[0];
  p.rho = nr.x[1];
  p.kappa = nr.x[2];
  p.epsilon = std::acos(std::clamp(p.R, -1.0, 1.0)) / dsl::math::kPi;
  p.residual = nr.residual_norm;
  p.converged = true;
  p.iterations = nr.iterations;
  return p;
}

std::vector<TheoryPoint> sweep(const std::vector<GridCell>& cells,
                               const SolveOptions& opts) {
  if (cells.empty()) throw std::invalid_argument("sweep: empty grid");
  // Sweep lines: same (f, gamma, strategy); ascending alpha within a line
  // so each solve warm-starts from its nearest solved neighbor.
  struct Key {
    double f, gamma;
    int kind;
    bool abs;
    bool operator<(const Key& o) const {
      if (f != o.f) return f < o.f;
      if (gamma != o.gamma) return gamma < o.gamma;
      if (kind != o.kind) return kind < o.kind;
      return abs < o.abs;
    }
  };
  std::map<Key, std::vector<size_t>> lines;
  for (size_t i = 0; i < cells.size(); ++i)
    lines[{cells[i].f, cells[i].gamma_probe, int(cells[i].kind),
           cells[i].absolute_margin}]
        .push_back(i);

  std::vector<TheoryPoint> out(cells.size());
  for (auto& [key, idx] : lines) {
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
      return cells[a].alpha_syn < cells[b].alpha_syn;
    });
    const TheoryPoint* warm = nullptr;
    TheoryPoint last;
    for (size_t i : idx) {
      const GridCell& c = cells[i];
      SelectionStrategy strat =
          cutoffs_from_fraction(c.f, c.gamma_probe, c.kind, c.absolute_margin);
      try {
        TheoryPoint p = (c.gamma_probe > 0.0)
                            ? solve_imperfect(c.alpha_syn, c.f, c.gamma_probe,
                                              strat, opts, warm)
                            : solve_perfect(c.alpha_syn, c.f, strat, opts, warm);
        out[i] = p;
        last = p;
        warm = &last;
      } catch (const std::exception& e) {
        TheoryPoint p;
        p.alpha_syn = c.alpha_syn;
        p.f = c.f;
        p.gamma_probe = c.gamma_probe;
        p.strategy = strat;
        p.converged = false;
        p.diagnostic = e.what();
        out[i] = p;
      }
    }
  }
  return out;
}

}  // namespace dsl::theory
