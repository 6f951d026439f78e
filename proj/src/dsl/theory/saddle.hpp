#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsl/theory/selection.hpp"

// Saddle-point systems for the generalization error of a max-margin
// perceptron trained on a margin-selected subset of expert-labeled
// Gaussian data.
//
// Perfect probe (gamma = 0): two coupled equations in the expert overlap
// R and the achieved margin kappa.  Imperfect probe: three equations in
// (R, rho, kappa) where rho is the student-probe overlap; the auxiliary
// scale Lambda = sqrt(sin^2 g - R^2 - rho^2 + 2 rho R cos g) must stay
// real.  Test error is eps = arccos(R)/pi in both cases.

namespace dsl::theory {

struct TheoryPoint {
  double alpha_syn = 0.0;
  double f = 1.0;
  double gamma_probe = 0.0;
  SelectionStrategy strategy;
  double R = 0.0;
  double rho = 0.0;
  double kappa = 0.0;
  double epsilon = 0.0;
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string diagnostic;
};

class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SolveOptions {
  double tol = 1e-9;
  int max_iterations = 200;
};

// Residual systems, exposed so tests can plug solutions back in.
std::array<double, 2> perfect_residuals(double alpha_syn,
                                        const SelectionStrategy& strategy,
                                        double R, double kappa);
std::array<double, 3> imperfect_residuals(double alpha_syn, double gamma_probe,
                                          const SelectionStrategy& strategy,
                                          double R, double rho, double kappa);

// The same systems written in the integral form the derivation is usually
// quoted in (integration variable = student field, boundary terms of the
// kept interval).  Used as an independent cross-check of the residuals
// above; the two forms agree at any common root.
std::array<double, 2> perfect_fieldform_residuals(double alpha_syn,
                                                  const SelectionStrategy& strategy,
                                                  double R, double kappa);
std::array<double, 2> imperfect_fieldform_residuals(double alpha_syn,
                                                    double gamma_probe,
                                                    const SelectionStrategy& strategy,
                                                    double R, double rho,
                                                    double kappa);

TheoryPoint solve_perfect(double alpha_syn, double f,
                          const SelectionStrategy& strategy,
                          const SolveOptions& opts = SolveOptions{},
                          const TheoryPoint* warm_start = nullptr);

TheoryPoint solve_imperfect(double alpha_syn, double f, double gamma_probe,
                            const SelectionStrategy& strategy,
                            const SolveOptions& opts = SolveOptions{},
                            const TheoryPoint* warm_start = nullptr);

struct GridCell {
  double alpha_syn = 1.0;
  double f = 1.0;
  double gamma_probe = 0.0;
  StrategyKind kind = StrategyKind::KeepRandom;
  bool absolute_margin = false;
};

// Solves every cell, warm-starting each solve from the previous cell of
// its sweep line (same f, gamma, strategy; ascending alpha).  Failed
// cells come back flagged (converged = false), never dropped.
std::vector<TheoryPoint> sweep(const std::vector<GridCell>& cells,
                               const SolveOptions& opts = SolveOptions{});

}  // namespace dsl::theory
