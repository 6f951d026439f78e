#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Gaussian-measure quadrature: integrals of the form  ∫ g(t) φ(t) dt
// with φ the standard normal density, over finite, semi-infinite or
// infinite intervals.  Two schemes:
//
//   gauss-hermite-mapped : Gauss-Hermite rule (weight e^{-x^2}) mapped by
//                          t = sqrt(2) x; full-line domains only.
//   adaptive-panel       : composite Gauss-Legendre with bisection; the
//                          domain is first clipped to |t| <= 12 where the
//                          remaining Gaussian mass is < 1e-32.

namespace dsl::math {

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& msg, double node)
      : std::runtime_error(msg), node_(node) {}
  double node() const { return node_; }

 private:
  double node_;
};

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
  static const GaussLegendre& rule(int n);
};

struct GaussHermite {
  std::vector<double> nodes;    // weight function e^{-x^2}
  std::vector<double> weights;
  static const GaussHermite& rule(int n);
};

enum class QuadScheme { GaussHermiteMapped, AdaptivePanel };

struct Quadrature {
  int node_count = 96;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  QuadScheme scheme = QuadScheme::AdaptivePanel;
};

struct IntegralResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
};

IntegralResult gaussian_integral_detailed(const std::function<double(double)>& g,
                                          double lower, double upper,
                                          const Quadrature& quad);

double gaussian_integral(const std::function<double(double)>& g, double lower,
                         double upper, const Quadrature& quad = Quadrature{});

// Plain (unweighted) composite Gauss-Legendre of f over explicit panel
// edges; used by the saddle-point solvers which grade their own panels.
double integrate_over_panels(const std::function<double(double)>& f,
                             const std::vector<double>& edges,
                             int points_per_panel);

// Panel edges on [a, b]: uniform spacing <= coarse_h, refined to spacing
// <= fine_h inside [center - half_width, center + half_width].
std::vector<double> graded_edges(double a, double b, double coarse_h,
                                 double center, double half_width,
                                 double fine_h);

}  // namespace dsl::math
