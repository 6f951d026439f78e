#include "dsl/math/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "dsl/math/special.hpp"

namespace dsl::math {

namespace {

GaussLegendre make_legendre(int n) {
  GaussLegendre r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

GaussHermite make_hermite(int n) {
  GaussHermite r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(n, 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * r.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * r.nodes[1];
    else
      z = 2.0 * z - r.nodes[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      // Orthonormal recurrence w.r.t. e^{-x^2}; stable for large n.
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::fabs(dz) <= 1e-15) break;
    }
    r.nodes[i] = z;
    r.nodes[n - 1 - i] = -z;
    r.weights[i] = 2.0 / (pp * pp);
    r.weights[n - 1 - i] = r.weights[i];
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

template <typename Rule>
const Rule& cached_rule(int n, Rule (*maker)(int)) {
  static std::map<int, Rule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, maker(n)).first;
  return it->second;
}

double checked_eval(const std::function<double(double)>& g, double t) {
  const double v = g(t);
  if (!std::isfinite(v))
    throw IntegrationError("integrand evaluated to a non-finite value at t = " +
                               std::to_string(t),
                           t);
  return v;
}

// One Gauss-Legendre pass of g(t)*phi(t) over [a, b].
double weighted_panel(const std::function<double(double)>& g, double a,
                      double b, const GaussLegendre& gl, long* evals) {
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double s = 0.0;
  for (size_t i = 0; i < gl.nodes.size(); ++i) {
    const double t = c + h * gl.nodes[i];
    s += gl.weights[i] * checked_eval(g, t) * normal_pdf(t);
  }
  *evals += long(gl.nodes.size());
  return s * h;
}

IntegralResult adaptive_weighted(const std::function<double(double)>& g,
                                 double lower, double upper, int base_points) {
  IntegralResult out;
  const double a = std::max(lower, -kGaussTailCut);
  const double b = std::min(upper, kGaussTailCut);
  if (!(a < b)) return out;  // no Gaussian mass in range

  const int n1 = std::max(8, base_points / 2);
  const int n2 = 2 * n1;
  const GaussLegendre& coarse = GaussLegendre::rule(n1);
  const GaussLegendre& fine = GaussLegendre::rule(n2);

  struct Seg {
    double a, b;
    int depth;
  };
  std::vector<Seg> stack;
  // Initial panels no wider than 1 so the Gaussian weight is resolved.
  const int npan = std::max(1, int(std::ceil((b - a) / 1.0)));
  for (int i = 0; i < npan; ++i) {
    const double x0 = a + (b - a) * i / npan;
    const double x1 = a + (b - a) * (i + 1) / npan;
    stack.push_back({x0, x1, 0});
  }
  const double tol = 1e-13;
  while (!stack.empty()) {
    const Seg s = stack.back();
    stack.pop_back();
    const double i1 = weighted_panel(g, s.a, s.b, coarse, &out.evaluations);
    const double i2 = weighted_panel(g, s.a, s.b, fine, &out.evaluations);
    const double diff = std::fabs(i2 - i1);
    const double local_tol = tol * (s.b - s.a) / (b - a);
    if (diff <= local_tol || s.depth >= 24) {
      out.value += i2;
      out.error_estimate += diff;
    } else {
      const double mid = 0.5 * (s.a + s.b);
      stack.push_back({s.a, mid, s.depth + 1});
      stack.push_back({mid, s.b, s.depth + 1});
    }
  }
  return out;
}

IntegralResult hermite_mapped(const std::function<double(double)>& g, int n) {
  IntegralResult out;
  auto pass = [&](int nn) {
    const GaussHermite& gh = GaussHermite::rule(nn);
    double s = 0.0;
    for (size_t i = 0; i < gh.nodes.size(); ++i)
      s += gh.weights[i] * checked_eval(g, kSqrt2 * gh.nodes[i]);
    out.evaluations += nn;
    return s / std::sqrt(kPi);
  };
  const double i1 = pass(std::max(4, n / 2));
  const double i2 = pass(std::max(8, n));
  out.value = i2;
  out.error_estimate = std::max(std::fabs(i2 - i1), 1e-15 * std::fabs(i2));
  return out;
}

}  // namespace

const GaussLegendre& GaussLegendre::rule(int n) {
  return cached_rule<GaussLegendre>(n, make_legendre);
}

const GaussHermite& GaussHermite::rule(int n) {
  return cached_rule<GaussHermite>(n, make_hermite);
}

IntegralResult gaussian_integral_detailed(const std::function<double(double)>& g,
                                          double lower, double upper,
                                          const Quadrature& quad) {
  if (!(lower < upper))
    throw std::invalid_argument("gaussian_integral: requires lower < upper");
  const bool full_line = std::isinf(lower) && lower < 0 && std::isinf(upper) && upper > 0;
  if (quad.scheme == QuadScheme::GaussHermiteMapped && full_line)
    return hermite_mapped(g, quad.node_count);
  return adaptive_weighted(g, lower, upper, quad.node_count);
}

double gaussian_integral(const std::function<double(double)>& g, double lower,
                         double upper, const Quadrature& quad) {
  return gaussian_integral_detailed(g, lower, upper, quad).value;
}

double integrate_over_panels(const std::function<double(double)>& f,
                             const std::vector<double>& edges,
                             int points_per_panel) {
  const GaussLegendre& gl = GaussLegendre::rule(points_per_panel);
  double total = 0.0;
  for (size_t k = 0; k + 1 < edges.size(); ++k) {
    const double h = 0.5 * (edges[k + 1] - edges[k]);
    const double c = 0.5 * (edges[k + 1] + edges[k]);
    double s = 0.0;
    for (size_t i = 0; i < gl.nodes.size(); ++i)
      s += gl.weights[i] * f(c + h * gl.nodes[i]);
    total += s * h;
  }
  return total;
}

std::vector<double> graded_edges(double a, double b, double coarse_h,
                                 double center, double half_width,
                                 double fine_h) {
  std::vector<double> edges;
  if (!(a < b)) return edges;
  const int nc = std::max(1, int(std::ceil((b - a) / coarse_h)));
  for (int i = 0; i <= nc; ++i) edges.push_back(a + (b - a) * i / nc);
  const double fa = std::max(a, center - half_width);
  const double fb = std::min(b, center + half_width);
  if (fa < fb && fine_h < coarse_h) {
    const int nf = std::max(1, int(std::ceil((fb - fa) / fine_h)));
    for (int i = 0; i <= nf; ++i) edges.push_back(fa + (fb - fa) * i / nf);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double x, double y) { return std::fabs(x - y) < 1e-14; }),
              edges.end());
  return edges;
}

}  // namespace dsl::math
