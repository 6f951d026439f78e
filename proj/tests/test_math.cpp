#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "dsl/math/quadrature.hpp"
#include "dsl/math/special.hpp"

using namespace dsl::math;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Reference values computed with mpmath at 30 digits before this module
// was written.
struct Ref {
  double x, value;
};
}  // namespace

TEST_CASE("erf/erfc against the high-precision table") {
  const Ref erf_table[] = {{0.1, 0.112462916018284892},
                           {0.46, 0.484655390001679655},
                           {0.5, 0.520499877813046538},
                           {1.0, 0.842700792949714869},
                           {2.0, 0.995322265018952734},
                           {3.0, 0.999977909503001415}};
  for (const auto& r : erf_table) {
    CHECK(erf_local(r.x) == doctest::Approx(r.value).epsilon(1e-14));
    CHECK(erf_local(-r.x) == doctest::Approx(-r.value).epsilon(1e-14));
  }
  const Ref erfc_table[] = {{1.0, 0.157299207050285131},
                            {2.0, 0.00467773498104726584},
                            {3.0, 2.20904969985854414e-5},
                            {4.0, 1.54172579002800189e-8},
                            {5.0, 1.53745979442803485e-12},
                            {10.0, 2.08848758376254476e-45}};
  for (const auto& r : erfc_table)
    CHECK(erfc_local(r.x) == doctest::Approx(r.value).epsilon(1e-12));
  CHECK(erfc_local(26.0) == doctest::Approx(5.66319240885614285e-296).epsilon(1e-10));
  CHECK(erfc_local(27.0) == 0.0);
}

TEST_CASE("h_function values and symmetry") {
  CHECK(h_function(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(h_function(1.0) == doctest::Approx(0.158655253931457051).epsilon(1e-12));
  CHECK(h_function(2.0) == doctest::Approx(0.0227501319481792072).epsilon(1e-12));
  CHECK(h_function(-1.0) == doctest::Approx(0.841344746068542949).epsilon(1e-12));
  CHECK(h_function(40.0) == 0.0);          // tail limit
  CHECK(h_function(-40.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5})
    CHECK(h_function(x) + h_function(-x) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(h_function(0.5) > h_function(0.6));  // monotone decreasing
}

TEST_CASE("inverse_gaussian_tail") {
  CHECK(inverse_gaussian_tail(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(inverse_gaussian_tail(0.2) == doctest::Approx(0.841621233572914205).epsilon(1e-12));
  CHECK(inverse_gaussian_tail(0.158655253931457051) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(inverse_gaussian_tail(0.01) == doctest::Approx(2.3263478740408411).epsilon(1e-12));
  CHECK(h_function(inverse_gaussian_tail(0.2)) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(inverse_gaussian_tail(0.0), std::domain_error);
  CHECK_THROWS_AS(inverse_gaussian_tail(1.0), std::domain_error);
  CHECK_THROWS_AS(inverse_gaussian_tail(-0.1), std::domain_error);
}

TEST_CASE("round trip identity on [-6, 6]") {
  for (double x = -6.0; x <= 6.0; x += 0.0625) {
    const double p = h_function(x);
    CHECK(std::fabs(inverse_gaussian_tail(p) - x) < 1e-9);
  }
}

TEST_CASE("gaussian_integral normalization and moments") {
  Quadrature quad;
  CHECK(gaussian_integral([](double) { return 1.0; }, -kInf, kInf, quad) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gaussian_integral([](double t) { return t * t; }, -kInf, kInf, quad) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gaussian_integral([](double) { return 1.0; }, -kInf, 0.0, quad) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // Fourth moment of the standard normal.
  CHECK(gaussian_integral([](double t) { return t * t * t * t; }, -kInf, kInf, quad) ==
        doctest::Approx(3.0).epsilon(1e-11));

  Quadrature gh;
  gh.scheme = QuadScheme::GaussHermiteMapped;
  gh.node_count = 64;
  CHECK(gaussian_integral([](double) { return 1.0; }, -kInf, kInf, gh) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gaussian_integral([](double t) { return t * t; }, -kInf, kInf, gh) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("error estimate bounds the change under node doubling") {
  auto g = [](double t) { return std::exp(-0.25 * t * t) * std::cos(t); };
  Quadrature q1;
  q1.scheme = QuadScheme::GaussHermiteMapped;
  q1.node_count = 24;
  const auto r1 = gaussian_integral_detailed(g, -kInf, kInf, q1);
  Quadrature q2 = q1;
  q2.node_count = 48;
  const auto r2 = gaussian_integral_detailed(g, -kInf, kInf, q2);
  CHECK(std::fabs(r2.value - r1.value) <= r1.error_estimate + 1e-15);
}

TEST_CASE("quadrature converges geometrically for a smooth integrand") {
  // exact: integral of exp(-t^2/4) phi(t) dt = 1/sqrt(1.5)
  const double exact = 1.0 / std::sqrt(1.5);
  auto g = [](double t) { return std::exp(-0.25 * t * t); };
  double prev_err = 1.0;
  int shrank = 0;
  for (int n : {8, 16, 32, 64}) {
    Quadrature q;
    q.scheme = QuadScheme::GaussHermiteMapped;
    q.node_count = n;
    const double err = std::fabs(gaussian_integral(g, -kInf, kInf, q) - exact);
    if (err < 0.25 * prev_err || err < 1e-14) ++shrank;
    prev_err = err;
  }
  CHECK(shrank >= 3);
  Quadrature fine;
  CHECK(gaussian_integral(g, -kInf, kInf, fine) == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("non-finite integrand reports the offending node") {
  Quadrature quad;
  try {
    gaussian_integral([](double t) { return 1.0 / (t - t); }, -1.0, 1.0, quad);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(std::isfinite(e.node()));
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("invalid domain rejected") {
  Quadrature quad;
  CHECK_THROWS_AS(gaussian_integral([](double) { return 1.0; }, 1.0, 1.0, quad),
                  std::invalid_argument);
}
