#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dsl/difficulty/difficulty.hpp"
#include "dsl/sim/rng.hpp"

using namespace dsl::difficulty;
using dsl::distill::make_blobs2;
using dsl::distill::make_model;
using dsl::distill::ToyModel;

namespace {
Ensemble handmade_ensemble(std::vector<Eigen::MatrixXd> weights) {
  Ensemble e;
  for (auto& W : weights) {
    e.models.push_back(ToyModel{std::move(W)});
    e.member_seeds.push_back(0);
  }
  return e;
}
}  // namespace

TEST_CASE("sample_difficulty counts misclassifying members") {
  // Two-class, one feature: sign of w0 - w1 decides class 0 vs 1.
  Eigen::MatrixXd right(2, 1), wrong(2, 1);
  right << 1.0, -1.0;  // predicts class 0 for x > 0
  wrong << -1.0, 1.0;
  Eigen::VectorXd x(1);
  x << 1.0;
  const auto all_right = handmade_ensemble({right, right, right, right});
  CHECK(sample_difficulty(x, 0, all_right) == 0.0);
  const auto all_wrong = handmade_ensemble({wrong, wrong});
  CHECK(sample_difficulty(x, 0, all_wrong) == 1.0);
  const auto one_of_four = handmade_ensemble({right, right, right, wrong});
  CHECK(sample_difficulty(x, 0, one_of_four) == doctest::Approx(0.25));
}

TEST_CASE("gradn_score") {
  // Single member with zero weights: softmax is uniform regardless of x,
  // so the per-sample norm is ||p - y|| * ||x|| = (1/sqrt(2)) * ||x||.
  const auto single = handmade_ensemble({Eigen::MatrixXd::Zero(2, 3)});
  Eigen::VectorXd x(3);
  x << 2.0, 0.0, 0.0;
  const double base = gradn_score(x, 0, single);
  CHECK(base == doctest::Approx(std::sqrt(0.5) * 2.0).epsilon(1e-12));

  // positively homogeneous in the input scale at fixed probabilities
  CHECK(gradn_score(3.0 * x, 0, single) == doctest::Approx(3.0 * base).epsilon(1e-12));

  // duplicating members leaves the mean unchanged
  const auto doubled = handmade_ensemble({Eigen::MatrixXd::Zero(2, 3),
                                          Eigen::MatrixXd::Zero(2, 3)});
  CHECK(gradn_score(x, 0, doubled) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("chi invariant under ensemble duplication and permutation") {
  const auto data = make_blobs2(50, 4, 1.5, 3);
  const auto ens = build_ensemble(data, 4, 30, 16, 0.4, 9);
  Ensemble doubled;
  for (int rep = 0; rep < 2; ++rep)
    for (const auto& m : ens.models) {
      doubled.models.push_back(m);
      doubled.member_seeds.push_back(0);
    }
  Ensemble permuted;
  for (int i = int(ens.models.size()) - 1; i >= 0; --i) {
    permuted.models.push_back(ens.models[i]);
    permuted.member_seeds.push_back(0);
  }
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = data.X.row(i).transpose();
    const double c = sample_difficulty(x, data.y[i], ens);
    CHECK(sample_difficulty(x, data.y[i], doubled) == doctest::Approx(c));
    CHECK(sample_difficulty(x, data.y[i], permuted) == doctest::Approx(c));
  }
}

TEST_CASE("pearson and spearman") {
  std::vector<double> a{1, 2, 3, 4, 5};
  std::vector<double> mono{2, 4, 9, 16, 30};
  std::vector<double> anti{5, 4, 3, 2, 1};
  CHECK(spearman(a, mono) == doctest::Approx(1.0));
  CHECK(spearman(a, anti) == doctest::Approx(-1.0));
  CHECK(pearson(a, a) == doctest::Approx(1.0));
  std::vector<double> constant{3, 3, 3, 3, 3};
  CHECK_THROWS_AS(pearson(a, constant), std::domain_error);
}

TEST_CASE("correlation_report flags undefined correlations") {
  // Ensemble of zero-weight models: every sample ties, chi is constant.
  const auto data = make_blobs2(10, 3, 2.0, 4);
  const auto ens = handmade_ensemble({Eigen::MatrixXd::Zero(2, 3),
                                      Eigen::MatrixXd::Zero(2, 3)});
  const auto rep = correlation_report(data, ens);
  CHECK(!rep.spearman_chi_gradn.has_value());
  CHECK(rep.rows.size() == 20);
  for (const auto& r : rep.rows) {
    CHECK(r.chi >= 0.0);
    CHECK(r.chi <= 1.0);
    CHECK(r.gradn >= 0.0);
  }
}

TEST_CASE("difficulty correlates with gradient norm on overlapping blobs") {
  const auto data = make_blobs2(300, 8, 2.0, 17);
  const auto ens = build_ensemble(data, 12, 40, 16, 0.4, 18);
  const auto rep = correlation_report(data, ens);
  REQUIRE(rep.spearman_chi_gradn.has_value());
  REQUIRE(rep.spearman_chi_loss.has_value());
  CHECK(*rep.spearman_chi_gradn > 0.4);
  CHECK(*rep.spearman_chi_loss > 0.4);
}

TEST_CASE("ema_smooth") {
  CHECK(ema_smooth({5.0, 5.0, 5.0}, 0.7) == std::vector<double>{5.0, 5.0, 5.0});
  const std::vector<double> s{1.0, 2.0, 3.0};
  CHECK(ema_smooth(s, 0.0) == s);  // decay 0 is the identity
  const auto r = ema_smooth({0.0, 1.0}, 0.5);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(ema_smooth({1.0}, 1.0), std::domain_error);
  CHECK_THROWS_AS(ema_smooth({1.0}, -0.2), std::domain_error);
  CHECK_THROWS_AS(ema_smooth({}, 0.5), std::invalid_argument);

  // contraction: output stays inside the running min/max envelope
  dsl::sim::Rng rng(5);
  std::vector<double> noisy;
  for (int i = 0; i < 50; ++i) noisy.push_back(rng.gaussian());
  const auto sm = ema_smooth(noisy, 0.9);
  double lo = noisy[0], hi = noisy[0];
  for (size_t t = 0; t < noisy.size(); ++t) {
    lo = std::min(lo, noisy[t]);
    hi = std::max(hi, noisy[t]);
    CHECK(sm[t] >= lo - 1e-12);
    CHECK(sm[t] <= hi + 1e-12);
  }
}
