#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "dsl/math/special.hpp"
#include "dsl/sim/perceptron.hpp"
#include "dsl/sim/rng.hpp"
#include "dsl/theory/saddle.hpp"
#include "support/oracles.hpp"

using namespace dsl::sim;
namespace dt = dsl::theory;

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 100; ++i) differs |= (a2.next_u64() != c.next_u64());
  CHECK(differs);
  CHECK(derive_seed(1, 0, 5) != derive_seed(1, 1, 5));
  CHECK(derive_seed(1, 0, 5) != derive_seed(2, 0, 5));
  CHECK(derive_seed(1, 0, 5) == derive_seed(1, 0, 5));
}

TEST_CASE("rng gaussian moments") {
  Rng rng(7);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    s += g;
    s2 += g * g;
  }
  CHECK(std::fabs(s / n) < 0.01);
  CHECK(std::fabs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("sample_expert") {
  const auto e = sample_expert(200, 11);
  CHECK(e.weights.norm() == doctest::Approx(std::sqrt(200.0)).epsilon(1e-9));
  const auto e2 = sample_expert(200, 12);
  CHECK((e.weights - e2.weights).norm() > 1e-3);
  CHECK_THROWS_AS(sample_expert(1, 3), SimError);

  // isotropy: sample covariance of normalized directions ~ I/d
  const int d = 8, draws = 10000;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < draws; ++i) {
    const auto ei = sample_expert(d, 1000 + i);
    const Eigen::VectorXd u = ei.weights / ei.weights.norm();
    cov += u * u.transpose();
  }
  cov /= draws;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      if (r == c)
        CHECK(std::fabs(cov(r, c) - 1.0 / d) < 0.05);
      else
        CHECK(std::fabs(cov(r, c)) < 0.05);
    }
}

TEST_CASE("generate_set") {
  const auto expert = sample_expert(50, 5);
  const auto set = generate_set(expert, 2000, 6);
  for (int i = 0; i < set.n; ++i)
    CHECK(set.labels[i] * expert.weights.dot(set.inputs.row(i)) > 0.0);
  // label balance
  int pos = 0;
  const auto big = generate_set(expert, 10000, 7);
  for (int i = 0; i < big.n; ++i) pos += (big.labels[i] == 1);
  CHECK(std::fabs(pos / 10000.0 - 0.5) < 0.02);
  // determinism
  const auto again = generate_set(expert, 2000, 6);
  CHECK((again.inputs - set.inputs).norm() == 0.0);
  CHECK((again.labels - set.labels).norm() == 0);
}

TEST_CASE("make_probe hits the requested angle") {
  const auto expert = sample_expert(100, 21);
  auto angle_to = [&](const Eigen::VectorXd& p) {
    return std::acos(std::clamp(
        p.dot(expert.weights) / (p.norm() * expert.weights.norm()), -1.0, 1.0));
  };
  CHECK(angle_to(make_probe(expert, 0.0, 1)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::fabs(make_probe(expert, dsl::math::kPi / 2, 2).dot(expert.weights)) <
        1e-10 * 100);
  const double g = dsl::math::kPi / 6.0;
  CHECK(std::cos(angle_to(make_probe(expert, g, 3))) ==
        doctest::Approx(std::cos(g)).epsilon(1e-10));
  CHECK(make_probe(expert, g, 4).norm() == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("train_probe") {
  CHECK_THROWS_AS(train_probe(LabeledSet{}, 0, 1), SimError);
  // Separable two-point set: perceptron converges to zero errors.
  LabeledSet tiny;
  tiny.n = 2;
  tiny.d = 2;
  tiny.inputs.resize(2, 2);
  tiny.inputs << 1.0, 0.0, -1.0, 0.0;
  tiny.labels.resize(2);
  tiny.labels << 1, -1;
  const auto w = train_probe(tiny, 50, 3);
  for (int i = 0; i < tiny.n; ++i)
    CHECK(tiny.labels[i] * w.dot(tiny.inputs.row(i)) > 0.0);

  // Angle to expert decreases (statistically) with training epochs.
  int improved = 0;
  for (int s = 0; s < 20; ++s) {
    const auto expert = sample_expert(50, 100 + s);
    const auto set = generate_set(expert, 250, 200 + s);
    auto cosangle = [&](const Eigen::VectorXd& p) {
      return p.dot(expert.weights) / (p.norm() * expert.weights.norm());
    };
    const auto w1 = train_probe(set, 1, 300 + s);
    const auto w8 = train_probe(set, 8, 300 + s);
    if (cosangle(w8) > cosangle(w1)) ++improved;
  }
  CHECK(improved >= 14);  // sign test, p < 0.06 under the null
}

TEST_CASE("compute_margins") {
  LabeledSet set;
  set.n = 2;
  set.d = 2;
  set.inputs.resize(2, 2);
  set.inputs << 2.0, 3.0, 2.0, 3.0;
  set.labels.resize(2);
  set.labels << 1, -1;
  Eigen::VectorXd probe(2);
  probe << 1.0, 0.0;
  const auto prof = compute_margins(probe, set);
  CHECK(prof.margins[0] == doctest::Approx(2.0));
  CHECK(prof.margins[1] == doctest::Approx(-2.0));
  Eigen::VectorXd bad(3);
  CHECK_THROWS_AS(compute_margins(bad, set), SimError);

  const auto expert = sample_expert(30, 9);
  const auto data = generate_set(expert, 500, 10);
  const auto pm = compute_margins(expert.weights, data);
  CHECK(pm.margins.minCoeff() > 0.0);  // perfect probe: all margins positive
}

TEST_CASE("select_subset") {
  LabeledSet set;
  set.n = 4;
  set.d = 1;
  set.inputs.resize(4, 1);
  set.inputs << 3.0, -1.0, 2.0, 5.0;
  set.labels.resize(4);
  set.labels << 1, 1, 1, 1;
  Eigen::VectorXd probe(1);
  probe << 1.0;
  auto prof = compute_margins(probe, set);  // margins [3, -1, 2, 5]

  SUBCASE("keep-hardest takes the smallest margins") {
    const auto sub = select_subset(prof, set, 0.5, StrategyKind::KeepHardest, 1);
    CHECK(prof.kept_indices == std::vector<int>{1, 2});
    CHECK(sub.inputs(0, 0) == -1.0);
    CHECK(sub.inputs(1, 0) == 2.0);
  }
  SUBCASE("keep-easiest takes the largest margins") {
    const auto sub = select_subset(prof, set, 0.5, StrategyKind::KeepEasiest, 1);
    CHECK(prof.kept_indices == std::vector<int>{3, 0});
    CHECK(sub.inputs(0, 0) == 5.0);
    CHECK(sub.inputs(1, 0) == 3.0);
  }
  SUBCASE("f = 1 keeps the original order") {
    const auto sub = select_subset(prof, set, 1.0, StrategyKind::KeepHardest, 1);
    CHECK(prof.kept_indices == std::vector<int>{0, 1, 2, 3});
    CHECK((sub.inputs - set.inputs).norm() == 0.0);
  }
  SUBCASE("keep-random: exact count, no replacement") {
    const auto sub = select_subset(prof, set, 0.75, StrategyKind::KeepRandom, 5);
    CHECK(sub.n == 3);
    std::set<int> uniq(prof.kept_indices.begin(), prof.kept_indices.end());
    CHECK(uniq.size() == 3);
  }
  SUBCASE("absolute margins rank by |z|") {
    const auto sub = select_subset(prof, set, 0.5, StrategyKind::KeepHardest, 1, true);
    CHECK(prof.kept_indices == std::vector<int>{1, 2});  // |.| = 1, 2
    (void)sub;
  }
  SUBCASE("empty selection rejected") {
    LabeledSet one;
    one.n = 1;
    one.d = 1;
    one.inputs.resize(1, 1);
    one.inputs << 1.0;
    one.labels.resize(1);
    one.labels << 1;
    auto p1 = compute_margins(probe, one);
    CHECK_THROWS_AS(select_subset(p1, one, 0.2, StrategyKind::KeepHardest, 1), SimError);
  }
}

TEST_CASE("train_max_margin hand examples") {
  SUBCASE("three points, answer w = (0,1), kappa = 1") {
    LabeledSet set;
    set.n = 3;
    set.d = 2;
    set.inputs.resize(3, 2);
    set.inputs << 0.0, 1.0, 0.0, -1.0, 1.0, 1.0;
    set.labels.resize(3);
    set.labels << 1, -1, 1;
    const auto r = train_max_margin(set, 1e-9);
    CHECK(r.kappa == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.weights[0] == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(r.weights[1] == doctest::Approx(1.0).epsilon(1e-7));
  }
  SUBCASE("antipodal pair") {
    LabeledSet set;
    set.n = 2;
    set.d = 2;
    set.inputs.resize(2, 2);
    set.inputs << 1.0, 0.0, -1.0, 0.0;
    set.labels.resize(2);
    set.labels << 1, -1;
    const auto r = train_max_margin(set, 1e-9);
    CHECK(r.kappa == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.weights[0] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("train_max_margin equals the QP enumeration oracle") {
  Rng rng(314159);
  int checked = 0;
  for (int inst = 0; inst < 60; ++inst) {
    const int d = 2 + int(rng.below(4));       // 2..5
    const int n = d + 1 + int(rng.below(16));  // up to 20
    const auto expert = sample_expert(d, 5000 + inst);
    const auto set = generate_set(expert, n, 6000 + inst);
    const auto mine = train_max_margin(set, 1e-8);
    const auto oracle = dsl::testing::qp_max_margin_kappa(set.inputs, set.labels);
    REQUIRE(oracle.has_value());
    CHECK(std::fabs(mine.kappa - *oracle) < 1e-6);
    ++checked;
  }
  CHECK(checked == 60);
}

TEST_CASE("max-margin optimality survives random perturbation attack") {
  const auto expert = sample_expert(12, 77);
  const auto set = generate_set(expert, 40, 78);
  const auto r = train_max_margin(set, 1e-9);
  Eigen::MatrixXd Z = set.inputs;
  for (int i = 0; i < set.n; ++i) Z.row(i) *= double(set.labels[i]);
  Rng rng(79);
  for (int t = 0; t < 10000; ++t) {
    Eigen::VectorXd pert(set.d);
    for (int j = 0; j < set.d; ++j) pert[j] = rng.gaussian();
    Eigen::VectorXd w = r.weights + 0.05 * pert;
    w /= w.norm();
    CHECK((Z * w).minCoeff() <= r.kappa + 1e-9);
  }
}

TEST_CASE("measure_error") {
  const auto expert = sample_expert(10, 1);
  const auto em = measure_error(expert.weights, expert, nullptr);
  CHECK(em.R == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(em.epsilon_analytic == doctest::Approx(0.0).epsilon(1e-7));

  Eigen::VectorXd orth = make_probe(expert, dsl::math::kPi / 2, 2);
  const auto em2 = measure_error(orth, expert, nullptr);
  CHECK(em2.R == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(em2.epsilon_analytic == doctest::Approx(0.5).epsilon(1e-10));

  // R = sqrt(3)/2 -> eps = 1/6
  Eigen::VectorXd mix = std::sqrt(3.0) / 2.0 * (expert.weights / expert.weights.norm()) +
                        0.5 * (orth / orth.norm());
  const auto em3 = measure_error(mix, expert, nullptr);
  CHECK(em3.epsilon_analytic == doctest::Approx(1.0 / 6.0).epsilon(1e-10));

  CHECK_THROWS_AS(measure_error(Eigen::VectorXd::Zero(10), expert, nullptr), SimError);
}

TEST_CASE("run_experiment basics") {
  SimConfig cfg;
  cfg.d = 40;
  cfg.alpha_tot = 2.0;
  cfg.f = 1.0;
  cfg.trials = 1;
  cfg.master_seed = 5;
  cfg.with_holdout = true;
  const auto one = run_experiment(cfg);
  CHECK(one.per_trial.size() == 1);
  CHECK(one.mean_epsilon == one.per_trial[0].epsilon_analytic);
  CHECK(!one.std_error.has_value());  // undefined for a single trial

  cfg.trials = 4;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.per_trial.size() == b.per_trial.size());
  for (size_t i = 0; i < a.per_trial.size(); ++i) {
    CHECK(a.per_trial[i].R == b.per_trial[i].R);  // bitwise determinism
    CHECK(a.per_trial[i].kappa == b.per_trial[i].kappa);
  }
  CHECK(a.mean_epsilon == b.mean_epsilon);
  CHECK(a.std_error.has_value());
}

TEST_CASE("run_experiment agrees with the theory at d=200 (smoke)") {
  SimConfig cfg;
  cfg.d = 200;
  cfg.alpha_tot = 4.0;
  cfg.f = 1.0;
  cfg.trials = 25;
  cfg.master_seed = 12345;
  cfg.with_holdout = true;
  const auto res = run_experiment(cfg);
  const auto th = dt::solve_perfect(4.0, 1.0,
                                    dt::cutoffs_from_fraction(1.0, 0.0, dt::StrategyKind::KeepRandom));
  REQUIRE(res.std_error.has_value());
  CHECK(std::fabs(res.mean_epsilon - th.epsilon) < 3.0 * *res.std_error + 0.004);
  // holdout error tracks the analytic overlap error
  CHECK(std::fabs(res.mean_epsilon_empirical - res.mean_epsilon) < 0.01);
}
