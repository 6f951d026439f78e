#include "dsl/sim/perceptron.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "dsl/math/special.hpp"
#include "dsl/sim/rng.hpp"

namespace dsl::sim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd gaussian_vector(Rng& rng, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.gaussian();
  return v;
}

double sample_std(const std::vector<double>& xs, double mean) {
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / double(xs.size() - 1));
}
}  // namespace

ExpertModel sample_expert(int d, uint64_t seed) {
  if (d < 2) throw SimError("sample_expert: d >= 2 required");
  Rng rng(seed);
  Eigen::VectorXd v = gaussian_vector(rng, d);
  while (v.norm() == 0.0) v = gaussian_vector(rng, d);
  ExpertModel e;
  e.d = d;
  e.weights = v * (std::sqrt(double(d)) / v.norm());
  return e;
}

LabeledSet generate_set(const ExpertModel& expert, int n, uint64_t seed) {
  if (n < 1) throw SimError("generate_set: n >= 1 required");
  Rng rng(seed);
  LabeledSet s;
  s.n = n;
  s.d = expert.d;
  s.inputs.resize(n, expert.d);
  s.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    double margin = 0.0;
    Eigen::VectorXd x;
    do {  // exact ties are probability zero but would break the labels
      x = gaussian_vector(rng, expert.d);
      margin = expert.weights.dot(x);
    } while (margin == 0.0);
    s.inputs.row(i) = x.transpose();
    s.labels[i] = margin > 0.0 ? 1 : -1;
  }
  return s;
}

Eigen::VectorXd make_probe(const ExpertModel& expert, double gamma_probe,
                           uint64_t seed) {
  if (!(gamma_probe >= 0.0 && gamma_probe <= 0.5 * dsl::math::kPi + 1e-12))
    throw SimError("make_probe: gamma_probe must lie in [0, pi/2]");
  const Eigen::VectorXd e = expert.weights / expert.weights.norm();
  const double root_d = std::sqrt(double(expert.d));
  if (gamma_probe == 0.0) return root_d * e;
  Rng rng(seed);
  Eigen::VectorXd perp;
  double norm = 0.0;
  do {
    const Eigen::VectorXd g = gaussian_vector(rng, expert.d);
    perp = g - g.dot(e) * e;
    norm = perp.norm();
  } while (norm == 0.0);
  perp /= norm;
  return root_d * (std::cos(gamma_probe) * e + std::sin(gamma_probe) * perp);
}

Eigen::VectorXd train_probe(const LabeledSet& set, int epochs, uint64_t seed) {
  if (epochs < 1) throw SimError("train_probe: epochs >= 1 required");
  Rng rng(seed);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(set.d);
  std::vector<int> order(set.n);
  std::iota(order.begin(), order.end(), 0);
  for (int e = 0; e < epochs; ++e) {
    for (int i = set.n - 1; i > 0; --i)
      std::swap(order[i], order[rng.below(uint64_t(i) + 1)]);
    for (int i : order) {
      const double m = set.labels[i] * w.dot(set.inputs.row(i));
      if (m <= 0.0) w += double(set.labels[i]) * set.inputs.row(i).transpose();
    }
  }
  return w;
}

MarginProfile compute_margins(const Eigen::VectorXd& probe, const LabeledSet& set) {
  if (probe.size() != set.d)
    throw SimError("compute_margins: probe dimension does not match the set");
  MarginProfile p;
  p.probe = probe;
  p.margins = (set.inputs * probe).cwiseProduct(set.labels.cast<double>());
  return p;
}

LabeledSet select_subset(MarginProfile& profile, const LabeledSet& set, double f,
                         StrategyKind kind, uint64_t seed, bool absolute_margin) {
  if (!(f > 0.0 && f <= 1.0)) throw SimError("select_subset: f must lie in (0,1]");
  if (profile.margins.size() != set.n)
    throw SimError("select_subset: profile does not match the set");
  const int n = set.n;
  const long k = std::lround(f * n);
  if (k < 1) throw SimError("select_subset: round(f*n) < 1 leaves an empty synthetic set");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto key = [&](int i) {
    const double m = profile.margins[i];
    return absolute_margin ? std::fabs(m) : m;
  };
  if (std::size_t(k) == std::size_t(n)) {
    // f = 1: the full set in its original order.
  } else if (kind == StrategyKind::KeepHardest) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return key(a) < key(b); });
  } else if (kind == StrategyKind::KeepEasiest) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return key(a) > key(b); });
  } else {
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i)
      std::swap(idx[i], idx[rng.below(uint64_t(i) + 1)]);
    std::sort(idx.begin(), idx.begin() + k);
  }
  idx.resize(k);

  profile.kept_indices = idx;
  profile.selection.kind = kind;
  profile.selection.fraction = f;
  profile.selection.absolute_margin = absolute_margin;
  double lo = kInf, hi = -kInf;
  for (int i : idx) {
    lo = std::min(lo, profile.margins[i]);
    hi = std::max(hi, profile.margins[i]);
  }
  // Realized cutoffs of the kept interval (count-based selection).
  profile.selection.cutoff_lo = (kind == StrategyKind::KeepEasiest) ? lo : -kInf;
  profile.selection.cutoff_hi = (kind == StrategyKind::KeepHardest) ? hi : kInf;

  LabeledSet out;
  out.n = int(k);
  out.d = set.d;
  out.inputs.resize(k, set.d);
  out.labels.resize(k);
  for (long r = 0; r < k; ++r) {
    out.inputs.row(r) = set.inputs.row(idx[r]);
    out.labels[r] = set.labels[idx[r]];
  }
  return out;
}

MaxMarginResult train_max_margin(const LabeledSet& set, double tol) {
  const int n = set.n;
  const int d = set.d;
  if (n < 1) throw SimError("train_max_margin: empty set");
  // Rows scaled by label; the problem is min ||w||^2/2 s.t. Z w >= 1 with
  // dual min_{a>=0} a'Ga/2 - sum(a), G = ZZ'.  Active-set solve: the
  // support set P carries G_PP a_P = 1 (margins exactly 1 there); the
  // most violated constraint joins P, multipliers that would go negative
  // leave (Lawson-Hanson inner loop).  The support set never needs to
  // exceed d, so G is only ever formed on P.
  Eigen::MatrixXd Z = set.inputs;
  for (int i = 0; i < n; ++i) Z.row(i) *= double(set.labels[i]);

  std::vector<int> P;
  std::vector<char> inP(n, 0);
  const int cap = std::min(n, d + 8) + 8;
  Eigen::MatrixXd L(cap, cap);           // lower Cholesky of G_PP (+ridge)
  Eigen::MatrixXd Gp(cap, cap);          // G on the support set (+ridge)
  Eigen::VectorXd aP = Eigen::VectorXd::Zero(cap);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  // A whisper of ridge keeps G_PP positive definite when the support set
  // walk brushes past d dependent rows; the optimality bracket below is
  // computed ridge-free, so it still certifies the true problem.
  double diag_scale = 0.0;
  for (int i = 0; i < n; ++i) diag_scale += Z.row(i).squaredNorm();
  diag_scale /= double(n);
  const double ridge = 1e-9 * std::max(1.0, diag_scale);

  auto solve_eq = [&](int k) {  // G_PP x = 1 via the Cholesky factor
    Eigen::VectorXd x = Eigen::VectorXd::Ones(k);
    L.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(x);
    L.topLeftCorner(k, k).triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
  };
  auto refactor = [&](int k) {
    Eigen::LLT<Eigen::MatrixXd> llt(Gp.topLeftCorner(k, k));
    if (llt.info() != Eigen::Success) return false;
    L.topLeftCorner(k, k) = llt.matrixL();
    return true;
  };
  auto refresh_fields = [&](int k) {
    w.setZero();
    for (int j = 0; j < k; ++j) w += aP[j] * Z.row(P[j]).transpose();
    m = Z * w;
  };

  const long max_outer = 40L * std::min(n, d) + 200L;
  double klo = 0.0, khi = kInf;
  long outer = 0;
  for (; outer < max_outer; ++outer) {
    const int k = int(P.size());
    const double wsq = w.squaredNorm();
    if (wsq > 0.0) {
      const double wnorm = std::sqrt(wsq);
      double asum = 0.0;
      for (int j = 0; j < k; ++j) asum += aP[j];
      klo = std::max(0.0, m.minCoeff()) / wnorm;
      const double dual = 2.0 * asum - wsq;
      khi = dual > 0.0 ? 1.0 / std::sqrt(dual) : kInf;
      if (khi - klo <= tol) break;
    }
    // Most violated margin outside the support set enters (ties by index).
    int enter = -1;
    double worst = 1.0 - 1e-9;
    for (int i = 0; i < n; ++i)
      if (!inP[i] && m[i] < worst) {
        worst = m[i];
        enter = i;
      }
    if (enter < 0) break;  // every outside margin >= 1: KKT point

    // Cholesky append of row/col G_{P,enter}.
    Eigen::VectorXd gcol(k + 1);
    for (int j = 0; j < k; ++j) gcol[j] = Z.row(P[j]).dot(Z.row(enter));
    gcol[k] = Z.row(enter).squaredNorm() + ridge;
    Eigen::VectorXd ell = gcol.head(k);
    L.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(ell);
    double pivot2 = gcol[k] - ell.squaredNorm();
    if (!(pivot2 > 0.25 * ridge)) pivot2 = 0.25 * ridge;
    Gp.block(k, 0, 1, k) = gcol.head(k).transpose();
    Gp.block(0, k, k, 1) = gcol.head(k);
    Gp(k, k) = gcol[k];
    L.row(k).head(k) = ell.transpose();
    L(k, k) = std::sqrt(pivot2);
    P.push_back(enter);
    inP[enter] = 1;
    aP[k] = 0.0;

    // Equality solve; walk back multipliers that would go negative.
    for (int guard = 0; guard < 4 * cap; ++guard) {
      const int kk = int(P.size());
      Eigen::VectorXd x = solve_eq(kk);
      if ((x.array() >= 0.0).all()) {
        aP.head(kk) = x;
        break;
      }
      double theta = 1.0;
      for (int j = 0; j < kk; ++j)
        if (x[j] < 0.0) theta = std::min(theta, aP[j] / (aP[j] - x[j]));
      for (int j = 0; j < kk; ++j) aP[j] += theta * (x[j] - aP[j]);
      // Drop everything pinned at zero (at least the blocking index).
      std::vector<int> keep;
      for (int j = 0; j < kk; ++j)
        if (!(x[j] < 0.0 && aP[j] <= 1e-14)) keep.push_back(j);
      if (int(keep.size()) == kk) {
        int blocker = 0;
        for (int j = 1; j < kk; ++j)
          if (aP[j] < aP[blocker]) blocker = j;
        keep.clear();
        for (int j = 0; j < kk; ++j)
          if (j != blocker) keep.push_back(j);
      }
      std::vector<int> newP;
      Eigen::VectorXd newA(cap);
      Eigen::MatrixXd newG(cap, cap);
      for (size_t r = 0; r < keep.size(); ++r) {
        newP.push_back(P[keep[r]]);
        newA[int(r)] = aP[keep[r]];
        for (size_t c = 0; c < keep.size(); ++c)
          newG(int(r), int(c)) = Gp(keep[r], keep[c]);
      }
      for (int p : P) inP[p] = 0;
      for (int p : newP) inP[p] = 1;
      P = std::move(newP);
      aP = std::move(newA);
      Gp.topLeftCorner(int(P.size()), int(P.size())) =
          newG.topLeftCorner(int(P.size()), int(P.size()));
      if (P.empty()) break;
      if (!refactor(int(P.size())))
        throw SimError("train_max_margin: Cholesky refactor failed");
    }
    if (P.empty()) throw SimError("train_max_margin: support set collapsed");
    refresh_fields(int(P.size()));
  }

  const double wnorm = w.norm();
  if (wnorm <= 0.0) throw SimError("train_max_margin: degenerate solution (w = 0)");
  if (khi - klo > tol)
    throw SimError("train_max_margin: optimality bracket " + std::to_string(khi - klo) +
                   " above tolerance after " + std::to_string(outer) + " outer steps");

  MaxMarginResult r;
  r.weights = w / wnorm;
  r.kappa = (Z * r.weights).minCoeff();
  r.iterations = int(outer);
  r.optimality_gap = khi - klo;
  return r;
}

ErrorMeasure measure_error(const Eigen::VectorXd& student, const ExpertModel& expert,
                           const LabeledSet* holdout) {
  if (student.size() != expert.d) throw SimError("measure_error: dimension mismatch");
  const double sn = student.norm();
  if (sn == 0.0) throw SimError("measure_error: zero-norm student");
  ErrorMeasure em;
  const double R = student.dot(expert.weights) / (sn * expert.weights.norm());
  em.R = R;
  em.epsilon_analytic = std::acos(std::clamp(R, -1.0, 1.0)) / dsl::math::kPi;
  if (holdout) {
    int wrong = 0;
    const Eigen::VectorXd scores = holdout->inputs * student;
    for (int i = 0; i < holdout->n; ++i) {
      const int pred = scores[i] > 0.0 ? 1 : -1;
      if (pred != holdout->labels[i]) ++wrong;
    }
    em.epsilon_empirical = double(wrong) / double(holdout->n);
  }
  return em;
}

TrialResult run_trial(const SimConfig& config, int trial) {
  const uint64_t ms = config.master_seed;
  const auto t = uint64_t(trial);
  const ExpertModel expert = sample_expert(config.d, derive_seed(ms, 0, t));
  const int n_real = int(std::lround(config.alpha_tot * config.d));
  const LabeledSet real = generate_set(expert, n_real, derive_seed(ms, 1, t));

  Eigen::VectorXd probe;
  if (config.probe_mode == ProbeMode::ConditionedGaussian)
    probe = make_probe(expert, config.gamma_probe, derive_seed(ms, 2, t));
  else
    probe = train_probe(real, config.probe_epochs, derive_seed(ms, 2, t));

  MarginProfile profile = compute_margins(probe, real);
  const LabeledSet kept = select_subset(profile, real, config.f,
                                        config.strategy_kind, derive_seed(ms, 3, t),
                                        config.absolute_margin);
  const MaxMarginResult mm = train_max_margin(kept, config.max_margin_tol);

  TrialResult r;
  r.trial = trial;
  r.seed = derive_seed(ms, 0, t);
  r.kappa = mm.kappa;
  if (config.with_holdout) {
    const LabeledSet holdout =
        generate_set(expert, 20 * config.d, derive_seed(ms, 4, t));
    const ErrorMeasure em = measure_error(mm.weights, expert, &holdout);
    r.R = em.R;
    r.epsilon_analytic = em.epsilon_analytic;
    r.epsilon_empirical = em.epsilon_empirical;
  } else {
    const ErrorMeasure em = measure_error(mm.weights, expert, nullptr);
    r.R = em.R;
    r.epsilon_analytic = em.epsilon_analytic;
  }
  const double pc = probe.dot(expert.weights) / (probe.norm() * expert.weights.norm());
  r.probe_gamma_achieved = std::acos(std::clamp(pc, -1.0, 1.0));
  return r;
}

SimResult run_experiment(const SimConfig& config) {
  if (config.trials < 1) throw SimError("run_experiment: trials >= 1 required");
  if (config.d < 2) throw SimError("run_experiment: d >= 2 required");

  std::vector<TrialResult> results(config.trials);
  std::vector<std::string> failures(config.trials);

  auto work = [&](int begin, int step) {
    for (int t = begin; t < config.trials; t += step) {
      try {
        results[t] = run_trial(config, t);
      } catch (const std::exception& e) {
        failures[t] = std::string(e.what());
      }
    }
  };
  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
    for (auto& th : pool) th.join();
  }
  for (int t = 0; t < config.trials; ++t)
    if (!failures[t].empty())
      throw SimError("trial " + std::to_string(t) + " (seed " +
                     std::to_string(derive_seed(config.master_seed, 0, uint64_t(t))) +
                     ") failed: " + failures[t]);

  SimResult out;
  out.per_trial = std::move(results);
  out.config_echo = config;
  std::vector<double> eps, epse, kap;
  for (const auto& r : out.per_trial) {
    eps.push_back(r.epsilon_analytic);
    kap.push_back(r.kappa);
    if (r.epsilon_empirical) epse.push_back(*r.epsilon_empirical);
  }
  out.mean_epsilon = std::accumulate(eps.begin(), eps.end(), 0.0) / eps.size();
  out.mean_kappa = std::accumulate(kap.begin(), kap.end(), 0.0) / kap.size();
  if (eps.size() >= 2)
    out.std_error = sample_std(eps, out.mean_epsilon) / std::sqrt(double(eps.size()));
  if (!epse.empty()) {
    out.mean_epsilon_empirical =
        std::accumulate(epse.begin(), epse.end(), 0.0) / epse.size();
    if (epse.size() >= 2)
      out.std_error_empirical =
          sample_std(epse, out.mean_epsilon_empirical) / std::sqrt(double(epse.size()));
  }
  return out;
}

}  // namespace dsl::sim
