#include "dsl/difficulty/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dsl/sim/rng.hpp"

namespace dsl::difficulty {

using dsl::distill::accuracy;
using dsl::distill::loss_and_grad;
using dsl::distill::make_model;
using dsl::distill::mean_loss;
using dsl::distill::per_sample_grad_norms;
using dsl::sim::derive_seed;
using dsl::sim::Rng;

Ensemble build_ensemble(const Dataset& train, int count, int steps, int batch,
                        double eta, uint64_t seed) {
  if (count < 2) throw std::invalid_argument("build_ensemble: count >= 2 required");
  Ensemble ens;
  const int n = int(train.X.rows());
  const int sub = std::max(2, (8 * n) / 10);  // 80% bootstrap subsample
  for (int m = 0; m < count; ++m) {
    const uint64_t ms = derive_seed(seed, 300, uint64_t(m));
    Rng rng(ms);
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(pool[i], pool[rng.below(uint64_t(i) + 1)]);
    pool.resize(sub);

    ToyModel model = make_model(train.C, train.d, derive_seed(ms, 1));
    const int b = std::min(batch, sub);
    Eigen::MatrixXd Xb(b, train.d);
    Eigen::VectorXi yb(b);
    for (int s = 0; s < steps; ++s) {
      for (int i = 0; i < b; ++i) {
        const int r = pool[rng.below(uint64_t(sub))];
        Xb.row(i) = train.X.row(r);
        yb[i] = train.y[r];
      }
      model.W -= eta * loss_and_grad(model, Xb, yb).grad;
    }
    ens.models.push_back(std::move(model));
    ens.member_seeds.push_back(ms);
  }
  return ens;
}

namespace {
void check_ensemble(const Ensemble& ens) {
  if (ens.models.empty()) throw std::invalid_argument("empty ensemble");
}
}  // namespace

double sample_difficulty(const Eigen::VectorXd& x, int y, const Ensemble& ens) {
  check_ensemble(ens);
  int wrong = 0;
  for (const auto& m : ens.models) {
    const Eigen::VectorXd z = m.W * x;
    int arg = 0;
    z.maxCoeff(&arg);
    if (arg != y) ++wrong;
  }
  return double(wrong) / double(ens.count());
}

double gradn_score(const Eigen::VectorXd& x, int y, const Ensemble& ens) {
  check_ensemble(ens);
  Eigen::MatrixXd X(1, x.size());
  X.row(0) = x.transpose();
  Eigen::VectorXi yy(1);
  yy[0] = y;
  double s = 0.0;
  for (const auto& m : ens.models) s += per_sample_grad_norms(m, X, yy)[0];
  return s / double(ens.count());
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson: need two equal-length vectors");
  const double n = double(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0)
    throw std::domain_error("pearson: constant input vector");
  return sab / std::sqrt(saa * sbb);
}

namespace {
std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t(0));
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t i, size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * (double(i) + double(j)) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

DifficultyReport correlation_report(const Dataset& set, const Ensemble& ens) {
  check_ensemble(ens);
  const int n = int(set.X.rows());
  if (n < 3) throw std::invalid_argument("correlation_report: need >= 3 samples");

  DifficultyReport rep;
  std::vector<double> chi(n), gradn(n, 0.0), loss(n, 0.0);
  std::vector<int> wrong(n, 0);
  Eigen::VectorXi y1(1);
  for (const auto& m : ens.models) {
    const Eigen::MatrixXd P = dsl::distill::softmax_rows(m, set.X);
    const Eigen::VectorXd norms = per_sample_grad_norms(m, set.X, set.y);
    for (int i = 0; i < n; ++i) {
      int arg = 0;
      P.row(i).maxCoeff(&arg);
      if (arg != set.y[i]) ++wrong[i];
      gradn[i] += norms[i];
      loss[i] -= std::log(std::max(P(i, set.y[i]), 1e-300));
    }
  }
  for (int i = 0; i < n; ++i) {
    chi[i] = double(wrong[i]) / ens.count();
    gradn[i] /= ens.count();
    loss[i] /= ens.count();
    rep.rows.push_back({i, chi[i], gradn[i], loss[i]});
  }
  auto corr_or_unset = [](double (*fn)(const std::vector<double>&,
                                       const std::vector<double>&),
                          const std::vector<double>& a,
                          const std::vector<double>& b) -> std::optional<double> {
    try {
      return fn(a, b);
    } catch (const std::domain_error&) {
      return std::nullopt;  // constant score vector: flagged undefined
    }
  };
  rep.pearson_chi_gradn = corr_or_unset(pearson, chi, gradn);
  rep.spearman_chi_gradn = corr_or_unset(spearman, chi, gradn);
  rep.pearson_chi_loss = corr_or_unset(pearson, chi, loss);
  rep.spearman_chi_loss = corr_or_unset(spearman, chi, loss);
  return rep;
}

std::vector<double> ema_smooth(const std::vector<double>& series, double decay) {
  if (series.empty()) throw std::invalid_argument("ema_smooth: empty series");
  if (!(decay >= 0.0 && decay < 1.0))
    throw std::domain_error("ema_smooth: decay must lie in [0, 1)");
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (size_t t = 1; t < series.size(); ++t)
    out[t] = decay * out[t - 1] + (1.0 - decay) * series[t];
  return out;
}

}  // namespace dsl::difficulty
