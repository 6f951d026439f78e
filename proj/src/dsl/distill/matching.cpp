#include "dsl/distill/matching.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dsl/sim/rng.hpp"

namespace dsl::distill {

DistanceMetric metric_from_string(const std::string& s) {
  if (s == "cosine-groupwise" || s == "cosine") return DistanceMetric::CosineGroupwise;
  if (s == "l2") return DistanceMetric::L2;
  throw std::invalid_argument("unknown distance metric: " + s);
}

std::string to_string(DistanceMetric m) {
  return m == DistanceMetric::CosineGroupwise ? "cosine-groupwise" : "l2";
}

DistanceResult matching_distance_detailed(const Eigen::MatrixXd& grad_a,
                                          const Eigen::MatrixXd& grad_b,
                                          DistanceMetric metric) {
  if (grad_a.rows() != grad_b.rows() || grad_a.cols() != grad_b.cols())
    throw std::invalid_argument("matching_distance: shape mismatch");
  DistanceResult r;
  if (metric == DistanceMetric::L2) {
    r.value = (grad_a - grad_b).norm();
    return r;
  }
  for (int c = 0; c < grad_a.rows(); ++c) {
    const double na = grad_a.row(c).norm();
    const double nb = grad_b.row(c).norm();
    if (na == 0.0 || nb == 0.0) {
      r.value += 1.0;
      ++r.zero_rows;
    } else {
      r.value += 1.0 - grad_a.row(c).dot(grad_b.row(c)) / (na * nb);
    }
  }
  return r;
}

double matching_distance(const Eigen::MatrixXd& grad_a,
                         const Eigen::MatrixXd& grad_b, DistanceMetric metric) {
  return matching_distance_detailed(grad_a, grad_b, metric).value;
}

Eigen::MatrixXd matching_distance_grad_b(const Eigen::MatrixXd& grad_a,
                                         const Eigen::MatrixXd& grad_b,
                                         DistanceMetric metric) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(grad_b.rows(), grad_b.cols());
  if (metric == DistanceMetric::L2) {
    const double dist = (grad_a - grad_b).norm();
    if (dist > 0.0) M = (grad_b - grad_a) / dist;
    return M;
  }
  for (int c = 0; c < grad_b.rows(); ++c) {
    const double na = grad_a.row(c).norm();
    const double nb = grad_b.row(c).norm();
    if (na == 0.0 || nb == 0.0) continue;  // flat at the maximal mismatch
    const double dot = grad_a.row(c).dot(grad_b.row(c));
    M.row(c) = -grad_a.row(c) / (na * nb) + dot * grad_b.row(c) / (na * nb * nb * nb);
  }
  return M;
}

GmLossResult gm_sdc_loss(const ToyModel& model, const Eigen::MatrixXd& X_real,
                         const Eigen::VectorXi& y_real,
                         const Eigen::MatrixXd& X_syn,
                         const Eigen::VectorXi& y_syn, double lambda,
                         int reg_exponent, DistanceMetric metric) {
  if (reg_exponent != 1 && reg_exponent != 2)
    throw std::invalid_argument("gm_sdc_loss: reg_exponent must be 1 or 2");
  const LossGrad real = loss_and_grad(model, X_real, y_real);
  const LossGrad syn = loss_and_grad(model, X_syn, y_syn);

  GmLossResult out;
  out.match_term = matching_distance(real.grad, syn.grad, metric);
  out.grad_norm_syn = syn.grad.norm();
  out.reg_term = lambda * (reg_exponent == 2
                               ? out.grad_norm_syn * out.grad_norm_syn
                               : out.grad_norm_syn);

  Eigen::MatrixXd M = matching_distance_grad_b(real.grad, syn.grad, metric);
  if (lambda != 0.0) {
    out.loss = out.match_term + out.reg_term;
    if (reg_exponent == 2) {
      M += 2.0 * lambda * syn.grad;
    } else if (out.grad_norm_syn > 0.0) {
      M += (lambda / out.grad_norm_syn) * syn.grad;
    }
  } else {
    out.loss = out.match_term;
  }
  out.syn_feature_grad = grad_input_contraction(model, X_syn, y_syn, M);
  return out;
}

GmFilteredResult gm_filtered_loss(const ToyModel& model,
                                  const Eigen::MatrixXd& X_real,
                                  const Eigen::VectorXi& y_real,
                                  const Eigen::MatrixXd& X_syn_pool,
                                  const Eigen::VectorXi& y_syn_pool, double tau,
                                  DistanceMetric metric, uint64_t seed) {
  if (!(tau > 0.0)) throw std::invalid_argument("gm_filtered_loss: tau must be > 0");
  const Eigen::VectorXd norms = per_sample_grad_norms(model, X_real, y_real);
  std::vector<int> kept;
  for (int j = 0; j < norms.size(); ++j)
    if (norms[j] <= tau) kept.push_back(j);
  if (kept.empty())
    throw std::runtime_error(
        "gm_filtered_loss: no real sample has gradient norm <= tau; "
        "increase tau");

  Eigen::MatrixXd Xr(kept.size(), X_real.cols());
  Eigen::VectorXi yr(kept.size());
  for (size_t j = 0; j < kept.size(); ++j) {
    Xr.row(j) = X_real.row(kept[j]);
    yr[j] = y_real[kept[j]];
  }

  // Synthetic batch resampled to the reduced size (without replacement
  // when the pool is large enough).
  const int pool = int(X_syn_pool.rows());
  const int want = std::min<int>(int(kept.size()), pool);
  std::vector<int> sidx(pool);
  std::iota(sidx.begin(), sidx.end(), 0);
  if (want < pool) {
    dsl::sim::Rng rng(seed);
    for (int i = pool - 1; i > 0; --i)
      std::swap(sidx[i], sidx[rng.below(uint64_t(i) + 1)]);
    sidx.resize(want);
    std::sort(sidx.begin(), sidx.end());
  }
  Eigen::MatrixXd Xs(sidx.size(), X_syn_pool.cols());
  Eigen::VectorXi ys(sidx.size());
  for (size_t j = 0; j < sidx.size(); ++j) {
    Xs.row(j) = X_syn_pool.row(sidx[j]);
    ys[j] = y_syn_pool[sidx[j]];
  }

  GmFilteredResult r;
  r.kept_real = int(kept.size());
  r.used_syn = int(sidx.size());
  r.value = matching_distance(loss_and_grad(model, Xr, yr).grad,
                              loss_and_grad(model, Xs, ys).grad, metric);
  return r;
}

}  // namespace dsl::distill
