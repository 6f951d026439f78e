#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "dsl/distill/model.hpp"

// Gradient-matching losses: the bare distance, the gradient-norm
// regularized form, and the threshold-filtered variant.

namespace dsl::distill {

enum class DistanceMetric { CosineGroupwise, L2 };

DistanceMetric metric_from_string(const std::string& s);
std::string to_string(DistanceMetric m);

struct DistanceResult {
  double value = 0.0;
  int zero_rows = 0;  // rows that contributed the maximal mismatch of 1
};

// cosine-groupwise: sum over class rows of (1 - cos(row_a, row_b)); a
// zero row on either side contributes 1.  l2: Frobenius distance.
DistanceResult matching_distance_detailed(const Eigen::MatrixXd& grad_a,
                                          const Eigen::MatrixXd& grad_b,
                                          DistanceMetric metric);
double matching_distance(const Eigen::MatrixXd& grad_a,
                         const Eigen::MatrixXd& grad_b, DistanceMetric metric);

// dD/d(grad_b) with grad_a held fixed.
Eigen::MatrixXd matching_distance_grad_b(const Eigen::MatrixXd& grad_a,
                                         const Eigen::MatrixXd& grad_b,
                                         DistanceMetric metric);

struct GmLossResult {
  double loss = 0.0;
  double match_term = 0.0;
  double reg_term = 0.0;        // lambda * ||grad_syn||^p
  double grad_norm_syn = 0.0;   // ||grad_syn||_F
  Eigen::MatrixXd syn_feature_grad;  // m_syn x d: dL/dX_syn, exact
};

// L = D(grad(real), grad(syn)) + lambda ||grad(syn)||_2^reg_exponent,
// differentiated exactly through the model-gradient computation with
// respect to the synthetic features.  Batches are per class; the model
// gradient is still the full C x d matrix.
GmLossResult gm_sdc_loss(const ToyModel& model, const Eigen::MatrixXd& X_real,
                         const Eigen::VectorXi& y_real,
                         const Eigen::MatrixXd& X_syn,
                         const Eigen::VectorXi& y_syn, double lambda,
                         int reg_exponent, DistanceMetric metric);

struct GmFilteredResult {
  double value = 0.0;
  int kept_real = 0;
  int used_syn = 0;
};

// Naive thresholded variant: the real batch is reduced to samples whose
// per-sample gradient norm is <= tau, the synthetic batch is resampled
// to the reduced size, and the bare distance is returned.
GmFilteredResult gm_filtered_loss(const ToyModel& model,
                                  const Eigen::MatrixXd& X_real,
                                  const Eigen::VectorXi& y_real,
                                  const Eigen::MatrixXd& X_syn_pool,
                                  const Eigen::VectorXi& y_syn_pool, double tau,
                                  DistanceMetric metric, uint64_t seed);

}  // namespace dsl::distill
