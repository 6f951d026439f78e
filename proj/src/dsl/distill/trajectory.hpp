#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dsl/distill/model.hpp"

// Expert trajectory banks and the trajectory-matching loss with its
// exact gradient through the unrolled inner optimization.

namespace dsl::distill {

struct TrajectoryBank {
  std::vector<Eigen::MatrixXd> checkpoints;  // theta_0 .. theta_T (C x d)
  int epochs_per_checkpoint = 1;  // full-batch steps between snapshots
  double eta = 0.1;
  uint64_t seed = 0;
  int size() const { return int(checkpoints.size()); }
};

// Trains the toy model on real data by full-batch gradient descent (one
// "epoch" = one full-batch step at this scale), snapshotting every
// epochs_per_checkpoint steps.  The bank holds the initialization plus
// `checkpoints` snapshots.
TrajectoryBank build_expert_bank(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                                 int C, int epochs_per_checkpoint, int checkpoints,
                                 double eta, uint64_t seed);

struct TmLossOptions {
  int M = 2;              // checkpoints ahead for the target parameters
  int N = 1;              // inner student steps
  double eta = 0.1;       // inner-step learning rate
  double lambda = 0.0;
  int reg_exponent = 2;
  bool reg_along_trajectory = false;  // average ||grad||^p over the inner
                                      // steps instead of evaluating at the
                                      // final student parameters
};

struct TmLossResult {
  double loss = 0.0;
  double match_term = 0.0;
  double reg_term = 0.0;
  double grad_norm_syn = 0.0;  // the regularized gradient-norm quantity
  Eigen::MatrixXd syn_feature_grad;  // n_syn x d, exact through the unroll
};

// Student starts at checkpoints[t], runs N full-batch steps on the
// synthetic set, and is scored by
//   ||theta_{t+N}^syn - theta_{t+M}^real||^2 / ||theta_{t+M}^real - theta_t^real||^2
//   + lambda ||grad_{D_syn}||^reg_exponent .
// The synthetic-feature gradient backpropagates exactly through the
// unrolled steps (Hessian-vector products plus input derivatives).
TmLossResult tm_sdc_loss(const TrajectoryBank& bank, int t,
                         const Eigen::MatrixXd& X_syn, const Eigen::VectorXi& y_syn,
                         const TmLossOptions& opts);

}  // namespace dsl::distill
