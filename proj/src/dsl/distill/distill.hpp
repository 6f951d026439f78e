#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "dsl/distill/matching.hpp"
#include "dsl/distill/model.hpp"
#include "dsl/distill/schedule.hpp"
#include "dsl/distill/trajectory.hpp"

// Desk-scale distillation loops: gradient matching and trajectory
// matching over learnable per-class feature vectors, with or without the
// gradient-norm regularizer.

namespace dsl::distill {

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXi y;
  int C = 0;
  int d = 0;
};

// Two Gaussian blobs at +-(sep/2) e1; mildly overlapping by default.
Dataset make_blobs2(int n_per_class, int d, double sep, uint64_t seed);

// Four classes on the corners of the (e1, e2) square, each contaminated
// by a 25% share from its antipodal corner, so no linear softmax
// separates them fully.
Dataset make_xor4(int n_per_class, int d, double scale, uint64_t seed);

struct SyntheticSet {
  std::vector<Eigen::MatrixXd> features;  // per class: ipc x d
  int ipc = 0;
  int C = 0;
  int d = 0;
  Eigen::MatrixXd stacked() const;
  Eigen::VectorXi stacked_labels() const;
};

enum class SynInit { FromReal, GaussianNoise };

struct MatchConfig {
  double lambda0 = 0.002;
  LambdaSchedule lambda_schedule = LambdaSchedule::constant(0.002);
  int reg_exponent = 2;
  DistanceMetric distance_metric = DistanceMetric::CosineGroupwise;
  int steps = 200;        // outer distillation steps
  int T = 4;              // model updates per initialization (GM)
  int M = 2;              // expert checkpoints ahead (TM target)
  int N = 1;              // student steps per segment (TM), N < M
  int max_start_epoch = -1;  // TM start-epoch cap; -1 = size - M - 1
  double eta_model = 0.25;
  double eta_syn = 0.1;
  int batch_real = 32;
  int batch_syn = 0;      // 0 = full synthetic class slab
  std::optional<double> tau;  // naive filtered variant threshold
  int ipc = 2;
  SynInit init = SynInit::FromReal;
  bool reg_along_trajectory = false;
  int eval_every = 1;
  int eval_train_steps = 200;
  double eval_eta = 0.5;
};

struct TraceRow {
  long step = 0;
  double lambda = 0.0;
  double matching_loss = 0.0;
  double reg_value = 0.0;       // ||grad_syn||^reg_exponent, observed
  double grad_norm_syn = 0.0;
  double test_accuracy = 0.0;
};

struct DistillTrace {
  std::vector<TraceRow> rows;
};

struct DistillResult {
  SyntheticSet synthetic;
  DistillTrace trace;
  double final_accuracy = 0.0;
};

// Algorithm loop: (outer step -> fresh model -> T model updates, with a
// per-class synthetic update against gm_sdc_loss before each model
// update).  lambda follows the schedule indexed by outer step.
DistillResult distill_gm(const Dataset& real, const MatchConfig& config,
                         uint64_t seed, const Dataset* eval_set = nullptr);

// Algorithm loop: (outer step -> random start epoch -> student unroll ->
// tm_sdc_loss -> synthetic update).
DistillResult distill_tm(const TrajectoryBank& bank, const Dataset& real,
                         const MatchConfig& config, uint64_t seed,
                         const Dataset* eval_set = nullptr);

// Accuracy of a freshly trained (seeded, fixed budget) model on the
// evaluation set after training on the synthetic set only.
double evaluate_synthetic(const SyntheticSet& syn, const Dataset& eval_set,
                          int train_steps, double eta, uint64_t seed);

}  // namespace dsl::distill
