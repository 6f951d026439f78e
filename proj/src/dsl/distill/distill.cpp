#include "dsl/distill/distill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dsl/sim/rng.hpp"

namespace dsl::distill {

using dsl::sim::derive_seed;
using dsl::sim::Rng;

Dataset make_blobs2(int n_per_class, int d, double sep, uint64_t seed) {
  if (d < 1 || n_per_class < 1) throw std::invalid_argument("make_blobs2: bad sizes");
  Rng rng(seed);
  Dataset ds;
  ds.C = 2;
  ds.d = d;
  ds.X.resize(2 * n_per_class, d);
  ds.y.resize(2 * n_per_class);
  for (int c = 0; c < 2; ++c) {
    const double mu = (c == 0 ? 0.5 : -0.5) * sep;
    for (int i = 0; i < n_per_class; ++i) {
      const int r = c * n_per_class + i;
      for (int j = 0; j < d; ++j) ds.X(r, j) = rng.gaussian();
      ds.X(r, 0) += mu;
      ds.y[r] = c;
    }
  }
  return ds;
}

Dataset make_xor4(int n_per_class, int d, double scale, uint64_t seed) {
  if (d < 2 || n_per_class < 1) throw std::invalid_argument("make_xor4: bad sizes");
  Rng rng(seed);
  Dataset ds;
  ds.C = 4;
  ds.d = d;
  ds.X.resize(4 * n_per_class, d);
  ds.y.resize(4 * n_per_class);
  const double cx[4] = {1.0, 1.0, -1.0, -1.0};
  const double cy[4] = {1.0, -1.0, 1.0, -1.0};
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < n_per_class; ++i) {
      const int r = c * n_per_class + i;
      // 25% of each class sits on the antipodal corner.
      const bool flip = rng.uniform01() < 0.25;
      const double sgn = flip ? -1.0 : 1.0;
      for (int j = 0; j < d; ++j) ds.X(r, j) = rng.gaussian();
      ds.X(r, 0) += sgn * scale * cx[c];
      ds.X(r, 1) += sgn * scale * cy[c];
      ds.y[r] = c;
    }
  }
  return ds;
}

Eigen::MatrixXd SyntheticSet::stacked() const {
  Eigen::MatrixXd X(ipc * C, d);
  for (int c = 0; c < C; ++c) X.middleRows(c * ipc, ipc) = features[c];
  return X;
}

Eigen::VectorXi SyntheticSet::stacked_labels() const {
  Eigen::VectorXi y(ipc * C);
  for (int c = 0; c < C; ++c) y.segment(c * ipc, ipc).setConstant(c);
  return y;
}

namespace {

std::vector<std::vector<int>> indices_by_class(const Dataset& ds) {
  std::vector<std::vector<int>> by(ds.C);
  for (int i = 0; i < ds.y.size(); ++i) by[ds.y[i]].push_back(i);
  return by;
}

SyntheticSet init_synthetic(const Dataset& real, const MatchConfig& cfg,
                            uint64_t seed) {
  SyntheticSet syn;
  syn.ipc = cfg.ipc;
  syn.C = real.C;
  syn.d = real.d;
  syn.features.assign(real.C, Eigen::MatrixXd(cfg.ipc, real.d));
  Rng rng(seed);
  const auto by = indices_by_class(real);
  for (int c = 0; c < real.C; ++c) {
    if (cfg.init == SynInit::FromReal) {
      if (int(by[c].size()) < cfg.ipc)
        throw std::invalid_argument("init_synthetic: class has fewer than ipc samples");
      std::vector<int> pool = by[c];
      for (size_t i = pool.size() - 1; i > 0; --i)
        std::swap(pool[i], pool[rng.below(uint64_t(i) + 1)]);
      for (int i = 0; i < cfg.ipc; ++i)
        syn.features[c].row(i) = real.X.row(pool[i]);
    } else {
      for (int i = 0; i < cfg.ipc; ++i)
        for (int j = 0; j < real.d; ++j) syn.features[c](i, j) = rng.gaussian();
    }
  }
  return syn;
}

// Draw `count` class-c rows without replacement (falls back to the whole
// class when it is smaller than the batch).
void sample_class_batch(const Dataset& real, const std::vector<int>& class_rows,
                        int count, Rng& rng, Eigen::MatrixXd& X,
                        Eigen::VectorXi& y, int label) {
  const int n = int(class_rows.size());
  const int k = std::min(count, n);
  std::vector<int> pool = class_rows;
  for (int i = n - 1; i > 0 && i >= n - k; --i)
    std::swap(pool[i], pool[rng.below(uint64_t(i) + 1)]);
  X.resize(k, real.d);
  y.resize(k);
  for (int i = 0; i < k; ++i) {
    X.row(i) = real.X.row(pool[n - 1 - i]);
    y[i] = label;
  }
}

}  // namespace

double evaluate_synthetic(const SyntheticSet& syn, const Dataset& eval_set,
                          int train_steps, double eta, uint64_t seed) {
  ToyModel model = make_model(syn.C, syn.d, seed);
  const Eigen::MatrixXd X = syn.stacked();
  const Eigen::VectorXi y = syn.stacked_labels();
  for (int s = 0; s < train_steps; ++s)
    model.W -= eta * loss_and_grad(model, X, y).grad;
  return accuracy(model, eval_set.X, eval_set.y);
}

DistillResult distill_gm(const Dataset& real, const MatchConfig& cfg,
                         uint64_t seed, const Dataset* eval_set) {
  const auto by = indices_by_class(real);
  for (int c = 0; c < real.C; ++c)
    if (int(by[c].size()) < cfg.batch_real)
      throw std::invalid_argument("distill_gm: class " + std::to_string(c) +
                                  " has fewer than batch_real samples");

  DistillResult out;
  out.synthetic = init_synthetic(real, cfg, derive_seed(seed, 100));

  for (long step = 0; step < cfg.steps; ++step) {
    const double lambda = lambda_at(cfg.lambda_schedule, step);
    ToyModel model = make_model(real.C, real.d, derive_seed(seed, 101, step));
    double match_sum = 0.0, reg_sum = 0.0, gnorm_sum = 0.0;
    int evals = 0;
    for (int t = 0; t < cfg.T; ++t) {
      for (int c = 0; c < real.C; ++c) {
        Rng rng(derive_seed(seed, 102, (step * cfg.T + t) * real.C + c));
        Eigen::MatrixXd Xr;
        Eigen::VectorXi yr;
        sample_class_batch(real, by[c], cfg.batch_real, rng, Xr, yr, c);

        const Eigen::MatrixXd& Xs = out.synthetic.features[c];
        Eigen::VectorXi ys = Eigen::VectorXi::Constant(Xs.rows(), c);
        const GmLossResult gm = gm_sdc_loss(model, Xr, yr, Xs, ys, lambda,
                                            cfg.reg_exponent, cfg.distance_metric);
        out.synthetic.features[c] -= cfg.eta_syn * gm.syn_feature_grad;
        match_sum += gm.match_term;
        const double gn = gm.grad_norm_syn;
        reg_sum += (cfg.reg_exponent == 2) ? gn * gn : gn;
        gnorm_sum += gn;
        ++evals;
      }
      // Model update on the classification loss of the synthetic set.
      model.W -= cfg.eta_model * loss_and_grad(model, out.synthetic.stacked(),
                                               out.synthetic.stacked_labels())
                                     .grad;
    }

    TraceRow row;
    row.step = step;
    row.lambda = lambda;
    row.matching_loss = match_sum / std::max(1, evals);
    row.reg_value = reg_sum / std::max(1, evals);
    row.grad_norm_syn = gnorm_sum / std::max(1, evals);
    row.test_accuracy =
        (eval_set && (step % std::max(1, cfg.eval_every)) == 0)
            ? evaluate_synthetic(out.synthetic, *eval_set, cfg.eval_train_steps,
                                 cfg.eval_eta, derive_seed(seed, 103, step))
            : std::numeric_limits<double>::quiet_NaN();
    out.trace.rows.push_back(row);
  }
  out.final_accuracy =
      eval_set ? evaluate_synthetic(out.synthetic, *eval_set, cfg.eval_train_steps,
                                    cfg.eval_eta, derive_seed(seed, 104))
               : 0.0;
  return out;
}

DistillResult distill_tm(const TrajectoryBank& bank, const Dataset& real,
                         const MatchConfig& cfg, uint64_t seed,
                         const Dataset* eval_set) {
  if (bank.size() <= cfg.M)
    throw std::invalid_argument("distill_tm: bank shorter than M");
  if (cfg.N >= cfg.M)
    throw std::invalid_argument("distill_tm: requires N < M");
  int max_start = cfg.max_start_epoch >= 0 ? cfg.max_start_epoch
                                           : bank.size() - cfg.M - 1;
  max_start = std::min(max_start, bank.size() - cfg.M - 1);
  if (max_start < 0) throw std::invalid_argument("distill_tm: no valid start epoch");

  DistillResult out;
  out.synthetic = init_synthetic(real, cfg, derive_seed(seed, 200));

  TmLossOptions topt;
  topt.M = cfg.M;
  topt.N = cfg.N;
  topt.eta = cfg.eta_model;
  topt.reg_exponent = cfg.reg_exponent;
  topt.reg_along_trajectory = cfg.reg_along_trajectory;

  for (long step = 0; step < cfg.steps; ++step) {
    topt.lambda = lambda_at(cfg.lambda_schedule, step);
    Rng rng(derive_seed(seed, 201, step));
    const int t = int(rng.below(uint64_t(max_start) + 1));

    const Eigen::MatrixXd Xs = out.synthetic.stacked();
    const Eigen::VectorXi ys = out.synthetic.stacked_labels();
    const TmLossResult tm = tm_sdc_loss(bank, t, Xs, ys, topt);
    for (int c = 0; c < out.synthetic.C; ++c)
      out.synthetic.features[c] -=
          cfg.eta_syn * tm.syn_feature_grad.middleRows(c * cfg.ipc, cfg.ipc);

    TraceRow row;
    row.step = step;
    row.lambda = topt.lambda;
    row.matching_loss = tm.match_term;
    const double gn = tm.grad_norm_syn;
    row.reg_value = (cfg.reg_exponent == 2) ? gn * gn : gn;
    row.grad_norm_syn = gn;
    row.test_accuracy =
        (eval_set && (step % std::max(1, cfg.eval_every)) == 0)
            ? evaluate_synthetic(out.synthetic, *eval_set, cfg.eval_train_steps,
                                 cfg.eval_eta, derive_seed(seed, 202, step))
            : std::numeric_limits<double>::quiet_NaN();
    out.trace.rows.push_back(row);
  }
  out.final_accuracy =
      eval_set ? evaluate_synthetic(out.synthetic, *eval_set, cfg.eval_train_steps,
                                    cfg.eval_eta, derive_seed(seed, 203))
               : 0.0;
  return out;
}

}  // namespace dsl::distill
