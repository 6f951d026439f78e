#include "dsl/distill/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace dsl::distill {

TrajectoryBank build_expert_bank(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                                 int C, int epochs_per_checkpoint, int checkpoints,
                                 double eta, uint64_t seed) {
  if (epochs_per_checkpoint < 1 || checkpoints < 1)
    throw std::invalid_argument("build_expert_bank: counts must be >= 1");
  ToyModel model = make_model(C, int(X.cols()), seed);
  TrajectoryBank bank;
  bank.epochs_per_checkpoint = epochs_per_checkpoint;
  bank.eta = eta;
  bank.seed = seed;
  bank.checkpoints.push_back(model.W);
  for (int c = 0; c < checkpoints; ++c) {
    for (int e = 0; e < epochs_per_checkpoint; ++e)
      model.W -= eta * loss_and_grad(model, X, y).grad;
    bank.checkpoints.push_back(model.W);
  }
  return bank;
}

TmLossResult tm_sdc_loss(const TrajectoryBank& bank, int t,
                         const Eigen::MatrixXd& X_syn, const Eigen::VectorXi& y_syn,
                         const TmLossOptions& opts) {
  if (opts.N < 0) throw std::invalid_argument("tm_sdc_loss: N must be >= 0");
  if (opts.reg_exponent != 1 && opts.reg_exponent != 2)
    throw std::invalid_argument("tm_sdc_loss: reg_exponent must be 1 or 2");
  if (t < 0 || t + opts.M >= bank.size())
    throw std::out_of_range("tm_sdc_loss: bank exhausted (need t + M within range)");

  const Eigen::MatrixXd& theta_start = bank.checkpoints[t];
  const Eigen::MatrixXd& theta_target = bank.checkpoints[t + opts.M];
  const double denom = (theta_target - theta_start).squaredNorm();
  if (denom <= 0.0)
    throw std::runtime_error("tm_sdc_loss: expert did not move between the "
                             "start and target checkpoints");

  // Forward: unrolled full-batch steps on the synthetic set.
  std::vector<Eigen::MatrixXd> thetas(opts.N + 1);
  std::vector<Eigen::MatrixXd> grads(opts.N);
  std::vector<double> grad_norms(opts.N);
  thetas[0] = theta_start;
  ToyModel work{thetas[0]};
  for (int i = 0; i < opts.N; ++i) {
    work.W = thetas[i];
    const LossGrad lg = loss_and_grad(work, X_syn, y_syn);
    grads[i] = lg.grad;
    grad_norms[i] = lg.grad.norm();
    thetas[i + 1] = thetas[i] - opts.eta * lg.grad;
  }

  TmLossResult out;
  out.match_term = (thetas[opts.N] - theta_target).squaredNorm() / denom;

  // Regularizer: gradient norm of the synthetic set at the final student
  // parameters, or averaged along the inner trajectory.
  const int p = opts.reg_exponent;
  auto powp = [&](double r) { return p == 2 ? r * r : r; };
  Eigen::MatrixXd reg_final_grad;  // grad at theta_N (final-point variant)
  double reg_value = 0.0;
  if (opts.reg_along_trajectory && opts.N > 0) {
    for (int i = 0; i < opts.N; ++i) reg_value += powp(grad_norms[i]);
    reg_value /= double(opts.N);
    out.grad_norm_syn = 0.0;
    for (double g : grad_norms) out.grad_norm_syn += g;
    out.grad_norm_syn /= double(opts.N);
  } else {
    work.W = thetas[opts.N];
    const LossGrad lg = loss_and_grad(work, X_syn, y_syn);
    reg_final_grad = lg.grad;
    out.grad_norm_syn = lg.grad.norm();
    reg_value = powp(out.grad_norm_syn);
  }
  out.reg_term = opts.lambda * reg_value;
  out.loss = (opts.lambda != 0.0) ? out.match_term + out.reg_term : out.match_term;

  // Reverse sweep.
  Eigen::MatrixXd theta_bar = 2.0 * (thetas[opts.N] - theta_target) / denom;
  Eigen::MatrixXd xbar = Eigen::MatrixXd::Zero(X_syn.rows(), X_syn.cols());

  auto reg_cotangent = [&](const Eigen::MatrixXd& g, double norm,
                           double scale) -> Eigen::MatrixXd {
    // d(scale * ||g||^p)/dg
    if (p == 2) return (2.0 * scale) * g;
    if (norm > 0.0) return (scale / norm) * g;
    return Eigen::MatrixXd::Zero(g.rows(), g.cols());
  };

  if (opts.lambda != 0.0 && !(opts.reg_along_trajectory && opts.N > 0)) {
    const Eigen::MatrixXd M = reg_cotangent(reg_final_grad, out.grad_norm_syn,
                                            opts.lambda);
    work.W = thetas[opts.N];
    theta_bar += hvp(work, X_syn, y_syn, M);
    xbar += grad_input_contraction(work, X_syn, y_syn, M);
  }

  for (int i = opts.N - 1; i >= 0; --i) {
    work.W = thetas[i];
    // theta_{i+1} = theta_i - eta * G(theta_i, X)
    xbar += grad_input_contraction(work, X_syn, y_syn, -opts.eta * theta_bar);
    theta_bar -= opts.eta * hvp(work, X_syn, y_syn, theta_bar);
    if (opts.lambda != 0.0 && opts.reg_along_trajectory && opts.N > 0) {
      const Eigen::MatrixXd M =
          reg_cotangent(grads[i], grad_norms[i], opts.lambda / double(opts.N));
      theta_bar += hvp(work, X_syn, y_syn, M);
      xbar += grad_input_contraction(work, X_syn, y_syn, M);
    }
  }

  out.syn_feature_grad = std::move(xbar);
  return out;
}

}  // namespace dsl::distill
