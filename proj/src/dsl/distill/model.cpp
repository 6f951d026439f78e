#include "dsl/distill/model.hpp"

#include <cmath>

#include "dsl/sim/rng.hpp"

namespace dsl::distill {

namespace {
void check_batch(const ToyModel& model, const Eigen::MatrixXd& X,
                 const Eigen::VectorXi& y) {
  if (X.rows() == 0) throw std::invalid_argument("empty batch");
  if (X.cols() != model.d()) throw std::invalid_argument("feature dimension mismatch");
  if (y.size() != X.rows()) throw std::invalid_argument("label count mismatch");
  for (int i = 0; i < y.size(); ++i)
    if (y[i] < 0 || y[i] >= model.C())
      throw std::invalid_argument("label out of range");
}
}  // namespace

ToyModel make_model(int C, int d, uint64_t seed, double init_scale) {
  dsl::sim::Rng rng(seed);
  ToyModel m;
  m.W.resize(C, d);
  for (int i = 0; i < C; ++i)
    for (int j = 0; j < d; ++j) m.W(i, j) = init_scale * rng.gaussian();
  return m;
}

Eigen::MatrixXd softmax_rows(const ToyModel& model, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z = X * model.W.transpose();  // m x C
  for (int i = 0; i < Z.rows(); ++i) {
    const double zmax = Z.row(i).maxCoeff();
    Z.row(i) = (Z.row(i).array() - zmax).exp();
    Z.row(i) /= Z.row(i).sum();
  }
  return Z;
}

LossGrad loss_and_grad(const ToyModel& model, const Eigen::MatrixXd& X,
                       const Eigen::VectorXi& y) {
  check_batch(model, X, y);
  const int m = int(X.rows());
  const Eigen::MatrixXd P = softmax_rows(model, X);
  LossGrad out;
  out.grad = Eigen::MatrixXd::Zero(model.C(), model.d());
  double loss = 0.0;
  Eigen::MatrixXd R = P;  // residual p - onehot
  for (int j = 0; j < m; ++j) {
    loss -= std::log(std::max(P(j, y[j]), 1e-300));
    R(j, y[j]) -= 1.0;
  }
  out.loss = loss / m;
  out.grad = (R.transpose() * X) / double(m);
  return out;
}

Eigen::VectorXd per_sample_grad_norms(const ToyModel& model,
                                      const Eigen::MatrixXd& X,
                                      const Eigen::VectorXi& y) {
  check_batch(model, X, y);
  const Eigen::MatrixXd P = softmax_rows(model, X);
  Eigen::VectorXd out(X.rows());
  for (int j = 0; j < X.rows(); ++j) {
    Eigen::VectorXd r = P.row(j).transpose();
    r[y[j]] -= 1.0;
    out[j] = r.norm() * X.row(j).norm();
  }
  return out;
}

double mean_loss(const ToyModel& model, const Eigen::MatrixXd& X,
                 const Eigen::VectorXi& y) {
  check_batch(model, X, y);
  const Eigen::MatrixXd P = softmax_rows(model, X);
  double loss = 0.0;
  for (int j = 0; j < X.rows(); ++j)
    loss -= std::log(std::max(P(j, y[j]), 1e-300));
  return loss / double(X.rows());
}

double accuracy(const ToyModel& model, const Eigen::MatrixXd& X,
                const Eigen::VectorXi& y) {
  check_batch(model, X, y);
  const Eigen::MatrixXd Z = X * model.W.transpose();
  int hits = 0;
  for (int j = 0; j < X.rows(); ++j) {
    int arg = 0;
    Z.row(j).maxCoeff(&arg);
    if (arg == y[j]) ++hits;
  }
  return double(hits) / double(X.rows());
}

Eigen::MatrixXd hvp(const ToyModel& model, const Eigen::MatrixXd& X,
                    const Eigen::VectorXi& y, const Eigen::MatrixXd& V) {
  check_batch(model, X, y);
  const int m = int(X.rows());
  const Eigen::MatrixXd P = softmax_rows(model, X);
  const Eigen::MatrixXd A = X * V.transpose();  // m x C, rows a_j = V x_j
  Eigen::MatrixXd B(m, model.C());
  for (int j = 0; j < m; ++j) {
    const double pa = P.row(j).dot(A.row(j));
    B.row(j) = P.row(j).cwiseProduct(A.row(j)) - pa * P.row(j);
  }
  return (B.transpose() * X) / double(m);
}

Eigen::MatrixXd grad_input_contraction(const ToyModel& model,
                                       const Eigen::MatrixXd& X,
                                       const Eigen::VectorXi& y,
                                       const Eigen::MatrixXd& V) {
  check_batch(model, X, y);
  const int m = int(X.rows());
  const Eigen::MatrixXd P = softmax_rows(model, X);
  const Eigen::MatrixXd Q = X * V.transpose();  // rows q_j = V x_j
  Eigen::MatrixXd out(m, model.d());
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd r = P.row(j).transpose();
    r[y[j]] -= 1.0;
    const Eigen::VectorXd s = Q.row(j).transpose().cwiseProduct(P.row(j).transpose());
    const double ssum = s.sum();
    out.row(j) = (V.transpose() * r + model.W.transpose() * s -
                  ssum * (model.W.transpose() * P.row(j).transpose()))
                     .transpose();
  }
  return out / double(m);
}

}  // namespace dsl::distill
