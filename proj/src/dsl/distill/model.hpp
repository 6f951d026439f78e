#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

// Softmax-linear classifier with exact analytic derivatives, including
// the second-order quantities (Hessian-vector products and input
// derivatives of the parameter gradient) that matching losses
// differentiate through.

namespace dsl::distill {

struct ToyModel {
  Eigen::MatrixXd W;  // C x d
  int C() const { return int(W.rows()); }
  int d() const { return int(W.cols()); }
};

ToyModel make_model(int C, int d, uint64_t seed, double init_scale = 0.01);

struct LossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // C x d, gradient of the mean cross-entropy
};

// Row-wise softmax of X W^T (m x C).
Eigen::MatrixXd softmax_rows(const ToyModel& model, const Eigen::MatrixXd& X);

// Mean cross-entropy and its exact gradient (softmax - onehot outer
// products averaged over the batch).
LossGrad loss_and_grad(const ToyModel& model, const Eigen::MatrixXd& X,
                       const Eigen::VectorXi& y);

// ||(p_j - e_{y_j}) x_j^T||_F = ||p_j - e_{y_j}|| * ||x_j|| per sample.
Eigen::VectorXd per_sample_grad_norms(const ToyModel& model,
                                      const Eigen::MatrixXd& X,
                                      const Eigen::VectorXi& y);

double mean_loss(const ToyModel& model, const Eigen::MatrixXd& X,
                 const Eigen::VectorXi& y);
double accuracy(const ToyModel& model, const Eigen::MatrixXd& X,
                const Eigen::VectorXi& y);

// Hessian-vector product of the mean cross-entropy: returns H[V] where
// H = d(grad)/d(W).  Per sample: a = V x, b = p∘a - (p.a) p, H[V] += b x^T/m.
Eigen::MatrixXd hvp(const ToyModel& model, const Eigen::MatrixXd& X,
                    const Eigen::VectorXi& y, const Eigen::MatrixXd& V);

// Contraction of the input-derivative of the batch gradient G with a
// cotangent V:  row j of the result is  sum_{c,k} V_ck dG_ck/dx_j.
// With q = V x_j and s = q∘p_j:
//   (1/m) [ V^T (p_j - e_{y_j}) + W^T s - (1^T s) W^T p_j ].
Eigen::MatrixXd grad_input_contraction(const ToyModel& model,
                                       const Eigen::MatrixXd& X,
                                       const Eigen::VectorXi& y,
                                       const Eigen::MatrixXd& V);

}  // namespace dsl::distill
