#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

// Test-only reference implementations, independent of the code under
// test: a hard-margin QP solved by support-subset enumeration and
// central-difference helpers for gradient checks.

namespace dsl::testing {

// Enumerates candidate support subsets (size <= d), solves the
// equality-constrained KKT system on each, and keeps the feasible
// candidate of minimal norm.  Returns the optimal margin kappa of the
// unit-norm separator, or nullopt if no feasible candidate exists.
inline std::optional<double> qp_max_margin_kappa(const Eigen::MatrixXd& X,
                                                 const Eigen::VectorXi& y) {
  const int n = int(X.rows());
  const int d = int(X.cols());
  Eigen::MatrixXd Z = X;
  for (int i = 0; i < n; ++i) Z.row(i) *= double(y[i]);
  const Eigen::MatrixXd G = Z * Z.transpose();

  double best_wsq = std::numeric_limits<double>::infinity();
  std::vector<int> subset;
  std::function<void(int)> recurse = [&](int start) {
    if (!subset.empty()) {
      const int k = int(subset.size());
      Eigen::MatrixXd Gs(k, k);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) Gs(r, c) = G(subset[r], subset[c]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Gs);
      if (lu.isInvertible()) {
        const Eigen::VectorXd a = lu.solve(Eigen::VectorXd::Ones(k));
        if ((a.array() >= -1e-12).all()) {
          Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
          for (int r = 0; r < k; ++r) w += a[r] * Z.row(subset[r]).transpose();
          const Eigen::VectorXd margins = Z * w;
          if ((margins.array() >= 1.0 - 1e-9).all())
            best_wsq = std::min(best_wsq, w.squaredNorm());
        }
      }
    }
    if (int(subset.size()) >= std::min(n, d)) return;
    for (int i = start; i < n; ++i) {
      subset.push_back(i);
      recurse(i + 1);
      subset.pop_back();
    }
  };
  recurse(0);
  if (!std::isfinite(best_wsq)) return std::nullopt;
  return 1.0 / std::sqrt(best_wsq);
}

// Central finite difference of a scalar function with respect to one
// entry of a matrix argument.
inline double central_diff(const std::function<double(const Eigen::MatrixXd&)>& f,
                           Eigen::MatrixXd X, int r, int c, double h) {
  X(r, c) += h;
  const double fp = f(X);
  X(r, c) -= 2.0 * h;
  const double fm = f(X);
  return (fp - fm) / (2.0 * h);
}

// Max relative error between an analytic gradient and central
// differences over every entry of X.
inline double max_rel_grad_error(const std::function<double(const Eigen::MatrixXd&)>& f,
                                 const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& analytic, double h) {
  double worst = 0.0;
  const double scale = std::max(1e-8, analytic.norm());
  for (int r = 0; r < X.rows(); ++r)
    for (int c = 0; c < X.cols(); ++c) {
      const double fd = central_diff(f, X, r, c, h);
      const double err = std::fabs(fd - analytic(r, c)) /
                         std::max(std::fabs(fd) + std::fabs(analytic(r, c)), 0.05 * scale);
      worst = std::max(worst, err);
    }
  return worst;
}

}  // namespace dsl::testing
