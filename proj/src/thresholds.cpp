#include "advreg/thresholds.hpp"

#include <cmath>
#include <limits>

namespace advreg {

namespace {
constexpr double kRankThreshold = 1e-10;
}

double gamma_min(const Matrix& M, double zero_tol) {
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = 0; i < M.rows(); ++i) {
      const double a = std::abs(M(i, j));
      if (a > zero_tol && a < best) best = a;
    }
  if (!std::isfinite(best)) throw InvalidArgumentError("matrix has no nonzero entry");
  return best;
}

Index numerical_rank(const Matrix& M) {
  if (M.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(M);
  qr.setThreshold(kRankThreshold);
  return qr.rank();
}

void require_full_row_rank(const Matrix& X) {
  const Index r = numerical_rank(X);
  if (r < X.rows()) {
    throw RankDeficientError("X must have full row rank (rank " + std::to_string(r) +
                             " < n = " + std::to_string(X.rows()) + ")");
  }
}

Matrix row_space_basis(const Matrix& X) {
  require_full_row_rank(X);
  const Index n = X.rows();
  const Index m = X.cols();
  Eigen::HouseholderQR<Matrix> qr(X.transpose());
  Matrix thin = qr.householderQ() * Matrix::Identity(m, n);
  Matrix Q = thin.transpose();
  for (Index k = 0; k < n; ++k) {
    const double row_scale = Q.row(k).cwiseAbs().maxCoeff();
    for (Index j = 0; j < m; ++j) {
      if (std::abs(Q(k, j)) > 1e-12 * row_scale) {
        if (Q(k, j) < 0) Q.row(k) *= -1.0;
        break;
      }
    }
  }
  return Q;
}

ThresholdReport interpolation_thresholds(const Dataset& data) {
  ThresholdReport report;
  report.Q = row_space_basis(data.X());
  report.gamma_min_X = gamma_min(data.X());
  report.gamma_min_XQt = gamma_min(data.X() * report.Q.transpose());
  return report;
}

}  // namespace advreg
