#include "advreg/detail/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace advreg::detail {

namespace {

// Solves (A diag(d) A^T) u = rhs; tiny ridge when the normal matrix is
// numerically singular near the end of the iteration.
class NormalSystem {
 public:
  NormalSystem(const Matrix& A, const Vector& d) {
    Matrix normal = A * d.asDiagonal() * A.transpose();
    const double ridge = 1e-15 * std::max(normal.diagonal().maxCoeff(), 1e-300);
    llt_.compute(normal);
    if (llt_.info() != Eigen::Success) {
      normal.diagonal().array() += ridge;
      llt_.compute(normal);
    }
    if (llt_.info() != Eigen::Success) {
      ldlt_.compute(normal);
      use_ldlt_ = true;
    }
  }
  Vector solve(const Vector& rhs) const { return use_ldlt_ ? Vector(ldlt_.solve(rhs)) : Vector(llt_.solve(rhs)); }

 private:
  Eigen::LLT<Matrix> llt_;
  Eigen::LDLT<Matrix> ldlt_;
  bool use_ldlt_ = false;
};

double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

}  // namespace

LinearProgramResult solve_standard_lp(const Matrix& A, const Vector& b, const Vector& c,
                                      double tolerance, long max_iterations) {
  const Index cols = A.cols();
  LinearProgramResult out;

  // Starting point heuristic (Mehrotra).
  Vector x, lambda, s;
  {
    const NormalSystem aat(A, Vector::Ones(cols));
    x = A.transpose() * aat.solve(b);
    lambda = aat.solve(A * c);
    s = c - A.transpose() * lambda;
    const double dx = std::max(-1.5 * x.minCoeff(), 0.0);
    const double ds = std::max(-1.5 * s.minCoeff(), 0.0);
    x.array() += dx;
    s.array() += ds;
    const double xs = x.dot(s);
    const double sum_x = std::max(x.sum(), 1e-300);
    const double sum_s = std::max(s.sum(), 1e-300);
    x.array() += 0.5 * xs / sum_s;
    s.array() += 0.5 * xs / sum_x;
    // Degenerate case (b = 0 and c aligned): keep strictly positive.
    x = x.cwiseMax(1e-8);
    s = s.cwiseMax(1e-8);
  }

  const double b_scale = 1.0 + b.norm();
  const double c_scale = 1.0 + c.norm();
  const double n_cols = static_cast<double>(cols);

  for (long it = 0; it < max_iterations; ++it) {
    const Vector r_b = A * x - b;
    const Vector r_c = A.transpose() * lambda + s - c;
    const double mu = x.dot(s) / n_cols;
    const double primal_obj = c.dot(x);
    const double dual_obj = b.dot(lambda);
    out.primal_infeasibility = r_b.norm() / b_scale;
    out.dual_infeasibility = r_c.norm() / c_scale;
    out.relative_gap = std::abs(primal_obj - dual_obj) / (1.0 + std::abs(primal_obj));
    out.iterations = it;
    if (out.primal_infeasibility <= tolerance && out.dual_infeasibility <= tolerance &&
        out.relative_gap <= tolerance) {
      out.converged = true;
      break;
    }

    const Vector d = x.cwiseQuotient(s);
    const NormalSystem normal(A, d);

    auto solve_direction = [&](const Vector& r_xs, Vector& dx, Vector& dlambda, Vector& ds) {
      // r_xs is the right-hand side of S dx + X ds = r_xs.
      const Vector rhs = -r_b - A * (r_xs.cwiseQuotient(s)) - A * d.cwiseProduct(r_c);
      dlambda = normal.solve(rhs);
      ds = -r_c - A.transpose() * dlambda;
      dx = (r_xs - x.cwiseProduct(ds)).cwiseQuotient(s);
    };

    // Predictor.
    Vector dx_aff, dl_aff, ds_aff;
    const Vector xs_vec = x.cwiseProduct(s);
    solve_direction(-xs_vec, dx_aff, dl_aff, ds_aff);
    const double ap_aff = max_step(x, dx_aff);
    const double ad_aff = max_step(s, ds_aff);
    const double mu_aff = (x + ap_aff * dx_aff).dot(s + ad_aff * ds_aff) / n_cols;
    const double sigma = std::pow(mu_aff / mu, 3);

    // Corrector.
    Vector dx, dl, ds;
    const Vector r_xs = -xs_vec - dx_aff.cwiseProduct(ds_aff) + Vector::Constant(cols, sigma * mu);
    solve_direction(r_xs, dx, dl, ds);

    const double eta = std::max(0.9, 1.0 - 10.0 * mu / (1.0 + std::abs(primal_obj)));
    const double ap = std::min(1.0, eta * max_step(x, dx));
    const double ad = std::min(1.0, eta * max_step(s, ds));
    x += ap * dx;
    lambda += ad * dl;
    s += ad * ds;
    if (!x.allFinite() || !s.allFinite() || !lambda.allFinite()) break;
  }

  out.x = x;
  out.dual = lambda;
  out.slack = s;
  return out;
}

}  // namespace advreg::detail
