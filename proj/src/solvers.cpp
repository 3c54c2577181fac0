#include "advreg/solvers.hpp"

#include "advreg/detail/barrier.hpp"
#include "advreg/detail/linprog.hpp"
#include "advreg/objective.hpp"
#include "advreg/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace advreg {

using detail::ConeConstraint;
using detail::ConeProgram;

namespace {

constexpr double kTiny = 1e-300;

void require_warm(const WarmStart& warm, const Dataset& data) {
  if (warm && warm->size() != data.m()) {
    throw DimensionError("warm start has length " + std::to_string(warm->size()) +
                         " but X has " + std::to_string(data.m()) + " columns");
  }
}

Vector initial_beta(const WarmStart& warm, const Dataset& data) {
  require_warm(warm, data);
  return warm ? *warm : Vector::Zero(data.m());
}

detail::BarrierOptions barrier_options(const SolverConfig& config) {
  detail::BarrierOptions opts;
  opts.initial_gap = config.smoothing.initial;
  opts.gap_decay = config.smoothing.decay;
  opts.final_gap = config.smoothing.final;
  opts.max_newton_steps = config.max_iterations;
  return opts;
}

// Rough magnitude of a coefficient, used to size the initial slacks.
double coefficient_scale(const Dataset& data) {
  const double x_max = data.X().cwiseAbs().maxCoeff();
  const double y_max = data.y().cwiseAbs().maxCoeff();
  return std::max(y_max / std::max(x_max, kTiny), 1e-12);
}

ConeConstraint abs_cone(Index upper, Index value) {
  ConeConstraint cone;
  cone.idx = {upper, value};
  cone.M = Matrix::Identity(2, 2);
  cone.offset = Vector::Zero(2);
  return cone;
}

// e_i >= |y_i - x_i^T beta| with beta stored at [0, m).
ConeConstraint residual_cone(const Dataset& data, Index i, Index e_index) {
  const Index m = data.m();
  ConeConstraint cone;
  cone.idx.reserve(static_cast<std::size_t>(m + 1));
  cone.idx.push_back(e_index);
  for (Index j = 0; j < m; ++j) cone.idx.push_back(j);
  cone.M = Matrix::Zero(2, m + 1);
  cone.M(0, 0) = 1.0;
  cone.M.block(1, 1, 1, m) = -data.X().row(i);
  cone.offset = Vector::Zero(2);
  cone.offset(1) = data.y()(i);
  return cone;
}

Vector min_norm_least_squares(const Matrix& X, const Vector& y) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
  return cod.solve(y);
}

FitResult least_squares_fit(const Dataset& data, const std::string& tag) {
  FitResult result;
  result.method_tag = tag;
  result.beta = min_norm_least_squares(data.X(), data.y());
  const Vector r = data.y() - data.X() * result.beta;
  result.objective = r.squaredNorm() / static_cast<double>(data.n());
  const double scale = data.X().norm() * std::max(data.y().norm(), kTiny);
  result.optimality_residual = (data.X().transpose() * r).norm() / scale;
  result.iterations = 1;
  result.converged = true;
  return result;
}

double soft_threshold(double v, double k) {
  if (v > k) return v - k;
  if (v < -k) return v + k;
  return 0.0;
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::adversarial: return "adv";
    case EstimatorKind::lasso: return "lasso";
    case EstimatorKind::ridge: return "ridge";
    case EstimatorKind::sqrt_lasso: return "sqrt-lasso";
    case EstimatorKind::ols: return "ols";
    case EstimatorKind::min_l1_interp: return "min-l1";
    case EstimatorKind::min_l2_interp: return "min-l2";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& text) {
  if (text == "adv" || text == "adversarial") return EstimatorKind::adversarial;
  if (text == "lasso") return EstimatorKind::lasso;
  if (text == "ridge") return EstimatorKind::ridge;
  if (text == "sqrt-lasso" || text == "sqrt_lasso") return EstimatorKind::sqrt_lasso;
  if (text == "ols") return EstimatorKind::ols;
  if (text == "min-l1" || text == "min_l1_interp") return EstimatorKind::min_l1_interp;
  if (text == "min-l2" || text == "min_l2_interp") return EstimatorKind::min_l2_interp;
  throw InvalidArgumentError("unknown estimator '" + text + "'");
}

void EstimatorSpec::validate() const {
  config.validate();
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw InvalidArgumentError("regularization strength must be finite and nonnegative");
  }
  if (kind == EstimatorKind::adversarial && !budget) {
    throw InvalidArgumentError("adversarial estimator needs an attack budget");
  }
}

Index count_nonzero(const Vector& beta, double tol) {
  return static_cast<Index>((beta.array().abs() > tol).count());
}

double adversarial_zero_threshold(const Dataset& data, NormOrder p) {
  const double y1 = data.y().lpNorm<1>();
  if (y1 == 0.0) return 0.0;
  const Vector xty = data.X().transpose() * data.y();
  return (p == NormOrder::Linf ? xty.lpNorm<Eigen::Infinity>() : xty.norm()) / y1;
}

double lasso_zero_threshold(const Dataset& data) {
  return 2.0 / static_cast<double>(data.n()) *
         (data.X().transpose() * data.y()).lpNorm<Eigen::Infinity>();
}

double sqrt_lasso_zero_threshold(const Dataset& data) {
  const double y2 = data.y().norm();
  if (y2 == 0.0) return 0.0;
  return (data.X().transpose() * data.y()).lpNorm<Eigen::Infinity>() / y2;
}

FitResult fit_adversarial(const Dataset& data, const AttackBudget& budget,
                          const SolverConfig& config, const WarmStart& warm) {
  config.validate();
  require_warm(warm, data);
  const double delta = budget.delta();
  const std::string tag = "adv-" + to_string(budget.p());
  if (delta == 0.0) {
    FitResult ls = least_squares_fit(data, tag);
    const auto st = adv_risk_stationarity(ls.beta, data, budget, default_activity(ls.beta, data));
    ls.optimality_residual = st.relative();
    ls.converged = ls.optimality_residual <= config.tolerance;
    return ls;
  }

  const Index n = data.n();
  const Index m = data.m();
  FitResult result;
  result.method_tag = tag;

  // Zero is optimal exactly when the subdifferential at the origin contains 0.
  if (delta >= adversarial_zero_threshold(data, budget.p())) {
    result.beta = Vector::Zero(m);
    result.objective = adv_risk(result.beta, data, budget);
    const auto st = adv_risk_stationarity(result.beta, data, budget,
                                          default_activity(result.beta, data));
    result.optimality_residual = st.relative();
    result.converged = result.optimality_residual <= config.tolerance;
    return result;
  }

  const Vector beta0 = initial_beta(warm, data);
  const double rho_beta = 0.1 * coefficient_scale(data) + 0.1 * beta0.cwiseAbs().maxCoeff();
  const double rho_res = 0.1 * std::max(data.y().cwiseAbs().maxCoeff(), 1e-12);
  const Vector r0 = data.y() - data.X() * beta0;

  ConeProgram program;
  Vector z0;
  Index e_base = 0;
  Index w_index = 0;
  if (budget.p() == NormOrder::Linf) {
    // z = [beta (m), u (m), e (n), w]; u_j >= |beta_j|, e_i >= |r_i|,
    // w >= || e + delta * sum(u) ||.
    const Index u_base = m;
    e_base = 2 * m;
    w_index = 2 * m + n;
    program.num_vars = 2 * m + n + 1;
    for (Index j = 0; j < m; ++j) program.cones.push_back(abs_cone(u_base + j, j));
    for (Index i = 0; i < n; ++i) program.cones.push_back(residual_cone(data, i, e_base + i));
    ConeConstraint outer;
    outer.idx.push_back(w_index);
    for (Index i = 0; i < n; ++i) outer.idx.push_back(e_base + i);
    for (Index j = 0; j < m; ++j) outer.idx.push_back(u_base + j);
    outer.M = Matrix::Zero(n + 1, 1 + n + m);
    outer.M(0, 0) = 1.0;
    for (Index i = 0; i < n; ++i) {
      outer.M(1 + i, 1 + i) = 1.0;
      outer.M.block(1 + i, 1 + n, 1, m).setConstant(delta);
    }
    outer.offset = Vector::Zero(n + 1);
    program.cones.push_back(std::move(outer));

    z0.resize(program.num_vars);
    z0.head(m) = beta0;
    z0.segment(u_base, m) = beta0.cwiseAbs().array() + rho_beta;
    z0.segment(e_base, n) = r0.cwiseAbs().array() + rho_res;
    const double S = z0.segment(u_base, m).sum();
    z0(w_index) = (z0.segment(e_base, n).array() + delta * S).matrix().norm() * 1.1 + rho_res;
  } else {
    // z = [beta (m), s, e (n), w]; s >= ||beta||_2, e_i >= |r_i|,
    // w >= || e + delta * s ||.
    const Index s_index = m;
    e_base = m + 1;
    w_index = m + 1 + n;
    program.num_vars = m + n + 2;
    ConeConstraint norm_cone;
    norm_cone.idx.push_back(s_index);
    for (Index j = 0; j < m; ++j) norm_cone.idx.push_back(j);
    norm_cone.M = Matrix::Identity(m + 1, m + 1);
    norm_cone.offset = Vector::Zero(m + 1);
    program.cones.push_back(std::move(norm_cone));
    for (Index i = 0; i < n; ++i) program.cones.push_back(residual_cone(data, i, e_base + i));
    ConeConstraint outer;
    outer.idx.push_back(w_index);
    for (Index i = 0; i < n; ++i) outer.idx.push_back(e_base + i);
    outer.idx.push_back(s_index);
    outer.M = Matrix::Zero(n + 1, n + 2);
    outer.M(0, 0) = 1.0;
    for (Index i = 0; i < n; ++i) {
      outer.M(1 + i, 1 + i) = 1.0;
      outer.M(1 + i, n + 1) = delta;
    }
    outer.offset = Vector::Zero(n + 1);
    program.cones.push_back(std::move(outer));

    z0.resize(program.num_vars);
    z0.head(m) = beta0;
    z0(s_index) = beta0.norm() + rho_beta;
    z0.segment(e_base, n) = r0.cwiseAbs().array() + rho_res;
    z0(w_index) = (z0.segment(e_base, n).array() + delta * z0(s_index)).matrix().norm() * 1.1 +
                  rho_res;
  }
  program.cost = Vector::Zero(program.num_vars);
  program.cost(w_index) = 1.0;

  const auto solved = detail::solve_cone_program(program, z0, barrier_options(config));
  result.beta = solved.z.head(m);
  result.iterations = solved.newton_steps;
  result.objective = adv_risk(result.beta, data, budget);

  // Multipliers implied by the lifted variables.
  SubgradientHint hint;
  const Vector r = data.y() - data.X() * result.beta;
  hint.residual_signs = r.cwiseQuotient(solved.z.segment(e_base, n).cwiseMax(kTiny));
  if (budget.p() == NormOrder::Linf) {
    hint.norm_direction = result.beta.cwiseQuotient(solved.z.segment(m, m).cwiseMax(kTiny));
  } else {
    hint.norm_direction = result.beta / std::max(solved.z(m), kTiny);
  }
  const auto st = adv_risk_stationarity(result.beta, data, budget,
                                        default_activity(result.beta, data), hint);
  result.optimality_residual = st.relative();
  result.converged = solved.converged && result.optimality_residual <= config.tolerance;
  return result;
}

FitResult fit_sqrt_lasso(const Dataset& data, double delta, const SolverConfig& config,
                         const WarmStart& warm) {
  config.validate();
  require_warm(warm, data);
  if (!(delta >= 0.0)) throw InvalidArgumentError("delta must be nonnegative");
  if (delta == 0.0) {
    FitResult ls = least_squares_fit(data, "sqrt-lasso");
    ls.objective = (data.y() - data.X() * ls.beta).norm();
    return ls;
  }
  const Index n = data.n();
  const Index m = data.m();
  FitResult result;
  result.method_tag = "sqrt-lasso";

  if (delta >= sqrt_lasso_zero_threshold(data)) {
    result.beta = Vector::Zero(m);
    result.objective = robust_risk_featurewise(result.beta, data, delta);
    const auto st = sqrt_lasso_stationarity(result.beta, data, delta,
                                            default_activity(result.beta, data));
    result.optimality_residual = st.relative();
    result.converged = result.optimality_residual <= config.tolerance;
    return result;
  }

  // z = [beta (m), u (m), w]; minimize w + delta * sum(u).
  const Vector beta0 = initial_beta(warm, data);
  const double rho_beta = 0.1 * coefficient_scale(data) + 0.1 * beta0.cwiseAbs().maxCoeff();
  const double rho_res = 0.1 * std::max(data.y().cwiseAbs().maxCoeff(), 1e-12);
  const Index w_index = 2 * m;
  ConeProgram program;
  program.num_vars = 2 * m + 1;
  for (Index j = 0; j < m; ++j) program.cones.push_back(abs_cone(m + j, j));
  ConeConstraint residual;
  residual.idx.push_back(w_index);
  for (Index j = 0; j < m; ++j) residual.idx.push_back(j);
  residual.M = Matrix::Zero(n + 1, m + 1);
  residual.M(0, 0) = 1.0;
  residual.M.block(1, 1, n, m) = -data.X();
  residual.offset = Vector::Zero(n + 1);
  residual.offset.tail(n) = data.y();
  program.cones.push_back(std::move(residual));
  program.cost = Vector::Zero(program.num_vars);
  program.cost(w_index) = 1.0;
  program.cost.segment(m, m).setConstant(delta);

  Vector z0(program.num_vars);
  z0.head(m) = beta0;
  z0.segment(m, m) = beta0.cwiseAbs().array() + rho_beta;
  z0(w_index) = (data.y() - data.X() * beta0).norm() * 1.1 + rho_res;

  const auto solved = detail::solve_cone_program(program, z0, barrier_options(config));
  result.beta = solved.z.head(m);
  result.iterations = solved.newton_steps;
  result.objective = robust_risk_featurewise(result.beta, data, delta);

  SubgradientHint hint;
  hint.residual_signs = (data.y() - data.X() * result.beta) / std::max(solved.z(w_index), kTiny);
  hint.norm_direction = result.beta.cwiseQuotient(solved.z.segment(m, m).cwiseMax(kTiny));
  const auto st = sqrt_lasso_stationarity(result.beta, data, delta,
                                          default_activity(result.beta, data), hint);
  result.optimality_residual = st.relative();
  result.converged = solved.converged && result.optimality_residual <= config.tolerance;
  return result;
}

FitResult fit_lasso(const Dataset& data, double delta, const SolverConfig& config,
                    const WarmStart& warm) {
  config.validate();
  if (!(delta >= 0.0)) throw InvalidArgumentError("delta must be nonnegative");
  const Matrix& X = data.X();
  const Index n = data.n();
  const Index m = data.m();
  const double inv_n = 1.0 / static_cast<double>(n);

  FitResult result;
  result.method_tag = "lasso";
  Vector beta = initial_beta(warm, data);
  if (delta >= lasso_zero_threshold(data) && delta > 0.0) beta.setZero();

  const Vector col_sq = X.colwise().squaredNorm().transpose() * inv_n;
  Vector r = data.y() - X * beta;
  const double scale = std::max({delta, lasso_zero_threshold(data), kTiny});
  const double step_tol = 0.1 * config.tolerance * scale;

  auto kkt_violation = [&]() {
    const Vector grad = -2.0 * inv_n * (X.transpose() * r);
    double worst = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double v = beta(j) == 0.0 ? std::max(0.0, std::abs(grad(j)) - delta)
                                      : std::abs(grad(j) + delta * (beta(j) > 0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
    return worst / scale;
  };

  auto update = [&](Index j) {
    if (col_sq(j) == 0.0) {
      if (beta(j) != 0.0) {
        beta(j) = 0.0;
      }
      return 0.0;
    }
    const double c = inv_n * X.col(j).dot(r) + col_sq(j) * beta(j);
    const double next = soft_threshold(c, 0.5 * delta) / col_sq(j);
    const double change = next - beta(j);
    if (change != 0.0) {
      r.noalias() -= change * X.col(j);
      beta(j) = next;
    }
    return 2.0 * col_sq(j) * std::abs(change);
  };

  auto objective = [&](const Vector& b, const Vector& res) {
    return inv_n * res.squaredNorm() + delta * b.lpNorm<1>();
  };

  // With the support and signs fixed the problem is a linear system:
  // X_S^T X_S b = X_S^T y - (n delta / 2) sign. Jump there when the solution
  // keeps the signs and does not increase the objective; coordinate descent
  // alone crawls when X_S is ill-conditioned.
  auto try_support_solve = [&](const std::vector<Index>& support) {
    const auto k = static_cast<Index>(support.size());
    if (k == 0 || k > n) return;
    Matrix Xs(n, k);
    Vector sign(k);
    for (Index c = 0; c < k; ++c) {
      Xs.col(c) = X.col(support[static_cast<std::size_t>(c)]);
      sign(c) = beta(support[static_cast<std::size_t>(c)]) > 0 ? 1.0 : -1.0;
    }
    const Eigen::ColPivHouseholderQR<Matrix> qr(Xs);
    if (qr.rank() < k) return;
    // Normal equations through the QR of X_S: b = argmin ||X_S b - y||^2 + n delta sign^T b.
    const Matrix R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Vector rhs_sign = qr.colsPermutation().transpose() * sign;
    const Vector w = R.transpose().triangularView<Eigen::Lower>().solve(rhs_sign);
    const Vector correction = R.triangularView<Eigen::Upper>().solve(w);
    const Vector b = qr.solve(data.y()) -
                     0.5 * static_cast<double>(n) * delta * (qr.colsPermutation() * correction);
    for (Index c = 0; c < k; ++c)
      if (b(c) * sign(c) <= 0.0) return;
    Vector candidate = beta;
    for (Index c = 0; c < k; ++c) candidate(support[static_cast<std::size_t>(c)]) = b(c);
    const Vector cand_r = data.y() - X * candidate;
    if (objective(candidate, cand_r) <= objective(beta, r)) {
      beta = candidate;
      r = cand_r;
    }
  };

  // While the active columns are linearly dependent, slide along a null
  // direction of X_S that does not increase ||beta||_1 until a coefficient
  // reaches zero. The fit term is unchanged, so the objective never rises.
  auto shrink_support = [&](std::vector<Index>& support) {
    while (!support.empty()) {
      const auto k = static_cast<Index>(support.size());
      Matrix Xs(n, k);
      Vector bs(k);
      for (Index c = 0; c < k; ++c) {
        Xs.col(c) = X.col(support[static_cast<std::size_t>(c)]);
        bs(c) = beta(support[static_cast<std::size_t>(c)]);
      }
      Eigen::FullPivLU<Matrix> lu(Xs);
      lu.setThreshold(1e-10);
      if (lu.rank() == k) return;
      Vector dir = lu.kernel().col(0);
      const double slope = bs.cwiseSign().dot(dir);
      if (slope > 0.0) dir = -dir;
      double step = std::numeric_limits<double>::infinity();
      Index hit = -1;
      for (Index c = 0; c < k; ++c) {
        if (dir(c) * bs(c) < 0.0) {
          const double t = -bs(c) / dir(c);
          if (t < step) {
            step = t;
            hit = c;
          }
        }
      }
      if (hit < 0) return;
      for (Index c = 0; c < k; ++c) beta(support[static_cast<std::size_t>(c)]) += step * dir(c);
      beta(support[static_cast<std::size_t>(hit)]) = 0.0;
      support.erase(support.begin() + hit);
      // Drop anything else the step zeroed or flipped by rounding.
      std::erase_if(support, [&](Index j) {
        if (std::abs(beta(j)) <= 1e-15 * std::max(1.0, std::abs(beta(j)))) {
          beta(j) = 0.0;
          return true;
        }
        return false;
      });
      r = data.y() - X * beta;
    }
  };

  long sweeps = 0;
  bool done = false;
  while (!done && sweeps < config.max_iterations) {
    // Full pass, then iterate on the active set until it settles.
    double worst = 0.0;
    for (Index j = 0; j < m; ++j) worst = std::max(worst, update(j));
    ++sweeps;
    if (worst <= step_tol) {
      if (kkt_violation() <= config.tolerance) {
        done = true;
        break;
      }
    }
    std::vector<Index> active;
    for (Index j = 0; j < m; ++j)
      if (beta(j) != 0.0) active.push_back(j);
    if (delta > 0.0) {
      shrink_support(active);
      try_support_solve(active);
    }
    while (sweeps < config.max_iterations) {
      double w = 0.0;
      for (Index j : active) w = std::max(w, update(j));
      ++sweeps;
      if (w <= step_tol) break;
    }
    // Refresh the residual to limit drift.
    r = data.y() - X * beta;
  }

  result.beta = beta;
  result.iterations = sweeps;
  result.objective = objective(beta, r);
  result.optimality_residual = kkt_violation();
  result.converged = result.optimality_residual <= config.tolerance;
  return result;
}

FitResult fit_ridge(const Dataset& data, double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw InvalidArgumentError("delta must be finite and nonnegative");
  }
  const Matrix& X = data.X();
  const Index n = data.n();
  const Index m = data.m();
  const double shift = static_cast<double>(n) * delta;
  FitResult result;
  result.method_tag = "ridge";

  if (delta == 0.0) {
    if (numerical_rank(X) < m) {
      throw RankDeficientError("ridge with delta = 0 needs X with full column rank");
    }
    result.beta = X.colPivHouseholderQr().solve(data.y());
  } else if (m <= n) {
    Matrix A = X.transpose() * X;
    A.diagonal().array() += shift;
    const Eigen::LLT<Matrix> llt(A);
    const Vector rhs = X.transpose() * data.y();
    result.beta = llt.solve(rhs);
    result.beta += llt.solve(rhs - A * result.beta);
  } else {
    // Dual form: beta = X^T (X X^T + n delta I)^{-1} y.
    Matrix K = X * X.transpose();
    K.diagonal().array() += shift;
    const Eigen::LLT<Matrix> llt(K);
    Vector alpha = llt.solve(data.y());
    alpha += llt.solve(data.y() - K * alpha);
    result.beta = X.transpose() * alpha;
  }

  const Vector rhs = X.transpose() * data.y();
  const Vector lhs = X.transpose() * (X * result.beta) + shift * result.beta;
  result.optimality_residual = (lhs - rhs).norm() / std::max(rhs.norm(), kTiny);
  result.objective = (data.y() - X * result.beta).squaredNorm() / static_cast<double>(n) +
                     delta * result.beta.squaredNorm();
  result.iterations = 1;
  result.converged = result.optimality_residual <= 1e-10;
  return result;
}

FitResult fit_ols(const Dataset& data) { return least_squares_fit(data, "ols"); }

FitResult min_l2_interpolator(const Dataset& data) {
  require_full_row_rank(data.X());
  const Matrix& X = data.X();
  const Index n = data.n();
  const Index m = data.m();
  // X^T = Q R, so X beta = y is R^T alpha = y with beta = Q alpha.
  Eigen::HouseholderQR<Matrix> qr(X.transpose());
  const Matrix R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const Vector alpha = R.transpose().triangularView<Eigen::Lower>().solve(data.y());
  Vector padded = Vector::Zero(m);
  padded.head(n) = alpha;
  FitResult result;
  result.method_tag = "min-l2";
  result.beta = qr.householderQ() * padded;
  // One refinement step against the original constraints.
  const Vector residual = data.y() - X * result.beta;
  padded.head(n) = R.transpose().triangularView<Eigen::Lower>().solve(residual);
  result.beta += qr.householderQ() * padded;

  result.objective = result.beta.norm();
  result.optimality_residual =
      (X * result.beta - data.y()).norm() / std::max(data.y().norm(), kTiny);
  result.iterations = 1;
  result.converged = result.optimality_residual <= 1e-9;
  return result;
}

FitResult min_l1_interpolator(const Dataset& data, const SolverConfig& config) {
  config.validate();
  const Index m = data.m();
  FitResult result;
  result.method_tag = "min-l1";

  // Keep a maximal independent set of rows; inconsistent systems are infeasible.
  Matrix X = data.X();
  Vector y = data.y();
  Eigen::ColPivHouseholderQR<Matrix> row_qr(X.transpose());
  row_qr.setThreshold(1e-10);
  const Index rank = row_qr.rank();
  if (rank < data.n()) {
    const Vector ls = min_norm_least_squares(X, y);
    if ((X * ls - y).norm() > 1e-9 * std::max(y.norm(), 1.0)) {
      throw InfeasibleError("X beta = y has no solution (rank-deficient X, inconsistent y)");
    }
    Matrix Xr(rank, m);
    Vector yr(rank);
    for (Index k = 0; k < rank; ++k) {
      const Index row = row_qr.colsPermutation().indices()(k);
      Xr.row(k) = X.row(row);
      yr(k) = y(row);
    }
    X = std::move(Xr);
    y = std::move(yr);
  }

  if (y.lpNorm<Eigen::Infinity>() == 0.0) {
    result.beta = Vector::Zero(m);
    result.converged = true;
    return result;
  }

  Matrix A(X.rows(), 2 * m);
  A << X, -X;
  const Vector c = Vector::Ones(2 * m);
  const double lp_tol = std::max(1e-2 * config.tolerance, 1e-13);
  const auto lp = detail::solve_standard_lp(A, y, c, lp_tol, std::min(config.max_iterations, 500L));

  Vector beta = lp.x.head(m) - lp.x.tail(m);
  // Restore exact feasibility with the minimum-norm correction.
  beta += min_norm_least_squares(X, y - X * beta);

  Vector lambda = lp.dual;
  const double dual_scale = std::max(1.0, (X.transpose() * lambda).lpNorm<Eigen::Infinity>());
  lambda /= dual_scale;
  const double primal = beta.lpNorm<1>();
  const double dual = y.dot(lambda);

  result.beta = beta;
  result.objective = primal;
  result.iterations = lp.iterations;
  result.optimality_residual = std::abs(primal - dual) / std::max(primal, kTiny);
  const double feasibility =
      (data.X() * beta - data.y()).norm() / std::max(data.y().norm(), 1.0);
  result.converged = result.optimality_residual <= config.tolerance && feasibility <= 1e-7;
  return result;
}

FitResult fit(const Dataset& data, const EstimatorSpec& spec, const WarmStart& warm) {
  spec.validate();
  switch (spec.kind) {
    case EstimatorKind::adversarial:
      return fit_adversarial(data, *spec.budget, spec.config, warm);
    case EstimatorKind::lasso:
      return fit_lasso(data, spec.delta, spec.config, warm);
    case EstimatorKind::ridge:
      return fit_ridge(data, spec.delta);
    case EstimatorKind::sqrt_lasso:
      return fit_sqrt_lasso(data, spec.delta, spec.config, warm);
    case EstimatorKind::ols:
      return fit_ols(data);
    case EstimatorKind::min_l1_interp:
      return min_l1_interpolator(data, spec.config);
    case EstimatorKind::min_l2_interp:
      return min_l2_interpolator(data);
  }
  throw InvalidArgumentError("unknown estimator kind");
}

}  // namespace advreg
