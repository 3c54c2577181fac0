#include "advreg/objective.hpp"

#include "advreg/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace advreg {

namespace {

void require_coefficients(const Vector& beta, const Dataset& data) {
  if (beta.size() != data.m()) {
    throw DimensionError("beta has length " + std::to_string(beta.size()) + " but X has " +
                         std::to_string(data.m()) + " columns");
  }
}

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

void project_unit_ball(Vector& v) {
  const double nrm = v.norm();
  if (nrm > 1.0) v /= nrm;
}

// Canonical element of the subdifferential of ||beta||_q.
Vector norm_subgradient(const Vector& beta, NormOrder p) {
  if (p == NormOrder::L2) {
    const double nrm = beta.norm();
    return nrm > 0.0 ? Vector(beta / nrm) : Vector(Vector::Zero(beta.size()));
  }
  return beta.unaryExpr([](double b) { return sign_or_zero(b); });
}

double min_nonzero_abs(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < row.size(); ++j) {
    const double a = std::abs(row(j));
    if (a > kZeroEntryTol) best = std::min(best, a);
  }
  return best;
}

}  // namespace

double mse(const Vector& beta, const Dataset& data) {
  require_coefficients(beta, data);
  return (data.y() - data.X() * beta).squaredNorm() / static_cast<double>(data.n());
}

double adv_risk(const Vector& beta, const Dataset& data, const AttackBudget& budget) {
  require_coefficients(beta, data);
  const Vector r = data.y() - data.X() * beta;
  const double penalty = budget.delta() * dual_norm(beta, budget.p());
  return (r.array().abs() + penalty).square().sum() / static_cast<double>(data.n());
}

AttackVector worst_case_attack(const Vector& beta, const Vector& x, double y,
                               const AttackBudget& budget) {
  if (beta.size() != x.size()) throw DimensionError("beta and x lengths differ");
  AttackVector attack;
  attack.delta_x = Vector::Zero(x.size());
  const double r = y - x.dot(beta);
  const double direction = r >= 0.0 ? 1.0 : -1.0;
  if (budget.p() == NormOrder::Linf) {
    for (Index j = 0; j < beta.size(); ++j) {
      attack.delta_x(j) = -direction * budget.delta() * sign_or_zero(beta(j));
    }
  } else {
    const double nrm = beta.norm();
    if (nrm > 0.0) attack.delta_x = -direction * budget.delta() * beta / nrm;
  }
  attack.attained_value = std::abs(y - (x + attack.delta_x).dot(beta));
  return attack;
}

double robust_risk_samplewise(const Vector& beta, const Dataset& data,
                              const AttackBudget& budget) {
  require_coefficients(beta, data);
  const Vector r = data.y() - data.X() * beta;
  const double penalty = budget.delta() * dual_norm(beta, budget.p());
  return std::sqrt((r.array().abs() + penalty).square().sum());
}

double robust_risk_featurewise(const Vector& beta, const Dataset& data, double delta) {
  require_coefficients(beta, data);
  if (!(delta >= 0.0)) throw InvalidArgumentError("delta must be nonnegative");
  return (data.y() - data.X() * beta).norm() + delta * beta.lpNorm<1>();
}

Vector adv_risk_subgradient(const Vector& beta, const Dataset& data,
                            const AttackBudget& budget) {
  require_coefficients(beta, data);
  const double n = static_cast<double>(data.n());
  const Vector r = data.y() - data.X() * beta;
  const double penalty = budget.delta() * dual_norm(beta, budget.p());
  const Vector f = r.array().abs() + penalty;
  const Vector weighted = f.cwiseProduct(r.unaryExpr([](double v) { return sign_or_zero(v); }));
  const Vector g = norm_subgradient(beta, budget.p());
  return (2.0 / n) * (-data.X().transpose() * weighted + budget.delta() * f.sum() * g);
}

CertificateReport check_interpolation_certificate(const Vector& beta, const Dataset& data,
                                                  const AttackBudget& budget,
                                                  double interp_tol) {
  require_coefficients(beta, data);
  require_full_row_rank(data.X());

  Matrix coords;
  if (budget.p() == NormOrder::Linf) {
    coords = data.X();
  } else {
    coords = data.X() * row_space_basis(data.X()).transpose();
  }

  CertificateReport report;
  const Index n = data.n();
  report.abs_residuals = (data.y() - data.X() * beta).cwiseAbs();
  report.per_sample_interpolation.resize(static_cast<std::size_t>(n));
  report.margins.resize(n);
  report.delta_bound = std::numeric_limits<double>::infinity();
  bool all_interp = true;
  for (Index i = 0; i < n; ++i) {
    const bool interp = report.abs_residuals(i) <= interp_tol;
    report.per_sample_interpolation[static_cast<std::size_t>(i)] = interp;
    all_interp = all_interp && interp;
    const double smallest = min_nonzero_abs(coords.row(i));
    report.delta_bound = std::min(report.delta_bound, smallest);
    report.margins(i) = smallest - budget.delta();
  }
  report.holds = all_interp && budget.delta() <= report.delta_bound;
  return report;
}

ActivityTolerance default_activity(const Vector& beta, const Dataset& data) {
  ActivityTolerance tol;
  tol.residual = 1e-7 * std::max(1.0, data.y().lpNorm<Eigen::Infinity>());
  tol.coef = 1e-8 * std::max(1.0, beta.size() ? beta.lpNorm<Eigen::Infinity>() : 0.0);
  return tol;
}

StationarityReport adv_risk_stationarity(const Vector& beta, const Dataset& data,
                                         const AttackBudget& budget,
                                         const ActivityTolerance& tol,
                                         const std::optional<SubgradientHint>& hint,
                                         int refinement_sweeps) {
  require_coefficients(beta, data);
  const Matrix& X = data.X();
  const Index n = data.n();
  const Index m = data.m();
  const double inv_n = 2.0 / static_cast<double>(n);
  const double delta = budget.delta();

  const Vector r = data.y() - X * beta;
  const double penalty = delta * dual_norm(beta, budget.p());
  const Vector f = r.array().abs() + penalty;
  const double kappa = inv_n * delta * f.sum();

  // Residual multipliers.
  Vector s(n);
  std::vector<Index> free_s;
  for (Index i = 0; i < n; ++i) {
    if (std::abs(r(i)) > tol.residual) {
      s(i) = r(i) > 0 ? 1.0 : -1.0;
    } else {
      s(i) = hint && hint->residual_signs.size() == n ? clamp_unit(hint->residual_signs(i)) : 0.0;
      if (f(i) > 0.0) free_s.push_back(i);
    }
  }

  // Norm multipliers.
  Vector g = Vector::Zero(m);
  std::vector<Index> free_g;
  bool ball_free = false;
  const bool have_dir = hint && hint->norm_direction.size() == m;
  if (budget.p() == NormOrder::Linf) {
    for (Index j = 0; j < m; ++j) {
      if (std::abs(beta(j)) > tol.coef) {
        g(j) = beta(j) > 0 ? 1.0 : -1.0;
      } else {
        g(j) = have_dir ? clamp_unit(hint->norm_direction(j)) : 0.0;
        free_g.push_back(j);
      }
    }
  } else {
    const double nrm = beta.norm();
    if (nrm > tol.coef) {
      g = beta / nrm;
    } else {
      if (have_dir) {
        g = hint->norm_direction;
        project_unit_ball(g);
      }
      ball_free = true;
    }
  }

  Vector v = inv_n * (-X.transpose() * f.cwiseProduct(s)) + kappa * g;

  Vector col_norm2(n);
  for (Index i : free_s) col_norm2(i) = std::pow(inv_n * f(i), 2) * X.row(i).squaredNorm();

  double prev = v.squaredNorm();
  for (int sweep = 0; sweep < refinement_sweeps && prev > 0.0; ++sweep) {
    for (Index i : free_s) {
      if (col_norm2(i) <= 0.0) continue;
      // Column of sample i in v is -inv_n * f_i * x_i.
      const double a_dot_v = -inv_n * f(i) * X.row(i).dot(v);
      const double target = clamp_unit(s(i) - a_dot_v / col_norm2(i));
      const double step = target - s(i);
      if (step != 0.0) {
        v.noalias() -= (inv_n * f(i) * step) * X.row(i).transpose();
        s(i) = target;
      }
    }
    if (kappa > 0.0) {
      for (Index j : free_g) {
        const double target = clamp_unit(g(j) - v(j) / kappa);
        v(j) += kappa * (target - g(j));
        g(j) = target;
      }
      if (ball_free) {
        Vector base = v - kappa * g;
        Vector target = -base / kappa;
        project_unit_ball(target);
        g = target;
        v = base + kappa * g;
      }
    }
    const double now = v.squaredNorm();
    if (now >= prev * (1.0 - 1e-10)) {
      prev = now;
      break;
    }
    prev = now;
  }

  // Coordinate descent stalls on degenerate (interpolating) configurations.
  // Polish with least squares over the free multipliers: first by
  // elimination (solve over all of them, pin the ones that leave [-1, 1],
  // repeat), then over the ones strictly inside their bounds.
  auto subgradient_at = [&](const Vector& s_val, const Vector& g_val) {
    return Vector(inv_n * (-X.transpose() * f.cwiseProduct(s_val)) + kappa * g_val);
  };
  auto least_squares_step = [&](const std::vector<Index>& ws, const std::vector<Index>& wg,
                                Vector& s_val, Vector& g_val) {
    const Index k = static_cast<Index>(ws.size() + wg.size());
    if (k == 0) return false;
    // v = fixed + A * x, where x holds the working multipliers.
    Vector s_fixed = s_val;
    Vector g_fixed = g_val;
    for (Index i : ws) s_fixed(i) = 0.0;
    for (Index j : wg) g_fixed(j) = 0.0;
    const Vector fixed = subgradient_at(s_fixed, g_fixed);
    Matrix A = Matrix::Zero(m, k);
    Index c = 0;
    for (Index i : ws) A.col(c++) = -inv_n * f(i) * X.row(i).transpose();
    for (Index j : wg) A(j, c++) = kappa;
    const Vector x = Eigen::CompleteOrthogonalDecomposition<Matrix>(A).solve(-fixed);
    c = 0;
    for (Index i : ws) s_val(i) = x(c++);
    for (Index j : wg) g_val(j) = x(c++);
    return true;
  };

  if (!free_s.empty() || (kappa > 0.0 && !free_g.empty())) {
    std::vector<Index> ws, wg;
    for (Index i : free_s)
      if (col_norm2(i) > 0.0) ws.push_back(i);
    if (kappa > 0.0) wg = free_g;
    Vector s_try = s;
    Vector g_try = g;
    for (int round = 0; round < 50; ++round) {
      if (!least_squares_step(ws, wg, s_try, g_try)) break;
      std::vector<Index> ws_next, wg_next;
      for (Index i : ws) {
        if (std::abs(s_try(i)) > 1.0) {
          s_try(i) = clamp_unit(s_try(i));
        } else {
          ws_next.push_back(i);
        }
      }
      for (Index j : wg) {
        if (std::abs(g_try(j)) > 1.0) {
          g_try(j) = clamp_unit(g_try(j));
        } else {
          wg_next.push_back(j);
        }
      }
      const Vector v_try = subgradient_at(s_try, g_try);
      if (v_try.squaredNorm() < v.squaredNorm()) {
        s = s_try;
        g = g_try;
        v = v_try;
      }
      if (ws_next.size() == ws.size() && wg_next.size() == wg.size()) break;
      ws = std::move(ws_next);
      wg = std::move(wg_next);
    }
  }

  for (int round = 0; round < 8 && v.squaredNorm() > 0.0; ++round) {
    std::vector<Index> inner_s, inner_g;
    for (Index i : free_s)
      if (std::abs(s(i)) < 1.0 && col_norm2(i) > 0.0) inner_s.push_back(i);
    if (kappa > 0.0)
      for (Index j : free_g)
        if (std::abs(g(j)) < 1.0) inner_g.push_back(j);
    Vector s_try = s;
    Vector g_try = g;
    if (!least_squares_step(inner_s, inner_g, s_try, g_try)) break;
    for (Index i : inner_s) s_try(i) = clamp_unit(s_try(i));
    for (Index j : inner_g) g_try(j) = clamp_unit(g_try(j));
    const Vector v_try = subgradient_at(s_try, g_try);
    if (v_try.squaredNorm() >= v.squaredNorm() * (1.0 - 1e-6)) break;
    s = s_try;
    g = g_try;
    v = v_try;
  }

  StationarityReport report;
  report.subgradient = v;
  report.residual_norm = v.norm();
  const double cq = budget.p() == NormOrder::Linf ? std::sqrt(static_cast<double>(m)) : 1.0;
  double scale = 0.0;
  for (Index i = 0; i < n; ++i) scale += f(i) * (X.row(i).norm() + delta * cq);
  report.scale = inv_n * scale;
  return report;
}

StationarityReport sqrt_lasso_stationarity(const Vector& beta, const Dataset& data,
                                           double delta, const ActivityTolerance& tol,
                                           const std::optional<SubgradientHint>& hint,
                                           int refinement_sweeps) {
  require_coefficients(beta, data);
  const Matrix& X = data.X();
  const Index n = data.n();
  const Index m = data.m();

  const Vector r = data.y() - X * beta;
  const double rnorm = r.norm();
  Vector u;
  bool ball_free = false;
  if (rnorm > tol.residual) {
    u = r / rnorm;
  } else {
    u = hint && hint->residual_signs.size() == n ? hint->residual_signs : Vector::Zero(n);
    project_unit_ball(u);
    ball_free = true;
  }

  Vector g(m);
  std::vector<Index> free_g;
  for (Index j = 0; j < m; ++j) {
    if (std::abs(beta(j)) > tol.coef) {
      g(j) = beta(j) > 0 ? 1.0 : -1.0;
    } else {
      g(j) = 0.0;
      free_g.push_back(j);
    }
  }

  auto best_free_g = [&](const Vector& xtu) {
    if (delta <= 0.0) return;
    for (Index j : free_g) g(j) = clamp_unit(xtu(j) / delta);
  };

  Vector xtu = X.transpose() * u;
  best_free_g(xtu);
  Vector v = -xtu + delta * g;

  if (ball_free) {
    const double lipschitz = std::max(X.squaredNorm(), 1e-300);
    double prev = v.squaredNorm();
    for (int it = 0; it < refinement_sweeps * 10 && prev > 0.0; ++it) {
      u += X * v / lipschitz;
      project_unit_ball(u);
      xtu = X.transpose() * u;
      best_free_g(xtu);
      v = -xtu + delta * g;
      const double now = v.squaredNorm();
      if (now >= prev * (1.0 - 1e-12)) {
        prev = std::min(prev, now);
        break;
      }
      prev = now;
    }
  }

  StationarityReport report;
  report.subgradient = v;
  report.residual_norm = v.norm();
  report.scale = X.norm() + delta * std::sqrt(static_cast<double>(m));
  return report;
}

}  // namespace advreg
