#pragma once

#include "advreg/core.hpp"

#include <optional>
#include <string>

namespace advreg {

enum class EstimatorKind {
  adversarial,
  lasso,
  ridge,
  sqrt_lasso,
  ols,
  min_l1_interp,
  min_l2_interp,
};

std::string to_string(EstimatorKind kind);
// Accepts the CLI spellings: adv, lasso, ridge, sqrt-lasso, ols, min-l1, min-l2.
EstimatorKind parse_estimator_kind(const std::string& text);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::adversarial;
  // Used by the adversarial estimator only.
  std::optional<AttackBudget> budget;
  // Regularization strength for lasso, ridge and sqrt_lasso.
  double delta = 0.0;
  SolverConfig config;

  void validate() const;
};

using WarmStart = std::optional<Vector>;

// Minimizes (1/n) sum_i (|y_i - x_i^T beta| + delta ||beta||_q)^2. The
// optimality residual is the relative norm of the smallest subgradient found
// in the kink-inflated subdifferential (see adv_risk_stationarity).
FitResult fit_adversarial(const Dataset& data, const AttackBudget& budget,
                          const SolverConfig& config = {}, const WarmStart& warm = std::nullopt);

// Cyclic coordinate descent on (1/n)||y - X beta||^2 + delta ||beta||_1.
FitResult fit_lasso(const Dataset& data, double delta, const SolverConfig& config = {},
                    const WarmStart& warm = std::nullopt);

// Solves (X^T X + n delta I) beta = X^T y.
FitResult fit_ridge(const Dataset& data, double delta);

// Minimizes ||y - X beta||_2 + delta ||beta||_1.
FitResult fit_sqrt_lasso(const Dataset& data, double delta, const SolverConfig& config = {},
                         const WarmStart& warm = std::nullopt);

// Least squares; the minimum-norm solution when X lacks full column rank.
FitResult fit_ols(const Dataset& data);

FitResult min_l2_interpolator(const Dataset& data);

// Basis pursuit: min ||beta||_1 s.t. X beta = y. The optimality residual is
// the relative duality gap against a feasible dual point.
FitResult min_l1_interpolator(const Dataset& data, const SolverConfig& config = {});

FitResult fit(const Dataset& data, const EstimatorSpec& spec, const WarmStart& warm = std::nullopt);

// Smallest radius at which beta = 0 minimizes the adversarial risk:
// ||X^T y||_inf / ||y||_1 for p = inf and ||X^T y||_2 / ||y||_1 for p = 2.
double adversarial_zero_threshold(const Dataset& data, NormOrder p);
// (2/n) ||X^T y||_inf
double lasso_zero_threshold(const Dataset& data);
// ||X^T y||_inf / ||y||_2
double sqrt_lasso_zero_threshold(const Dataset& data);

inline constexpr double kNonzeroTol = 1e-8;
Index count_nonzero(const Vector& beta, double tol = kNonzeroTol);

}  // namespace advreg
