#pragma once

#include "advreg/core.hpp"

#include <optional>
#include <vector>

namespace advreg {

// Per-sample worst-case perturbation and the absolute residual it produces.
struct AttackVector {
  Vector delta_x;
  double attained_value = 0.0;
};

// Outcome of the interpolation optimality check.
struct CertificateReport {
  bool holds = false;
  std::vector<bool> per_sample_interpolation;
  // Largest radius for which the sufficient condition applies.
  double delta_bound = 0.0;
  // margin_i = (smallest nonzero |entry| of sample i's coordinates) - delta.
  // Nonnegative margins mean the sample's subdifferential contains zero
  // whenever that sample is interpolated.
  Vector margins;
  Vector abs_residuals;
};

inline constexpr double kInterpolationTol = 1e-6;

// (1/n) sum_i (|y_i - x_i^T beta| + delta ||beta||_q)^2
double adv_risk(const Vector& beta, const Dataset& data, const AttackBudget& budget);

// Inner maximizer of (y - (x + dx)^T beta)^2 over ||dx||_p <= delta.
AttackVector worst_case_attack(const Vector& beta, const Vector& x, double y,
                               const AttackBudget& budget);

// max over row-bounded disturbances of ||y - (X + D) beta||_2.
double robust_risk_samplewise(const Vector& beta, const Dataset& data,
                              const AttackBudget& budget);

// max over column-bounded disturbances (||column||_2 <= delta); equals the
// square-root lasso objective ||y - X beta||_2 + delta ||beta||_1.
double robust_risk_featurewise(const Vector& beta, const Dataset& data, double delta);

// One element of the subdifferential of adv_risk, with sign(0) = 0 for the
// residuals and the canonical norm subgradient (zero where beta is zero).
Vector adv_risk_subgradient(const Vector& beta, const Dataset& data,
                            const AttackBudget& budget);

CertificateReport check_interpolation_certificate(const Vector& beta, const Dataset& data,
                                                  const AttackBudget& budget,
                                                  double interp_tol = kInterpolationTol);

// ---------------------------------------------------------------------------
// Approximate stationarity certificates.
//
// A residual with |r_i| <= residual_tol (or a coefficient with magnitude below
// coef_tol) is treated as sitting on its kink, so its multiplier may be picked
// anywhere in [-1, 1]. The certificate is the norm of the smallest
// subgradient found over these choices; any feasible choice gives a valid
// upper bound on the distance from zero to the (inflated) subdifferential.

struct ActivityTolerance {
  double residual = 1e-7;
  double coef = 1e-8;
};

// Multipliers proposed by a solver (may be empty: defaults are used).
struct SubgradientHint {
  Vector residual_signs;  // length n, values in [-1, 1]
  Vector norm_direction;  // length m, element of the dual-norm unit ball
};

struct StationarityReport {
  Vector subgradient;
  double residual_norm = 0.0;
  // Normalization: the largest norm any subgradient element can have here.
  double scale = 0.0;
  double relative() const { return scale > 0.0 ? residual_norm / scale : residual_norm; }
};

ActivityTolerance default_activity(const Vector& beta, const Dataset& data);

StationarityReport adv_risk_stationarity(const Vector& beta, const Dataset& data,
                                         const AttackBudget& budget,
                                         const ActivityTolerance& tol,
                                         const std::optional<SubgradientHint>& hint = std::nullopt,
                                         int refinement_sweeps = 500);

// Same idea for ||y - X beta||_2 + delta ||beta||_1. The residual multiplier
// lives in the unit ball when ||y - X beta||_2 <= tol.residual.
StationarityReport sqrt_lasso_stationarity(const Vector& beta, const Dataset& data,
                                           double delta, const ActivityTolerance& tol,
                                           const std::optional<SubgradientHint>& hint = std::nullopt,
                                           int refinement_sweeps = 500);

double mse(const Vector& beta, const Dataset& data);

}  // namespace advreg
