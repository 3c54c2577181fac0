#pragma once

#include "advreg/core.hpp"

namespace advreg {

inline constexpr double kZeroEntryTol = 1e-12;

// Radii below which adversarial training is guaranteed to interpolate.
struct ThresholdReport {
  double gamma_min_X = 0.0;    // bound for l_inf attacks
  double gamma_min_XQt = 0.0;  // bound for l_2 attacks
  Matrix Q;                    // n x m, orthonormal rows spanning the rows of X
};

// Smallest magnitude among entries with |entry| > zero_tol.
double gamma_min(const Matrix& M, double zero_tol = kZeroEntryTol);

// Orthonormal basis of the row space of X from the thin QR of X^T. Each row
// is signed so that its first nonzero entry is positive.
Matrix row_space_basis(const Matrix& X);

// Throws RankDeficientError unless rank(X) == rows(X).
void require_full_row_rank(const Matrix& X);
Index numerical_rank(const Matrix& M);

ThresholdReport interpolation_thresholds(const Dataset& data);

}  // namespace advreg
