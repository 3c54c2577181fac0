#pragma once

#include "advreg/core.hpp"

namespace advreg::detail {

// Standard-form LP: minimize c^T x subject to A x = b, x >= 0.
struct LinearProgramResult {
  Vector x;
  Vector dual;   // lambda, with A^T lambda <= c at convergence
  Vector slack;  // s = c - A^T lambda
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  long iterations = 0;
  bool converged = false;
};

// Mehrotra predictor-corrector primal-dual interior point method.
LinearProgramResult solve_standard_lp(const Matrix& A, const Vector& b, const Vector& c,
                                      double tolerance, long max_iterations);

}  // namespace advreg::detail
