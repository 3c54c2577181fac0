#pragma once

#include "advreg/core.hpp"

#include <vector>

namespace advreg::detail {

// Second-order cone constraint on an affine image of a subset of the
// variables: v = M * z(idx) + offset must satisfy v(0) > ||v(1:end)||_2.
// A cone of size 2 encodes |b| <= a.
struct ConeConstraint {
  std::vector<Index> idx;
  Matrix M;
  Vector offset;
};

// minimize cost^T z subject to every cone constraint.
struct ConeProgram {
  Index num_vars = 0;
  Vector cost;
  std::vector<ConeConstraint> cones;
};

struct BarrierOptions {
  // Relative duality-gap schedule: start, per-stage factor, target.
  double initial_gap = 1e-2;
  double gap_decay = 0.1;
  double final_gap = 1e-10;
  long max_newton_steps = 200000;
  double centering_tol = 1e-10;
  int max_centering_steps = 200;
};

struct BarrierResult {
  Vector z;
  double objective = 0.0;
  // nu / t: bound on the duality gap at the last centering point.
  double gap_bound = 0.0;
  long newton_steps = 0;
  bool converged = false;
};

// Log-barrier path following with damped Newton centering. z0 must be
// strictly feasible.
BarrierResult solve_cone_program(const ConeProgram& program, const Vector& z0,
                                 const BarrierOptions& options);

bool strictly_feasible(const ConeProgram& program, const Vector& z);

}  // namespace advreg::detail
