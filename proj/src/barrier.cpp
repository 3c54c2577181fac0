#include "advreg/detail/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace advreg::detail {

namespace {

struct ConeState {
  double lower = 0.0;  // v0 - ||vbar||
  double upper = 0.0;  // v0 + ||vbar||
  Vector v;
};

ConeState evaluate(const ConeConstraint& cone, const Vector& z) {
  ConeState st;
  st.v = cone.offset;
  for (std::size_t c = 0; c < cone.idx.size(); ++c) {
    st.v.noalias() += cone.M.col(static_cast<Index>(c)) * z(cone.idx[c]);
  }
  const double tail = st.v.size() == 2 ? std::abs(st.v(1)) : st.v.tail(st.v.size() - 1).norm();
  st.lower = st.v(0) - tail;
  st.upper = st.v(0) + tail;
  return st;
}

// Direction of the cone image: dv = M * dz(idx).
Vector image_direction(const ConeConstraint& cone, const Vector& dz) {
  Vector dv = Vector::Zero(cone.M.rows());
  for (std::size_t c = 0; c < cone.idx.size(); ++c) {
    dv.noalias() += cone.M.col(static_cast<Index>(c)) * dz(cone.idx[c]);
  }
  return dv;
}

double lower_of(const Vector& v) {
  const double tail = v.size() == 2 ? std::abs(v(1)) : v.tail(v.size() - 1).norm();
  return v(0) - tail;
}

double upper_of(const Vector& v) {
  const double tail = v.size() == 2 ? std::abs(v(1)) : v.tail(v.size() - 1).norm();
  return v(0) + tail;
}

class Centering {
 public:
  Centering(const ConeProgram& program) : program_(program) {
    // Cache M_bar^T M_bar - m0 m0^T for cones of dimension > 2.
    curvature_.resize(program.cones.size());
    for (std::size_t k = 0; k < program.cones.size(); ++k) {
      const auto& M = program.cones[k].M;
      if (M.rows() > 2) {
        const auto tail = M.bottomRows(M.rows() - 1);
        curvature_[k] = tail.transpose() * tail - M.row(0).transpose() * M.row(0);
      }
    }
  }

  // Gradient and Hessian of t * c^T z - sum_k log(D_k(z)).
  void derivatives(const Vector& z, double t, Vector& grad, Matrix& hess) const {
    const Index N = program_.num_vars;
    grad = t * program_.cost;
    hess.setZero(N, N);
    for (std::size_t k = 0; k < program_.cones.size(); ++k) {
      const auto& cone = program_.cones[k];
      const ConeState st = evaluate(cone, z);
      const double D = st.lower * st.upper;
      Vector gv(st.v.size());
      gv(0) = -2.0 * st.v(0) / D;
      gv.tail(gv.size() - 1) = 2.0 * st.v.tail(st.v.size() - 1) / D;
      const Vector G = cone.M.transpose() * gv;
      Matrix local = G * G.transpose();
      if (cone.M.rows() == 2) {
        const auto m0 = cone.M.row(0);
        const auto m1 = cone.M.row(1);
        local.noalias() += (2.0 / D) * (m1.transpose() * m1 - m0.transpose() * m0);
      } else {
        local += (2.0 / D) * curvature_[k];
      }
      for (std::size_t a = 0; a < cone.idx.size(); ++a) {
        const Index ia = cone.idx[a];
        grad(ia) += G(static_cast<Index>(a));
        for (std::size_t b = 0; b < cone.idx.size(); ++b) {
          hess(ia, cone.idx[b]) += local(static_cast<Index>(a), static_cast<Index>(b));
        }
      }
    }
  }

  // Largest step in (0, 1] keeping all cones strictly feasible, halving from 1.
  // Returns the change in the barrier objective through `dphi` (computed
  // from log-ratios so it stays accurate when t is huge).
  bool step_change(const Vector& z, const Vector& dz, double t, double step, double& dphi) const {
    double sum_log = 0.0;
    for (const auto& cone : program_.cones) {
      const ConeState st = evaluate(cone, z);
      const Vector dv = image_direction(cone, dz);
      const Vector vn = st.v + step * dv;
      const double lo = lower_of(vn);
      if (!(lo > 0.0)) return false;
      const double up = upper_of(vn);
      sum_log += std::log(lo / st.lower) + std::log(up / st.upper);
    }
    dphi = t * step * program_.cost.dot(dz) - sum_log;
    return std::isfinite(dphi);
  }

 private:
  const ConeProgram& program_;
  std::vector<Matrix> curvature_;
};

// Solves hess * dz = -grad with symmetric Jacobi scaling, falling back to a
// growing diagonal shift when the factorization fails. Two refinement steps
// recover accuracy lost to ill-conditioning late in the path.
Vector newton_direction(const Matrix& hess, const Vector& grad) {
  const Index N = hess.rows();
  Vector scale(N);
  for (Index i = 0; i < N; ++i) {
    const double d = hess(i, i);
    scale(i) = d > 0.0 && std::isfinite(d) ? 1.0 / std::sqrt(d) : 1.0;
  }
  const Matrix scaled = scale.asDiagonal() * hess * scale.asDiagonal();
  const Vector rhs = -scale.cwiseProduct(grad);

  auto refine = [&](const auto& factor) {
    Vector dz = factor.solve(rhs);
    for (int k = 0; k < 2 && dz.allFinite(); ++k) {
      dz += factor.solve(rhs - scaled * dz);
    }
    return dz;
  };

  Eigen::LLT<Matrix> llt(scaled);
  if (llt.info() == Eigen::Success) {
    const Vector dz = refine(llt);
    if (dz.allFinite()) return scale.cwiseProduct(dz);
  }
  double reg = 1e-14;
  for (int attempt = 0; attempt < 12; ++attempt, reg *= 10.0) {
    Matrix shifted = scaled;
    shifted.diagonal().array() += reg;
    Eigen::LLT<Matrix> shifted_llt(shifted);
    if (shifted_llt.info() == Eigen::Success) {
      const Vector dz = refine(shifted_llt);
      if (dz.allFinite()) return scale.cwiseProduct(dz);
    }
  }
  return scale.cwiseProduct(Eigen::LDLT<Matrix>(scaled).solve(rhs));
}

}  // namespace

bool strictly_feasible(const ConeProgram& program, const Vector& z) {
  for (const auto& cone : program.cones) {
    if (!(evaluate(cone, z).lower > 0.0)) return false;
  }
  return true;
}

BarrierResult solve_cone_program(const ConeProgram& program, const Vector& z0,
                                 const BarrierOptions& options) {
  if (!strictly_feasible(program, z0)) {
    throw InvalidArgumentError("barrier solver needs a strictly feasible start");
  }
  double nu = 0.0;
  for (std::size_t k = 0; k < program.cones.size(); ++k) nu += 2.0;

  Centering centering(program);
  BarrierResult result;
  Vector z = z0;
  const double start_objective = program.cost.dot(z);
  const double floor = std::max(std::abs(start_objective), 1e-300) * 1e-15;

  // Start at the t whose gradient is closest to centered at z0 (in the local
  // norm), capped by the requested initial gap. Starting with a t that is too
  // large for z0 leaves a long damped phase.
  const double t_cap = nu / (options.initial_gap * std::max(std::abs(start_objective), floor));
  Vector grad;
  Matrix hess;
  centering.derivatives(z0, 0.0, grad, hess);
  double t = t_cap;
  {
    const Vector h_c = newton_direction(hess, -program.cost);
    const double cc = program.cost.dot(h_c);
    const double t_fit = cc > 0.0 ? -grad.dot(h_c) / cc : 0.0;
    const double t_floor = nu / std::max(std::abs(start_objective), floor);
    if (std::isfinite(t_fit)) t = std::clamp(t_fit, std::min(t_floor, t_cap), t_cap);
  }
  for (int stage = 0; stage < 200; ++stage) {
    bool stalled = false;
    for (int it = 0; it < options.max_centering_steps; ++it) {
      if (result.newton_steps >= options.max_newton_steps) break;
      centering.derivatives(z, t, grad, hess);
      const Vector dz = newton_direction(hess, grad);
      ++result.newton_steps;
      const double slope = grad.dot(dz);
      const double decrement2 = -slope;
      // Below the rounding level of t * c^T z the decrement carries no signal.
      const double noise = 1e-13 * (t * std::abs(program.cost.dot(z)) + nu);
      if (!(decrement2 > 0.0) || decrement2 / 2.0 <= std::max(options.centering_tol, noise)) break;

      double step = 1.0;
      double dphi = 0.0;
      bool accepted = false;
      while (step > 1e-16) {
        if (centering.step_change(z, dz, t, step, dphi) && dphi <= 0.25 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        stalled = true;
        break;
      }
      z += step * dz;
    }

    const double objective = program.cost.dot(z);
    result.gap_bound = nu / t;
    const double target = options.final_gap * std::max(std::abs(objective), floor);
    if (result.gap_bound <= target) {
      result.converged = true;
      break;
    }
    if (result.newton_steps >= options.max_newton_steps) break;
    if (stalled && result.gap_bound <= 1e3 * target) {
      // Numerical floor reached close to the target; accept.
      result.converged = true;
      break;
    }
    t = std::min(t / options.gap_decay, nu / (0.5 * target));
  }
  result.z = z;
  result.objective = program.cost.dot(z);
  return result;
}

}  // namespace advreg::detail
