#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's objective or solver code.

#include "advreg/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using advreg::Dataset;
using advreg::Index;
using advreg::Matrix;
using advreg::Rng;
using advreg::Vector;

inline Dataset gaussian_data(Index n, Index m, advreg::RngSeed seed, double noise = 0.5) {
  Rng rng(seed);
  Matrix X = rng.normal_matrix(n, m);
  Vector beta = rng.normal_vector(m);
  Vector y = X * beta + noise * rng.normal_vector(n);
  return advreg::validate_dataset(std::move(X), std::move(y));
}

// Columns centered and scaled to unit variance, y centered.
inline Dataset standardized_data(Index n, Index m, advreg::RngSeed seed) {
  Rng rng(seed);
  Matrix X = rng.normal_matrix(n, m);
  Vector beta = rng.normal_vector(m);
  Vector y = X * beta + rng.normal_vector(n);
  for (Index j = 0; j < m; ++j) {
    X.col(j).array() -= X.col(j).mean();
    X.col(j) /= std::sqrt(X.col(j).squaredNorm() / static_cast<double>(n));
  }
  y.array() -= y.mean();
  return advreg::validate_dataset(std::move(X), std::move(y));
}

inline double naive_mse(const Vector& beta, const Dataset& d) {
  double total = 0.0;
  for (Index i = 0; i < d.n(); ++i) {
    double pred = 0.0;
    for (Index j = 0; j < d.m(); ++j) pred += d.X()(i, j) * beta(j);
    total += (d.y()(i) - pred) * (d.y()(i) - pred);
  }
  return total / static_cast<double>(d.n());
}

// max over dx in {-delta, +delta}^m of (y - (x + dx)^T beta)^2.
inline double corner_max(const Vector& beta, const Vector& x, double y, double delta) {
  const Index m = beta.size();
  double best = 0.0;
  for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
    double pred = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double dx = (mask >> j) & 1ul ? delta : -delta;
      pred += (x(j) + dx) * beta(j);
    }
    best = std::max(best, (y - pred) * (y - pred));
  }
  return best;
}

inline double corner_adv_risk(const Vector& beta, const Dataset& d, double delta) {
  double total = 0.0;
  for (Index i = 0; i < d.n(); ++i) total += corner_max(beta, d.X().row(i).transpose(), d.y()(i), delta);
  return total / static_cast<double>(d.n());
}

// Uniform direction on the unit l2 sphere scaled by a radius in [0, r].
inline Vector ball_point(Index m, double r, Rng& rng, bool on_surface) {
  Vector v = rng.normal_vector(m);
  const double norm = v.norm();
  if (norm == 0.0) return Vector::Zero(m);
  const double radius = on_surface ? r : r * rng.uniform();
  return v * (radius / norm);
}

// Point of the l_inf box of radius r: either a random corner or uniform.
inline Vector box_point(Index m, double r, Rng& rng, bool corner) {
  Vector v(m);
  for (Index j = 0; j < m; ++j) v(j) = corner ? (rng.uniform() < 0.5 ? -r : r) : rng.uniform(-r, r);
  return v;
}

// Monte-Carlo estimate of max over ||dx||_p <= delta of (y - (x + dx)^T beta)^2.
inline double mc_inner_max(const Vector& beta, const Vector& x, double y, double delta, bool linf,
                           int draws, Rng& rng) {
  double best = (y - x.dot(beta)) * (y - x.dot(beta));
  for (int k = 0; k < draws; ++k) {
    const bool edge = k % 2 == 0;
    const Vector dx = linf ? box_point(x.size(), delta, rng, edge) : ball_point(x.size(), delta, rng, edge);
    const double r = y - (x + dx).dot(beta);
    best = std::max(best, r * r);
  }
  return best;
}

inline Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& at,
                                double step = 1e-6) {
  Vector g(at.size());
  for (Index j = 0; j < at.size(); ++j) {
    Vector hi = at, lo = at;
    hi(j) += step;
    lo(j) -= step;
    g(j) = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

// min ||beta||_1 s.t. X beta = y by trying every basis of n columns.
inline double vertex_enumeration_l1(const Matrix& X, const Vector& y) {
  const Index n = X.rows(), m = X.cols();
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> pick(static_cast<std::size_t>(m), false);
  std::fill(pick.begin(), pick.begin() + n, true);
  do {
    Matrix B(n, n);
    std::vector<Index> cols;
    for (Index j = 0; j < m; ++j)
      if (pick[static_cast<std::size_t>(j)]) cols.push_back(j);
    for (Index k = 0; k < n; ++k) B.col(k) = X.col(cols[static_cast<std::size_t>(k)]);
    Eigen::FullPivLU<Matrix> lu(B);
    if (lu.rank() < n) continue;
    const Vector b = lu.solve(y);
    if ((B * b - y).norm() > 1e-9 * (1.0 + y.norm())) continue;
    best = std::min(best, b.lpNorm<1>());
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

// X^T (X X^T)^{-1} y by a direct dense solve.
inline Vector normal_equations_min_l2(const Matrix& X, const Vector& y) {
  const Matrix G = X * X.transpose();
  return X.transpose() * G.fullPivLu().solve(y);
}

inline double soft_threshold(double v, double t) {
  return v > t ? v - t : (v < -t ? v + t : 0.0);
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace oracle
