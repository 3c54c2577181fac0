#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace advreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using RngSeed = std::uint64_t;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class EmptyDataError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Training data: X holds one sample per row, y one response per sample.
// Only constructible through validate_dataset(), so every instance satisfies
// n >= 1, m >= 1, X.rows() == y.size() and all entries finite.
class Dataset {
 public:
  const Matrix& X() const { return X_; }
  const Vector& y() const { return y_; }
  Index n() const { return X_.rows(); }
  Index m() const { return X_.cols(); }

  friend Dataset validate_dataset(Matrix raw_X, Vector raw_y);

 private:
  Dataset(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y)) {}

  Matrix X_;
  Vector y_;
};

Dataset validate_dataset(Matrix raw_X, Vector raw_y);

// Attack norm order. The dual (regularizer) norm is derived: p = 2 pairs with
// q = 2 and p = inf pairs with q = 1.
enum class NormOrder { L2, Linf };

class AttackBudget {
 public:
  AttackBudget(double delta, NormOrder p);

  double delta() const { return delta_; }
  NormOrder p() const { return p_; }
  // Conjugate exponent q as a number (2 or 1).
  double q() const { return p_ == NormOrder::L2 ? 2.0 : 1.0; }
  // Attack-norm exponent p as a number (2 or +inf).
  double p_value() const;

 private:
  double delta_;
  NormOrder p_;
};

std::string to_string(NormOrder p);
NormOrder parse_norm_order(const std::string& text);

// ||v||_q for the conjugate norm of the budget.
double dual_norm(const Vector& v, NormOrder p);
// ||v||_p for the attack norm of the budget.
double attack_norm(const Vector& v, NormOrder p);

struct SmoothingSchedule {
  double initial = 1e-2;
  double decay = 0.1;
  double final = 1e-10;
};

struct SolverConfig {
  long max_iterations = 200000;
  // Relative stationarity / duality-gap target.
  double tolerance = 1e-8;
  SmoothingSchedule smoothing;
  RngSeed seed = 0;

  void validate() const;
};

struct FitResult {
  Vector beta;
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
  double optimality_residual = 0.0;
  std::string method_tag;
};

// Seeded stream of pseudo-random numbers. One engine per stream; identical
// seeds give bit-identical draws on a given platform.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(seed) {}

  // stddev = 0 is allowed and returns mean.
  double normal(double mean = 0.0, double stddev = 1.0) { return mean + stddev * standard_(engine_); }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  Matrix normal_matrix(Index rows, Index cols, double stddev = 1.0);
  Vector normal_vector(Index size, double stddev = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> standard_;
};

// Mixes several integers into one seed (splitmix64 finalizer per step).
RngSeed derive_seed(RngSeed base, std::initializer_list<std::uint64_t> parts);

bool all_finite(const Matrix& M);

}  // namespace advreg
