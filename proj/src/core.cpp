#include "advreg/core.hpp"

#include <cmath>
#include <limits>

namespace advreg {

bool all_finite(const Matrix& M) { return M.allFinite(); }

Dataset validate_dataset(Matrix raw_X, Vector raw_y) {
  if (raw_X.rows() == 0 || raw_X.cols() == 0 || raw_y.size() == 0) {
    throw EmptyDataError("dataset must have at least one sample and one feature");
  }
  if (raw_X.rows() != raw_y.size()) {
    throw DimensionError("X has " + std::to_string(raw_X.rows()) + " rows but y has " +
                         std::to_string(raw_y.size()) + " entries");
  }
  if (!raw_X.allFinite()) throw NonFiniteError("X contains non-finite entries");
  if (!raw_y.allFinite()) throw NonFiniteError("y contains non-finite entries");
  return Dataset(std::move(raw_X), std::move(raw_y));
}

AttackBudget::AttackBudget(double delta, NormOrder p) : delta_(delta), p_(p) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw InvalidArgumentError("attack radius must be finite and nonnegative");
  }
}

double AttackBudget::p_value() const {
  return p_ == NormOrder::L2 ? 2.0 : std::numeric_limits<double>::infinity();
}

std::string to_string(NormOrder p) { return p == NormOrder::L2 ? "2" : "inf"; }

NormOrder parse_norm_order(const std::string& text) {
  if (text == "2") return NormOrder::L2;
  if (text == "inf" || text == "Inf" || text == "infinity") return NormOrder::Linf;
  throw InvalidArgumentError("unsupported norm order '" + text + "' (expected 2 or inf)");
}

double dual_norm(const Vector& v, NormOrder p) {
  return p == NormOrder::L2 ? v.norm() : v.lpNorm<1>();
}

double attack_norm(const Vector& v, NormOrder p) {
  return p == NormOrder::L2 ? v.norm() : v.lpNorm<Eigen::Infinity>();
}

void SolverConfig::validate() const {
  if (max_iterations <= 0) throw InvalidArgumentError("max_iterations must be positive");
  if (!(tolerance > 0.0)) throw InvalidArgumentError("tolerance must be positive");
  if (!(smoothing.final > 0.0) || !(smoothing.initial >= smoothing.final)) {
    throw InvalidArgumentError("smoothing schedule needs initial >= final > 0");
  }
  if (!(smoothing.decay > 0.0 && smoothing.decay < 1.0)) {
    throw InvalidArgumentError("smoothing decay must lie in (0, 1)");
  }
}

Matrix Rng::normal_matrix(Index rows, Index cols, double stddev) {
  Matrix M(rows, cols);
  // Fill row by row so the stream order matches "sample i, feature j".
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = normal(0.0, stddev);
  return M;
}

Vector Rng::normal_vector(Index size, double stddev) {
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = normal(0.0, stddev);
  return v;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

RngSeed derive_seed(RngSeed base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(base);
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace advreg
