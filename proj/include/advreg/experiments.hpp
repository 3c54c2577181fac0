#pragma once

#include "advreg/core.hpp"
#include "advreg/solvers.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace advreg {

// x_i ~ N(0, r2 I_m), y_i = x_i^T beta* + eps_i with eps_i ~ N(0, sigma2) and
// beta* ~ N(0, I_m / m). beta* comes from beta_star_seed; X and eps from
// noise_seed.
struct IsotropicSpec {
  Index n = 100;
  Index m = 10;
  double r2 = 4.0;
  double sigma2 = 1.0;
  RngSeed beta_star_seed = 0;
  RngSeed noise_seed = 1;

  void validate() const;
};

struct IsotropicSample {
  Dataset data;
  Vector beta_star;
};

IsotropicSample generate_isotropic(const IsotropicSpec& spec);
Vector draw_isotropic_beta_star(Index m, Rng& rng);
// Fresh samples for a known beta* (used for test sets).
Dataset sample_isotropic(const Vector& beta_star, Index n, double r2, double sigma2, Rng& rng);

// x = W z + u, y = theta^T z + xi with z ~ N(0, I_d), u ~ N(0, I_m),
// xi ~ N(0, sigma_xi^2), W^T W = (m/d) I_d and theta ~ N(0, I_d / d).
struct LatentSpec {
  Index n = 100;
  Index m = 40;
  Index d = 20;
  double sigma_xi = 0.1;
  RngSeed seed = 0;

  void validate() const;
};

struct LatentTruth {
  Matrix W;
  Vector theta;
};

struct LatentSample {
  Dataset data;
  LatentTruth truth;
};

LatentSample generate_latent(const LatentSpec& spec);
LatentTruth draw_latent_truth(Index m, Index d, Rng& rng);
// feature_noise scales u; 1 for the model above, 0 for the noiseless check.
Dataset sample_latent(const LatentTruth& truth, Index n, double sigma_xi, double feature_noise,
                      Rng& rng);

struct Metrics {
  double train_mse = 0.0;
  double test_mse = 0.0;
  double nmse = 0.0;
  double l1_norm = 0.0;
  double l2_norm = 0.0;
  Index nonzero_count = 0;
};

// nmse = test_mse / (population variance of test y).
Metrics metrics(const Vector& beta, const Dataset& train, const Dataset& test);

struct PathRecord {
  double delta = 0.0;
  Vector beta;
  double train_mse = 0.0;
  double train_adv_objective = 0.0;
  double l1_norm = 0.0;
  double l2_norm = 0.0;
  Index nonzero_count = 0;
  bool converged = true;
};

// `count` log-spaced values from hi down to lo.
std::vector<double> log_grid(double lo, double hi, Index count = 200);

// Fits `kind` along a descending grid, warm-starting each fit from the
// previous one. For the adversarial estimator `p` selects the attack norm;
// train_adv_objective is always the adversarial risk at (delta, p).
std::vector<PathRecord> regularization_path(const Dataset& data, EstimatorKind kind,
                                            const std::vector<double>& deltas,
                                            const SolverConfig& config = {},
                                            NormOrder p = NormOrder::Linf);

// Largest delta of an ascending path such that it and every smaller delta
// has train_mse <= tol; 0 when the first record does not interpolate.
double detect_interpolation_transition(const std::vector<PathRecord>& ascending,
                                       double tol = 1e-6);

// Estimator labels: adv-inf, adv-2, lasso, ridge, sqrt-lasso, ols, min-l1, min-l2.
EstimatorSpec estimator_from_label(const std::string& label, double delta,
                                   const SolverConfig& config = {});
bool estimator_uses_delta(const std::string& label);

struct Quantiles {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

// Linear interpolation between order statistics; NaN for an empty sample.
double quantile(std::vector<double> values, double prob);
Quantiles summarize(const std::vector<double>& values);

using Design = std::variant<IsotropicSpec, LatentSpec>;

struct SweepSpec {
  Design design = IsotropicSpec{};
  std::vector<Index> m_grid{10, 25, 50, 75, 100, 150, 200};
  std::vector<double> deltas{0.5, 0.1, 0.05, 0.01};
  std::vector<std::string> estimators{"adv-inf", "adv-2", "lasso", "ridge"};
  int repetitions = 10;
  Index n_test = 100;
  RngSeed seed = 0;
  int jobs = 1;
  SolverConfig config;

  void validate() const;
};

struct SweepRecord {
  Index m = 0;
  double delta = 0.0;
  std::string estimator;
  Quantiles train_mse;
  Quantiles test_mse;
  Quantiles l2_norm;
  int successes = 0;
  int not_converged = 0;
  int failures = 0;
  std::string last_error;
};

// Runs every (m, repetition) unit, possibly on several threads. Training and
// test data of a unit depend only on (seed, m, repetition), so all deltas and
// estimators see the same draws and thread scheduling never changes results.
std::vector<SweepRecord> feature_sweep(const SweepSpec& spec);

}  // namespace advreg
