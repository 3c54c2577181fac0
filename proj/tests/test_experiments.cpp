#include "advreg/experiments.hpp"
#include "advreg/objective.hpp"
#include "advreg/solvers.hpp"
#include "advreg/thresholds.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace advreg;

TEST_CASE("isotropic generator: noiseless zero signal gives y = 0") {
  IsotropicSpec spec;
  spec.n = 20;
  spec.m = 5;
  spec.sigma2 = 0.0;
  Rng rng(1);
  const Dataset d = sample_isotropic(Vector::Zero(5), 20, 4.0, 0.0, rng);
  CHECK(d.y().isZero(0.0));
  CHECK(d.X().cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("isotropic generator: feature covariance is r2 I") {
  IsotropicSpec spec;
  spec.n = 10000;
  spec.m = 2;
  spec.r2 = 4.0;
  const IsotropicSample s = generate_isotropic(spec);
  const Matrix& X = s.data.X();
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Matrix centered = X.rowwise() - mean;
  const Matrix cov = centered.transpose() * centered / static_cast<double>(spec.n - 1);
  CHECK(std::abs(cov(0, 0) - 4.0) <= 0.2);
  CHECK(std::abs(cov(1, 1) - 4.0) <= 0.2);
  CHECK(std::abs(cov(0, 1)) <= 0.2);
  // Residual variance is sigma2.
  const Vector noise = s.data.y() - X * s.beta_star;
  CHECK(std::abs(noise.squaredNorm() / spec.n - 1.0) <= 0.05);
}

TEST_CASE("isotropic generator is deterministic per seed") {
  IsotropicSpec spec;
  spec.n = 15;
  spec.m = 30;
  spec.noise_seed = 9;
  const IsotropicSample a = generate_isotropic(spec);
  const IsotropicSample b = generate_isotropic(spec);
  CHECK(a.data.X() == b.data.X());
  CHECK(a.data.y() == b.data.y());
  CHECK(a.beta_star == b.beta_star);
  spec.noise_seed = 10;
  const IsotropicSample c = generate_isotropic(spec);
  CHECK(c.beta_star == a.beta_star);
  CHECK(c.data.X() != a.data.X());
}

TEST_CASE("isotropic spec validation") {
  IsotropicSpec spec;
  spec.r2 = 0.0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgumentError);
  spec = IsotropicSpec{};
  spec.sigma2 = -1.0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgumentError);
  spec = IsotropicSpec{};
  spec.n = 0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgumentError);
}

TEST_CASE("latent generator: W has orthogonal columns scaled by m/d") {
  LatentSpec spec;
  spec.m = 40;
  spec.d = 20;
  const LatentSample s = generate_latent(spec);
  const Matrix& W = s.truth.W;
  CHECK(W.rows() == 40);
  CHECK(W.cols() == 20);
  CHECK((W.transpose() * W - 2.0 * Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(s.data.n() == 100);
  CHECK(s.data.m() == 40);

  const LatentSample again = generate_latent(spec);
  CHECK(again.data.X() == s.data.X());
  CHECK(again.data.y() == s.data.y());
}

TEST_CASE("latent generator: noiseless degenerate case") {
  LatentTruth truth;
  truth.W = Matrix::Identity(5, 5);
  Rng t(3);
  truth.theta = t.normal_vector(5);
  Rng rng(4);
  const Dataset d = sample_latent(truth, 30, 0.0, 0.0, rng);
  CHECK((d.y() - d.X() * truth.theta).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("latent generator: signal and feature noise have equal power") {
  Rng rng(77);
  const LatentTruth truth = draw_latent_truth(40, 20, rng);
  double signal = 0.0, noise = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vector z = rng.normal_vector(20);
    const Vector u = rng.normal_vector(40);
    signal += (truth.W * z).squaredNorm();
    noise += u.squaredNorm();
  }
  CHECK(std::abs(signal / 1000.0 - 40.0) <= 4.0);
  CHECK(std::abs(signal / noise - 1.0) <= 0.1);
}

TEST_CASE("latent spec rejects m < d") {
  LatentSpec spec;
  spec.m = 10;
  spec.d = 20;
  CHECK_THROWS_AS(spec.validate(), InvalidArgumentError);
  CHECK_THROWS_AS(generate_latent(spec), InvalidArgumentError);
}

TEST_CASE("metrics against direct loops") {
  const Dataset train = oracle::gaussian_data(12, 5, 1);
  const Dataset test = oracle::gaussian_data(9, 5, 2);
  Rng rng(3);
  const Vector beta = rng.normal_vector(5);
  const Metrics mt = metrics(beta, train, test);
  CHECK(mt.train_mse == doctest::Approx(oracle::naive_mse(beta, train)).epsilon(1e-13));
  CHECK(mt.test_mse == doctest::Approx(oracle::naive_mse(beta, test)).epsilon(1e-13));
  double mean = 0.0;
  for (Index i = 0; i < test.n(); ++i) mean += test.y()(i) / test.n();
  double var = 0.0;
  for (Index i = 0; i < test.n(); ++i) var += (test.y()(i) - mean) * (test.y()(i) - mean) / test.n();
  CHECK(mt.nmse == doctest::Approx(mt.test_mse / var).epsilon(1e-13));
  CHECK(mt.l1_norm == doctest::Approx(beta.cwiseAbs().sum()));
  CHECK(mt.l2_norm == doctest::Approx(std::sqrt(beta.squaredNorm())));
  CHECK(mt.nonzero_count == 5);
  CHECK_THROWS_AS(metrics(Vector::Zero(4), train, test), DimensionError);
}

TEST_CASE("metrics of an interpolator and of zero") {
  const Dataset d = oracle::gaussian_data(4, 10, 5);
  const Vector beta = min_l2_interpolator(d).beta;
  CHECK(metrics(beta, d, d).train_mse <= 1e-20);

  Vector y(4);
  y << 1, -1, 2, -2;
  const Dataset centered = validate_dataset(Matrix::Ones(4, 1), y);
  const Metrics z = metrics(Vector::Zero(1), centered, centered);
  CHECK(z.nmse == doctest::Approx(1.0));
  CHECK(z.nonzero_count == 0);
}

TEST_CASE("log grid") {
  const auto g = log_grid(1e-3, 10.0);
  CHECK(g.size() == 200);
  CHECK(g.front() == doctest::Approx(10.0));
  CHECK(g.back() == doctest::Approx(1e-3));
  for (std::size_t k = 1; k < g.size(); ++k) {
    CHECK(g[k] < g[k - 1]);
    CHECK(std::log(g[k - 1] / g[k]) == doctest::Approx(std::log(1e4) / 199.0));
  }
  CHECK(log_grid(2.0, 2.0, 1) == std::vector<double>{2.0});
  CHECK_THROWS_AS(log_grid(0.0, 1.0), InvalidArgumentError);
  CHECK_THROWS_AS(log_grid(2.0, 1.0), InvalidArgumentError);
}

TEST_CASE("regularization path endpoints: zero at huge delta, least squares at tiny delta") {
  const Dataset d = oracle::standardized_data(40, 5, 11);
  const Vector ols = fit_ols(d).beta;
  for (EstimatorKind kind : {EstimatorKind::adversarial, EstimatorKind::lasso, EstimatorKind::ridge,
                             EstimatorKind::sqrt_lasso}) {
    const auto path = regularization_path(d, kind, log_grid(1e-7, 1e6, 30));
    REQUIRE(path.size() == 30);
    CHECK(path.front().delta == doctest::Approx(1e6));
    CHECK(path.front().l2_norm <= 1e-5);
    CHECK((path.back().beta - ols).norm() <= 1e-3 * ols.norm());
    for (const auto& rec : path) {
      CHECK(rec.converged);
      CHECK(rec.nonzero_count <= 5);
      CHECK(std::isfinite(rec.train_adv_objective));
      CHECK(rec.train_mse == doctest::Approx(mse(rec.beta, d)));
      CHECK(rec.train_adv_objective == doctest::Approx(adv_risk(rec.beta, d, AttackBudget(rec.delta, NormOrder::Linf))));
    }
  }
}

TEST_CASE("regularization path sorts its grid and rejects bad input") {
  const Dataset d = oracle::standardized_data(20, 3, 2);
  const auto path = regularization_path(d, EstimatorKind::lasso, {0.01, 1.0, 0.1});
  CHECK(path[0].delta == 1.0);
  CHECK(path[1].delta == 0.1);
  CHECK(path[2].delta == 0.01);
  CHECK_THROWS_AS(regularization_path(d, EstimatorKind::lasso, {}), InvalidArgumentError);
  CHECK_THROWS_AS(regularization_path(d, EstimatorKind::lasso, {0.1, -1.0}), InvalidArgumentError);
}

TEST_CASE("warm-started paths agree with cold fits") {
  const Dataset d = oracle::gaussian_data(10, 25, 31);
  const auto grid = log_grid(1e-4, 5.0, 40);
  for (EstimatorKind kind : {EstimatorKind::adversarial, EstimatorKind::lasso}) {
    const auto path = regularization_path(d, kind, grid);
    for (std::size_t k : {0u, 4u, 9u, 13u, 17u, 22u, 26u, 30u, 35u, 39u}) {
      EstimatorSpec spec;
      spec.kind = kind;
      spec.delta = grid[k];
      if (kind == EstimatorKind::adversarial) spec.budget = AttackBudget(grid[k], NormOrder::Linf);
      const FitResult cold = fit(d, spec);
      REQUIRE(cold.converged);
      REQUIRE(path[k].converged);
      const double warm_obj = kind == EstimatorKind::adversarial
                                  ? path[k].train_adv_objective
                                  : path[k].train_mse + grid[k] * path[k].l1_norm;
      CHECK(oracle::rel_diff(warm_obj, cold.objective) <= 1e-7);
    }
  }
}

TEST_CASE("transition detector") {
  auto record = [](double delta, double mse_value) {
    PathRecord r;
    r.delta = delta;
    r.train_mse = mse_value;
    return r;
  };
  CHECK(detect_interpolation_transition({record(0.1, 0), record(0.2, 0), record(0.3, 0)}) == 0.3);
  CHECK(detect_interpolation_transition({record(0.1, 1), record(0.2, 2)}) == 0.0);
  CHECK(detect_interpolation_transition({record(0.1, 0), record(0.2, 1e-7), record(0.3, 1e-3), record(0.4, 0)}) == 0.2);
  CHECK_THROWS_AS(detect_interpolation_transition({}), InvalidArgumentError);
  CHECK_THROWS_AS(detect_interpolation_transition({record(0.2, 0), record(0.1, 0)}), InvalidArgumentError);
}

TEST_CASE("adversarial path interpolates up to the transition and above gamma_min") {
  IsotropicSpec spec;
  spec.n = 12;
  spec.m = 36;
  spec.beta_star_seed = 3;
  spec.noise_seed = 4;
  const Dataset d = generate_isotropic(spec).data;
  const double gmin = gamma_min(d.X());
  const auto path = regularization_path(d, EstimatorKind::adversarial, log_grid(1e-2 * gmin, 1e3 * gmin, 60));
  std::vector<PathRecord> ascending(path.rbegin(), path.rend());
  const double bar = detect_interpolation_transition(ascending);
  CHECK(bar >= 0.99 * gmin);
  for (const auto& rec : ascending) {
    if (rec.delta <= bar) CHECK(rec.train_mse <= 1e-6);
    // Inside the certified region the fitted point carries the certificate.
    if (rec.delta < gmin) {
      CHECK(check_interpolation_certificate(rec.beta, d, AttackBudget(rec.delta, NormOrder::Linf)).holds);
    }
  }
}

TEST_CASE("ridge and lasso paths do not interpolate for delta >= 1e-4") {
  IsotropicSpec spec;
  spec.n = 12;
  spec.m = 36;
  const Dataset d = generate_isotropic(spec).data;
  for (EstimatorKind kind : {EstimatorKind::ridge, EstimatorKind::lasso}) {
    const auto path = regularization_path(d, kind, log_grid(1e-4, 10.0, 30));
    for (const auto& rec : path) CHECK(rec.train_mse > 0.0);
  }
}

TEST_CASE("estimator labels") {
  const EstimatorSpec inf = estimator_from_label("adv-inf", 0.1);
  CHECK(inf.kind == EstimatorKind::adversarial);
  CHECK(inf.budget->p() == NormOrder::Linf);
  CHECK(estimator_from_label("adv-2", 0.1).budget->p() == NormOrder::L2);
  CHECK(estimator_from_label("lasso", 0.3).delta == 0.3);
  CHECK(estimator_uses_delta("ridge"));
  CHECK_FALSE(estimator_uses_delta("min-l1"));
  CHECK_FALSE(estimator_uses_delta("ols"));
  CHECK_THROWS_AS(estimator_from_label("nope", 0.1), InvalidArgumentError);
}

TEST_CASE("quantiles") {
  CHECK(quantile({3, 1, 2, 4, 5}, 0.5) == 3.0);
  CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(std::isnan(quantile({}, 0.5)));
  const Quantiles q = summarize({5, 1, 4, 2, 3});
  CHECK(q.q25 == 2.0);
  CHECK(q.median == 3.0);
  CHECK(q.q75 == 4.0);
}

TEST_CASE("feature sweep shape, ordering and determinism") {
  SweepSpec spec;
  IsotropicSpec iso;
  iso.n = 15;
  spec.design = iso;
  spec.m_grid = {5, 10, 30};
  spec.deltas = {0.5, 0.05};
  spec.estimators = {"adv-inf", "lasso", "ridge", "min-l2"};
  spec.repetitions = 5;
  spec.n_test = 20;
  spec.seed = 17;
  const auto a = feature_sweep(spec);
  REQUIRE(a.size() == 3 * 2 * 4);
  for (const auto& rec : a) {
    if (rec.estimator == "min-l2" && rec.m < 15) {
      CHECK(rec.failures == 5);
      continue;
    }
    CHECK(rec.successes == 5);
    CHECK(rec.train_mse.q25 <= rec.train_mse.median);
    CHECK(rec.train_mse.median <= rec.train_mse.q75);
    CHECK(rec.test_mse.q25 <= rec.test_mse.q75);
    CHECK(rec.l2_norm.q25 <= rec.l2_norm.q75);
  }
  // Failed cells summarize to NaN.
  auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  spec.jobs = 3;
  const auto b = feature_sweep(spec);
  REQUIRE(b.size() == a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].m == b[k].m);
    CHECK(a[k].estimator == b[k].estimator);
    CHECK(same(a[k].train_mse.median, b[k].train_mse.median));
    CHECK(same(a[k].test_mse.q25, b[k].test_mse.q25));
    CHECK(same(a[k].l2_norm.q75, b[k].l2_norm.q75));
    CHECK(a[k].failures == b[k].failures);
  }
}

TEST_CASE("ridge sweep cell at huge delta predicts zero") {
  SweepSpec spec;
  IsotropicSpec iso;
  iso.n = 20;
  spec.design = iso;
  spec.m_grid = {8};
  spec.deltas = {1e9};
  spec.estimators = {"ridge"};
  spec.repetitions = 3;
  const auto rec = feature_sweep(spec).at(0);
  CHECK(rec.l2_norm.q75 <= 1e-6);
  CHECK(rec.train_mse.median > 0.1);
}

TEST_CASE("adversarial training error drops abruptly with m, lasso decays gradually") {
  SweepSpec spec;
  IsotropicSpec iso;
  iso.n = 20;
  spec.design = iso;
  spec.m_grid = {5, 20, 40, 80, 160};
  spec.deltas = {0.01};
  spec.estimators = {"adv-inf", "lasso"};
  spec.repetitions = 3;
  spec.seed = 5;
  const auto recs = feature_sweep(spec);
  std::vector<double> adv, lasso;
  for (const auto& r : recs) (r.estimator == "adv-inf" ? adv : lasso).push_back(r.train_mse.median);
  // Underparameterized: both clearly positive.
  CHECK(adv.front() > 1e-2);
  CHECK(lasso.front() > 1e-2);
  // Overparameterized: adversarial training interpolates exactly; lasso does not.
  CHECK(adv.back() <= 1e-6);
  CHECK(lasso.back() > 1e-6);
}

TEST_CASE("latent sweep runs") {
  SweepSpec spec;
  LatentSpec lat;
  lat.n = 15;
  lat.d = 5;
  spec.design = lat;
  spec.m_grid = {5, 10};
  spec.deltas = {0.1};
  spec.estimators = {"adv-2", "sqrt-lasso"};
  spec.repetitions = 2;
  const auto recs = feature_sweep(spec);
  CHECK(recs.size() == 4);
  for (const auto& r : recs) CHECK(r.successes == 2);
  spec.m_grid = {3};
  CHECK_THROWS_AS(feature_sweep(spec), InvalidArgumentError);
}
