#include "advreg/experiments.hpp"

#include "advreg/objective.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace advreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_positive(Index value, const char* name) {
  if (value <= 0) throw InvalidArgumentError(std::string(name) + " must be positive");
}

void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw InvalidArgumentError(std::string(name) + " must be finite and nonnegative");
  }
}

}  // namespace

void IsotropicSpec::validate() const {
  require_positive(n, "n");
  require_positive(m, "m");
  require_nonnegative(r2, "r2");
  if (r2 == 0.0) throw InvalidArgumentError("r2 must be positive");
  require_nonnegative(sigma2, "sigma2");
}

Vector draw_isotropic_beta_star(Index m, Rng& rng) {
  return rng.normal_vector(m, 1.0 / std::sqrt(static_cast<double>(m)));
}

Dataset sample_isotropic(const Vector& beta_star, Index n, double r2, double sigma2, Rng& rng) {
  Matrix X = rng.normal_matrix(n, beta_star.size(), std::sqrt(r2));
  const Vector noise = rng.normal_vector(n, std::sqrt(sigma2));
  Vector y = X * beta_star + noise;
  return validate_dataset(std::move(X), std::move(y));
}

IsotropicSample generate_isotropic(const IsotropicSpec& spec) {
  spec.validate();
  Rng truth_rng(spec.beta_star_seed);
  Vector beta_star = draw_isotropic_beta_star(spec.m, truth_rng);
  Rng sample_rng(spec.noise_seed);
  Dataset data = sample_isotropic(beta_star, spec.n, spec.r2, spec.sigma2, sample_rng);
  return {std::move(data), std::move(beta_star)};
}

void LatentSpec::validate() const {
  require_positive(n, "n");
  require_positive(m, "m");
  require_positive(d, "d");
  if (m < d) {
    throw InvalidArgumentError("latent model needs m >= d (m = " + std::to_string(m) +
                               ", d = " + std::to_string(d) + ")");
  }
  require_nonnegative(sigma_xi, "sigma_xi");
}

LatentTruth draw_latent_truth(Index m, Index d, Rng& rng) {
  if (m < d) throw InvalidArgumentError("latent model needs m >= d");
  const Matrix G = rng.normal_matrix(m, d);
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ() * Matrix::Identity(m, d);
  LatentTruth truth;
  truth.W = std::sqrt(static_cast<double>(m) / static_cast<double>(d)) * Q;
  truth.theta = rng.normal_vector(d, 1.0 / std::sqrt(static_cast<double>(d)));
  return truth;
}

Dataset sample_latent(const LatentTruth& truth, Index n, double sigma_xi, double feature_noise,
                      Rng& rng) {
  const Index m = truth.W.rows();
  const Index d = truth.W.cols();
  if (truth.theta.size() != d) throw DimensionError("theta length must equal W's column count");
  const Matrix Z = rng.normal_matrix(n, d);
  const Matrix U = rng.normal_matrix(n, m);
  const Vector xi = rng.normal_vector(n, sigma_xi);
  Matrix X = Z * truth.W.transpose();
  if (feature_noise != 0.0) X += feature_noise * U;
  Vector y = Z * truth.theta;
  if (sigma_xi != 0.0) y += xi;
  return validate_dataset(std::move(X), std::move(y));
}

LatentSample generate_latent(const LatentSpec& spec) {
  spec.validate();
  Rng truth_rng(derive_seed(spec.seed, {0}));
  LatentTruth truth = draw_latent_truth(spec.m, spec.d, truth_rng);
  Rng sample_rng(derive_seed(spec.seed, {1}));
  Dataset data = sample_latent(truth, spec.n, spec.sigma_xi, 1.0, sample_rng);
  return {std::move(data), std::move(truth)};
}

Metrics metrics(const Vector& beta, const Dataset& train, const Dataset& test) {
  if (beta.size() != train.m() || beta.size() != test.m()) {
    throw DimensionError("coefficient length " + std::to_string(beta.size()) +
                         " does not match train (" + std::to_string(train.m()) + ") or test (" +
                         std::to_string(test.m()) + ") features");
  }
  Metrics out;
  out.train_mse = mse(beta, train);
  out.test_mse = mse(beta, test);
  const Vector& yt = test.y();
  const double variance = (yt.array() - yt.mean()).square().mean();
  out.nmse = variance > 0.0 ? out.test_mse / variance : kNaN;
  out.l1_norm = beta.lpNorm<1>();
  out.l2_norm = beta.norm();
  out.nonzero_count = count_nonzero(beta);
  return out;
}

std::vector<double> log_grid(double lo, double hi, Index count) {
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
    throw InvalidArgumentError("log grid needs 0 < lo <= hi");
  }
  if (count <= 0) throw InvalidArgumentError("log grid needs at least one point");
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = hi;
    return grid;
  }
  const double a = std::log10(hi);
  const double b = std::log10(lo);
  for (Index k = 0; k < count; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(count - 1);
    grid[static_cast<std::size_t>(k)] = std::pow(10.0, a + (b - a) * frac);
  }
  grid.front() = hi;
  grid.back() = lo;
  return grid;
}

std::vector<PathRecord> regularization_path(const Dataset& data, EstimatorKind kind,
                                            const std::vector<double>& deltas,
                                            const SolverConfig& config, NormOrder p) {
  if (deltas.empty()) throw InvalidArgumentError("regularization path needs a nonempty grid");
  for (double d : deltas) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw InvalidArgumentError("path deltas must be positive and finite");
    }
  }
  std::vector<double> grid = deltas;
  std::sort(grid.begin(), grid.end(), std::greater<>());

  std::vector<PathRecord> path;
  path.reserve(grid.size());
  WarmStart warm;
  for (double delta : grid) {
    EstimatorSpec spec;
    spec.kind = kind;
    spec.delta = delta;
    spec.config = config;
    if (kind == EstimatorKind::adversarial) spec.budget = AttackBudget(delta, p);
    const FitResult fitted = fit(data, spec, warm);
    warm = fitted.beta;

    PathRecord rec;
    rec.delta = delta;
    rec.beta = fitted.beta;
    rec.train_mse = mse(fitted.beta, data);
    rec.train_adv_objective = adv_risk(fitted.beta, data, AttackBudget(delta, p));
    rec.l1_norm = fitted.beta.lpNorm<1>();
    rec.l2_norm = fitted.beta.norm();
    rec.nonzero_count = count_nonzero(fitted.beta);
    rec.converged = fitted.converged;
    path.push_back(std::move(rec));
  }
  return path;
}

double detect_interpolation_transition(const std::vector<PathRecord>& ascending, double tol) {
  if (ascending.empty()) throw InvalidArgumentError("transition detection needs a nonempty path");
  for (std::size_t k = 1; k < ascending.size(); ++k) {
    if (ascending[k].delta < ascending[k - 1].delta) {
      throw InvalidArgumentError("transition detection needs a path sorted by ascending delta");
    }
  }
  double last = 0.0;
  for (const auto& rec : ascending) {
    if (!(rec.train_mse <= tol)) break;
    last = rec.delta;
  }
  return last;
}

EstimatorSpec estimator_from_label(const std::string& label, double delta,
                                   const SolverConfig& config) {
  EstimatorSpec spec;
  spec.delta = delta;
  spec.config = config;
  if (label == "adv-inf" || label == "adv") {
    spec.kind = EstimatorKind::adversarial;
    spec.budget = AttackBudget(delta, NormOrder::Linf);
  } else if (label == "adv-2") {
    spec.kind = EstimatorKind::adversarial;
    spec.budget = AttackBudget(delta, NormOrder::L2);
  } else {
    spec.kind = parse_estimator_kind(label);
  }
  return spec;
}

bool estimator_uses_delta(const std::string& label) {
  const EstimatorKind kind = estimator_from_label(label, 0.0).kind;
  return kind != EstimatorKind::ols && kind != EstimatorKind::min_l1_interp &&
         kind != EstimatorKind::min_l2_interp;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Quantiles summarize(const std::vector<double>& values) {
  return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

void SweepSpec::validate() const {
  std::visit([](const auto& d) { d.validate(); }, design);
  if (m_grid.empty()) throw InvalidArgumentError("sweep needs at least one m");
  for (std::size_t k = 0; k < m_grid.size(); ++k) {
    require_positive(m_grid[k], "m");
    if (k > 0 && m_grid[k] <= m_grid[k - 1]) {
      throw InvalidArgumentError("sweep m grid must be strictly ascending");
    }
  }
  if (const auto* latent = std::get_if<LatentSpec>(&design)) {
    if (m_grid.front() < latent->d) {
      throw InvalidArgumentError("latent sweep needs every m >= d");
    }
  }
  if (deltas.empty()) throw InvalidArgumentError("sweep needs at least one delta");
  for (double d : deltas) require_nonnegative(d, "delta");
  if (estimators.empty()) throw InvalidArgumentError("sweep needs at least one estimator");
  for (const auto& label : estimators) estimator_from_label(label, 0.0);
  if (repetitions <= 0) throw InvalidArgumentError("repetitions must be positive");
  require_positive(n_test, "n_test");
  if (jobs <= 0) throw InvalidArgumentError("jobs must be positive");
  config.validate();
}

namespace {

struct CellOutcome {
  bool ok = false;
  bool converged = false;
  double train_mse = kNaN;
  double test_mse = kNaN;
  double l2_norm = kNaN;
  std::string error;
};

struct UnitData {
  Dataset train;
  Dataset test;
};

UnitData make_unit_data(const SweepSpec& spec, Index m, int rep) {
  const auto um = static_cast<std::uint64_t>(m);
  const auto ur = static_cast<std::uint64_t>(rep);
  Rng truth_rng(derive_seed(spec.seed, {um, ur, 0}));
  Rng train_rng(derive_seed(spec.seed, {um, ur, 1}));
  Rng test_rng(derive_seed(spec.seed, {um, ur, 2}));
  if (const auto* iso = std::get_if<IsotropicSpec>(&spec.design)) {
    const Vector beta_star = draw_isotropic_beta_star(m, truth_rng);
    return {sample_isotropic(beta_star, iso->n, iso->r2, iso->sigma2, train_rng),
            sample_isotropic(beta_star, spec.n_test, iso->r2, iso->sigma2, test_rng)};
  }
  const auto& lat = std::get<LatentSpec>(spec.design);
  const LatentTruth truth = draw_latent_truth(m, lat.d, truth_rng);
  return {sample_latent(truth, lat.n, lat.sigma_xi, 1.0, train_rng),
          sample_latent(truth, spec.n_test, lat.sigma_xi, 1.0, test_rng)};
}

CellOutcome run_cell(const UnitData& unit, const std::string& label, double delta,
                     const SolverConfig& config) {
  CellOutcome out;
  try {
    const FitResult fitted = fit(unit.train, estimator_from_label(label, delta, config));
    const Metrics mt = metrics(fitted.beta, unit.train, unit.test);
    out.ok = true;
    out.converged = fitted.converged;
    out.train_mse = mt.train_mse;
    out.test_mse = mt.test_mse;
    out.l2_norm = mt.l2_norm;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

std::vector<SweepRecord> feature_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t n_m = spec.m_grid.size();
  const std::size_t n_rep = static_cast<std::size_t>(spec.repetitions);
  const std::size_t n_delta = spec.deltas.size();
  const std::size_t n_est = spec.estimators.size();
  const std::size_t cells_per_unit = n_delta * n_est;

  // outcomes[unit][delta * n_est + estimator], unit = m_index * n_rep + rep.
  std::vector<std::vector<CellOutcome>> outcomes(n_m * n_rep);

  auto run_unit = [&](std::size_t unit) {
    const Index m = spec.m_grid[unit / n_rep];
    const int rep = static_cast<int>(unit % n_rep);
    std::vector<CellOutcome> cells(cells_per_unit);
    std::optional<UnitData> data;
    try {
      data.emplace(make_unit_data(spec, m, rep));
    } catch (const std::exception& e) {
      for (auto& c : cells) c.error = e.what();
      outcomes[unit] = std::move(cells);
      return;
    }
    for (std::size_t e = 0; e < n_est; ++e) {
      const std::string& label = spec.estimators[e];
      if (!estimator_uses_delta(label)) {
        const CellOutcome shared = run_cell(*data, label, 0.0, spec.config);
        for (std::size_t d = 0; d < n_delta; ++d) cells[d * n_est + e] = shared;
        continue;
      }
      for (std::size_t d = 0; d < n_delta; ++d) {
        cells[d * n_est + e] = run_cell(*data, label, spec.deltas[d], spec.config);
      }
    }
    outcomes[unit] = std::move(cells);
  };

  const std::size_t units = outcomes.size();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), units);
  if (workers <= 1) {
    for (std::size_t u = 0; u < units; ++u) run_unit(u);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t u = next++; u < units; u = next++) run_unit(u);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<SweepRecord> records;
  records.reserve(n_m * cells_per_unit);
  for (std::size_t mi = 0; mi < n_m; ++mi) {
    for (std::size_t d = 0; d < n_delta; ++d) {
      for (std::size_t e = 0; e < n_est; ++e) {
        SweepRecord rec;
        rec.m = spec.m_grid[mi];
        rec.delta = spec.deltas[d];
        rec.estimator = spec.estimators[e];
        std::vector<double> train, test, l2;
        for (std::size_t rep = 0; rep < n_rep; ++rep) {
          const CellOutcome& c = outcomes[mi * n_rep + rep][d * n_est + e];
          if (!c.ok) {
            ++rec.failures;
            rec.last_error = c.error;
            continue;
          }
          ++rec.successes;
          if (!c.converged) ++rec.not_converged;
          train.push_back(c.train_mse);
          test.push_back(c.test_mse);
          l2.push_back(c.l2_norm);
        }
        rec.train_mse = summarize(train);
        rec.test_mse = summarize(test);
        rec.l2_norm = summarize(l2);
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

}  // namespace advreg
