// advreg: fit adversarially trained linear regression and its reference
// estimators, trace regularization paths, report interpolation thresholds,
// generate synthetic data and run feature sweeps.
//
// Every command that writes --out also writes <out>.manifest.json holding the
// fully resolved configuration; `advreg replay --manifest FILE` reruns it.

#include "advreg/core.hpp"
#include "advreg/experiments.hpp"
#include "advreg/objective.hpp"
#include "advreg/solvers.hpp"
#include "advreg/table_io.hpp"
#include "advreg/thresholds.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace advreg;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitInvalid = 2;

constexpr const char* kVersion = "0.1.0";

struct Outcome {
  std::string content;  // written to cfg["out"], or stdout when out is empty
  bool converged = true;
  json notes = json::object();
};

SolverConfig solver_config(const json& cfg) {
  SolverConfig config;
  config.tolerance = cfg.at("tol").get<double>();
  config.max_iterations = cfg.at("max_iter").get<long>();
  config.validate();
  return config;
}

Dataset load_data(const json& cfg) {
  return read_dataset_csv(cfg.at("data").get<std::string>(), cfg.at("target_col").get<std::string>());
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// ---- fit -------------------------------------------------------------------

Outcome run_fit(const json& cfg) {
  const Dataset data = load_data(cfg);
  const std::string method = cfg.at("method");
  const double delta = cfg.at("delta");
  const NormOrder p = parse_norm_order(cfg.at("p"));
  EstimatorSpec spec;
  spec.kind = parse_estimator_kind(method);
  spec.delta = delta;
  spec.config = solver_config(cfg);
  if (spec.kind == EstimatorKind::adversarial) spec.budget = AttackBudget(delta, p);
  const FitResult result = fit(data, spec);

  json doc;
  doc["method"] = method;
  if (spec.kind == EstimatorKind::adversarial) doc["p"] = to_string(p);
  doc["delta"] = delta;
  doc["n"] = data.n();
  doc["m"] = data.m();
  doc["coefficients"] = vector_json(result.beta);
  doc["objective"] = result.objective;
  doc["train_mse"] = mse(result.beta, data);
  doc["adv_objective"] = adv_risk(result.beta, data, AttackBudget(delta, p));
  doc["l1_norm"] = result.beta.lpNorm<1>();
  doc["l2_norm"] = result.beta.norm();
  doc["nonzero_count"] = count_nonzero(result.beta);
  doc["converged"] = result.converged;
  doc["iterations"] = result.iterations;
  doc["optimality_residual"] = result.optimality_residual;
  return {doc.dump(2) + "\n", result.converged, json::object()};
}

// ---- path ------------------------------------------------------------------

double default_grid_max(const Dataset& data, EstimatorKind kind, NormOrder p) {
  double top = 0.0;
  switch (kind) {
    case EstimatorKind::adversarial: top = adversarial_zero_threshold(data, p); break;
    case EstimatorKind::lasso:
    case EstimatorKind::ridge: top = lasso_zero_threshold(data); break;
    case EstimatorKind::sqrt_lasso: top = sqrt_lasso_zero_threshold(data); break;
    default: throw InvalidArgumentError("method '" + to_string(kind) + "' has no regularization path");
  }
  // Ridge never reaches zero; a decade past the lasso threshold is flat enough.
  const double factor = kind == EstimatorKind::ridge ? 10.0 : 2.0;
  return top > 0.0 ? factor * top : 1.0;
}

Outcome run_path(const json& cfg) {
  const Dataset data = load_data(cfg);
  const EstimatorKind kind = parse_estimator_kind(cfg.at("method"));
  const NormOrder p = parse_norm_order(cfg.at("p"));
  const auto grid = log_grid(cfg.at("grid_min"), cfg.at("grid_max"), cfg.at("grid_size").get<Index>());
  const auto path = regularization_path(data, kind, grid, solver_config(cfg), p);
  Outcome out;
  out.content = path_table(path).render();
  int failed = 0;
  for (const auto& rec : path) failed += rec.converged ? 0 : 1;
  out.converged = failed == 0;
  out.notes["not_converged"] = failed;
  return out;
}

// ---- thresholds ------------------------------------------------------------

Outcome run_thresholds(const json& cfg) {
  const Dataset data = load_data(cfg);
  const ThresholdReport report = interpolation_thresholds(data);
  json doc;
  doc["n"] = data.n();
  doc["m"] = data.m();
  doc["rank"] = numerical_rank(data.X());
  doc["gamma_min_X"] = report.gamma_min_X;
  doc["gamma_min_XQt"] = report.gamma_min_XQt;
  json rows = json::array();
  for (Index i = 0; i < report.Q.rows(); ++i) rows.push_back(vector_json(report.Q.row(i).transpose()));
  doc["Q"] = rows;
  return {doc.dump(2) + "\n", true, json::object()};
}

// ---- gen -------------------------------------------------------------------

Outcome run_gen(const json& cfg) {
  const std::string model = cfg.at("model");
  const RngSeed seed = cfg.at("seed");
  std::optional<Dataset> data;
  if (model == "isotropic") {
    IsotropicSpec spec;
    spec.n = cfg.at("n");
    spec.m = cfg.at("m");
    spec.r2 = cfg.at("r2");
    spec.sigma2 = cfg.at("sigma2");
    spec.beta_star_seed = derive_seed(seed, {0});
    spec.noise_seed = derive_seed(seed, {1});
    data.emplace(generate_isotropic(spec).data);
  } else {
    LatentSpec spec;
    spec.n = cfg.at("n");
    spec.m = cfg.at("m");
    spec.d = cfg.at("d");
    spec.sigma_xi = cfg.at("sigma_xi");
    spec.seed = seed;
    data.emplace(generate_latent(spec).data);
  }
  return {dataset_table(*data).render(), true, json::object()};
}

// ---- sweep -----------------------------------------------------------------

Outcome run_sweep(const json& cfg) {
  SweepSpec spec;
  const std::string model = cfg.at("model");
  if (model == "isotropic") {
    IsotropicSpec iso;
    iso.n = cfg.at("n");
    iso.r2 = cfg.at("r2");
    iso.sigma2 = cfg.at("sigma2");
    spec.design = iso;
  } else {
    LatentSpec lat;
    lat.n = cfg.at("n");
    lat.d = cfg.at("d");
    lat.sigma_xi = cfg.at("sigma_xi");
    lat.m = std::max<Index>(lat.d, cfg.at("m_grid").front().get<Index>());
    spec.design = lat;
  }
  spec.m_grid = cfg.at("m_grid").get<std::vector<Index>>();
  spec.deltas = cfg.at("deltas").get<std::vector<double>>();
  spec.estimators = cfg.at("estimators").get<std::vector<std::string>>();
  spec.repetitions = cfg.at("repetitions");
  spec.n_test = cfg.at("n_test");
  spec.seed = cfg.at("seed");
  spec.jobs = cfg.at("jobs");
  spec.config = solver_config(cfg);

  const auto records = feature_sweep(spec);
  Outcome out;
  out.content = sweep_table(records).render();
  int failures = 0;
  int not_converged = 0;
  json errors = json::array();
  for (const auto& rec : records) {
    failures += rec.failures;
    not_converged += rec.not_converged;
    if (rec.failures > 0) {
      errors.push_back({{"m", rec.m}, {"delta", rec.delta}, {"estimator", rec.estimator},
                        {"failures", rec.failures}, {"error", rec.last_error}});
    }
  }
  out.notes["failed_fits"] = failures;
  out.notes["not_converged_fits"] = not_converged;
  out.notes["errors"] = errors;
  // Failed cells are part of the table (NaN quantiles); they do not change the exit code.
  out.converged = not_converged == 0;
  return out;
}

// ---- driver ----------------------------------------------------------------

Outcome dispatch(const std::string& command, const json& cfg) {
  if (command == "fit") return run_fit(cfg);
  if (command == "path") return run_path(cfg);
  if (command == "thresholds") return run_thresholds(cfg);
  if (command == "gen") return run_gen(cfg);
  if (command == "sweep") return run_sweep(cfg);
  throw InvalidArgumentError("unknown command '" + command + "'");
}

int execute(const std::string& command, const json& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = dispatch(command, cfg);
  } catch (const Error& e) {
    std::cerr << "advreg " << command << ": " << e.what() << "\n";
    return kExitInvalid;
  } catch (const json::exception& e) {
    std::cerr << "advreg " << command << ": bad configuration: " << e.what() << "\n";
    return kExitInvalid;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string out = cfg.value("out", std::string());
  try {
    if (out.empty()) {
      std::cout << outcome.content;
    } else {
      write_file_atomic(out, outcome.content);
      json manifest;
      manifest["command"] = command;
      manifest["config"] = cfg;
      manifest["seed"] = cfg.contains("seed") ? cfg["seed"] : json(nullptr);
      manifest["version"] = kVersion;
      manifest["duration_seconds"] = seconds;
      manifest["converged"] = outcome.converged;
      manifest["notes"] = outcome.notes;
      write_file_atomic(out + ".manifest.json", manifest.dump(2) + "\n");
    }
  } catch (const Error& e) {
    std::cerr << "advreg " << command << ": " << e.what() << "\n";
    return kExitInvalid;
  }
  if (!outcome.converged) {
    std::cerr << "advreg " << command << ": solver did not converge";
    if (!outcome.notes.empty()) std::cerr << " (" << outcome.notes.dump() << ")";
    std::cerr << "\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

struct SolverFlags {
  double tol = SolverConfig{}.tolerance;
  long max_iter = SolverConfig{}.max_iterations;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
  cmd->add_option("--tol", flags.tol, "Relative optimality tolerance")->capture_default_str();
  cmd->add_option("--max-iter", flags.max_iter, "Iteration cap")->capture_default_str();
}

const std::vector<std::string> kMethods{"adv", "lasso", "ridge", "sqrt-lasso", "ols", "min-l1", "min-l2"};
const std::vector<std::string> kNorms{"2", "inf"};
const std::vector<std::string> kModels{"isotropic", "latent"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial training for linear regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string command;
  json cfg;

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit one estimator");
  std::string data_path, target_col = "y", method = "adv", p = "inf", out;
  double delta = 0.0;
  SolverFlags fit_flags;
  fit_cmd->add_option("--data", data_path, "Dataset CSV")->required();
  fit_cmd->add_option("--target-col", target_col, "Response column")->capture_default_str();
  fit_cmd->add_option("--method", method)->check(CLI::IsMember(kMethods))->capture_default_str();
  fit_cmd->add_option("--p", p, "Attack norm")->check(CLI::IsMember(kNorms))->capture_default_str();
  fit_cmd->add_option("--delta", delta, "Attack radius / regularization strength")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  fit_cmd->add_option("--out", out, "Output JSON (stdout when omitted)");
  add_solver_flags(fit_cmd, fit_flags);

  // path
  auto* path_cmd = app.add_subcommand("path", "Regularization path over a log-spaced grid");
  std::string path_data, path_target = "y", path_method = "adv", path_p = "inf", path_out;
  std::optional<double> grid_min, grid_max;
  Index grid_size = 200;
  SolverFlags path_flags;
  path_cmd->add_option("--data", path_data, "Dataset CSV")->required();
  path_cmd->add_option("--target-col", path_target)->capture_default_str();
  path_cmd->add_option("--method", path_method)
      ->check(CLI::IsMember(std::vector<std::string>{"adv", "lasso", "ridge", "sqrt-lasso"}))
      ->capture_default_str();
  path_cmd->add_option("--p", path_p)->check(CLI::IsMember(kNorms))->capture_default_str();
  path_cmd->add_option("--grid-min", grid_min, "Smallest delta (default grid-max * 1e-5)")
      ->check(CLI::PositiveNumber);
  path_cmd->add_option("--grid-max", grid_max, "Largest delta (default: twice the zero threshold)")
      ->check(CLI::PositiveNumber);
  path_cmd->add_option("--grid-size", grid_size)->check(CLI::PositiveNumber)->capture_default_str();
  path_cmd->add_option("--out", path_out, "Output CSV (stdout when omitted)");
  add_solver_flags(path_cmd, path_flags);

  // thresholds
  auto* thr_cmd = app.add_subcommand("thresholds", "Interpolation threshold bounds");
  std::string thr_data, thr_target = "y", thr_out;
  thr_cmd->add_option("--data", thr_data, "Dataset CSV")->required();
  thr_cmd->add_option("--target-col", thr_target)->capture_default_str();
  thr_cmd->add_option("--out", thr_out, "Output JSON (stdout when omitted)");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
  std::string gen_model = "isotropic", gen_out;
  Index gen_n = 100, gen_m = 10, gen_d = 20;
  double gen_r2 = 4.0, gen_sigma2 = 1.0, gen_sigma_xi = 0.1;
  RngSeed gen_seed = 0;
  gen_cmd->add_option("--model", gen_model)->check(CLI::IsMember(kModels))->capture_default_str();
  gen_cmd->add_option("--n", gen_n)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--m", gen_m)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--d", gen_d, "Latent dimension")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--r2", gen_r2, "Feature variance")->capture_default_str();
  gen_cmd->add_option("--sigma2", gen_sigma2, "Noise variance")->capture_default_str();
  gen_cmd->add_option("--sigma-xi", gen_sigma_xi, "Latent response noise")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed)->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output CSV (stdout when omitted)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Train/test error against the number of features");
  std::string sweep_model = "isotropic", sweep_out;
  Index sweep_n = 100, sweep_d = 20, sweep_n_test = 100;
  double sweep_r2 = 4.0, sweep_sigma2 = 1.0, sweep_sigma_xi = 0.1;
  std::vector<Index> m_grid = SweepSpec{}.m_grid;
  std::vector<double> deltas = SweepSpec{}.deltas;
  std::vector<std::string> estimators = SweepSpec{}.estimators;
  int repetitions = 10;
  int jobs = 1;
  RngSeed sweep_seed = 0;
  SolverFlags sweep_flags;
  sweep_cmd->add_option("--model", sweep_model)->check(CLI::IsMember(kModels))->capture_default_str();
  sweep_cmd->add_option("--n", sweep_n)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--d", sweep_d)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--r2", sweep_r2)->capture_default_str();
  sweep_cmd->add_option("--sigma2", sweep_sigma2)->capture_default_str();
  sweep_cmd->add_option("--sigma-xi", sweep_sigma_xi)->capture_default_str();
  sweep_cmd->add_option("--m-grid", m_grid, "Ascending feature counts")->delimiter(',');
  sweep_cmd->add_option("--deltas", deltas, "Regularization strengths")->delimiter(',');
  sweep_cmd->add_option("--estimators", estimators,
                        "adv-inf, adv-2, lasso, ridge, sqrt-lasso, ols, min-l1, min-l2")
      ->delimiter(',');
  sweep_cmd->add_option("--repetitions", repetitions)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--n-test", sweep_n_test)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--seed", sweep_seed)->capture_default_str();
  sweep_cmd->add_option("--jobs", jobs, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "Output CSV (stdout when omitted)");
  add_solver_flags(sweep_cmd, sweep_flags);

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
  std::string manifest_path, replay_out;
  replay_cmd->add_option("--manifest", manifest_path, "Manifest JSON")->required();
  replay_cmd->add_option("--out", replay_out, "Write here instead of the recorded output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (fit_cmd->parsed()) {
    command = "fit";
    cfg = {{"data", data_path}, {"target_col", target_col}, {"method", method}, {"p", p},
           {"delta", delta},    {"tol", fit_flags.tol},     {"max_iter", fit_flags.max_iter},
           {"out", out}};
  } else if (path_cmd->parsed()) {
    command = "path";
    double hi = 0.0;
    double lo = 0.0;
    try {
      // The default grid depends on the data; resolve it now so the manifest is explicit.
      if (!grid_max || !grid_min) {
        const Dataset data = read_dataset_csv(path_data, path_target);
        hi = grid_max ? *grid_max
                      : default_grid_max(data, parse_estimator_kind(path_method), parse_norm_order(path_p));
      } else {
        hi = *grid_max;
      }
      lo = grid_min ? *grid_min : hi * 1e-5;
    } catch (const Error& e) {
      std::cerr << "advreg path: " << e.what() << "\n";
      return kExitInvalid;
    }
    cfg = {{"data", path_data},
           {"target_col", path_target},
           {"method", path_method},
           {"p", path_p},
           {"grid_min", lo},
           {"grid_max", hi},
           {"grid_size", grid_size},
           {"tol", path_flags.tol},
           {"max_iter", path_flags.max_iter},
           {"out", path_out}};
  } else if (thr_cmd->parsed()) {
    command = "thresholds";
    cfg = {{"data", thr_data}, {"target_col", thr_target}, {"out", thr_out}};
  } else if (gen_cmd->parsed()) {
    command = "gen";
    cfg = {{"model", gen_model},   {"n", gen_n},           {"m", gen_m},
           {"d", gen_d},           {"r2", gen_r2},         {"sigma2", gen_sigma2},
           {"sigma_xi", gen_sigma_xi}, {"seed", gen_seed}, {"out", gen_out}};
  } else if (sweep_cmd->parsed()) {
    command = "sweep";
    cfg = {{"model", sweep_model},
           {"n", sweep_n},
           {"d", sweep_d},
           {"r2", sweep_r2},
           {"sigma2", sweep_sigma2},
           {"sigma_xi", sweep_sigma_xi},
           {"m_grid", m_grid},
           {"deltas", deltas},
           {"estimators", estimators},
           {"repetitions", repetitions},
           {"n_test", sweep_n_test},
           {"seed", sweep_seed},
           {"jobs", jobs},
           {"tol", sweep_flags.tol},
           {"max_iter", sweep_flags.max_iter},
           {"out", sweep_out}};
  } else if (replay_cmd->parsed()) {
    try {
      const json manifest = json::parse(read_text_file(manifest_path));
      command = manifest.at("command").get<std::string>();
      cfg = manifest.at("config");
    } catch (const Error& e) {
      std::cerr << "advreg replay: " << e.what() << "\n";
      return kExitInvalid;
    } catch (const json::exception& e) {
      std::cerr << "advreg replay: malformed manifest '" << manifest_path << "': " << e.what() << "\n";
      return kExitInvalid;
    }
    if (!replay_out.empty()) cfg["out"] = replay_out;
  }
  return execute(command, cfg);
}
