// panel_se: robust standard errors for balanced panels, plus the Monte Carlo
// rejection-probability laboratory.
//
// Subcommands:
//   estimate  fit a CSV panel and report coefficient standard errors
//   simulate  run seeded rejection-probability experiments
//   cv        cross-validate the threshold constant M on a CSV panel

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "panelse/io.hpp"
#include "panelse/panelse.hpp"

namespace {

using nlohmann::json;
using namespace panelse;

constexpr int kExitOk = 0;
constexpr int kExitComputation = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json j;
  in >> j;
  if (!j.is_object()) throw UsageError("config root must be a JSON object");
  return j;
}

// Flags beat config-file values; config beats built-in defaults.
template <typename T>
void merge(const json& cfg, const char* key, const CLI::Option* opt, T& target) {
  if (opt->count() == 0 && cfg.contains(key)) target = cfg.at(key).get<T>();
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

EstimatorKind parse_estimator(const std::string& tag) {
  if (tag == "white") return EstimatorKind::White;
  if (tag == "cx") return EstimatorKind::ClusterUnits;
  if (tag == "ct") return EstimatorKind::ClusterTimes;
  if (tag == "hac") return EstimatorKind::Hac;
  if (tag == "dk") return EstimatorKind::DriscollKraay;
  if (tag == "hard") return EstimatorKind::HardThreshold;
  if (tag == "soft") return EstimatorKind::SoftThreshold;
  throw UsageError("unknown estimator \"" + tag +
                   "\" (expected white, cx, ct, hac, dk, hard, soft)");
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("PANEL_SE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError("PANEL_SE_SEED is not an integer");
    }
  }
  return 0;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  out << content;
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw UsageError("--level must lie strictly between 0 and 1");
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string config;
  std::string input;
  std::string estimators = "white,cx,ct,hac,dk,hard";
  std::string bandwidth = "auto";
  std::string threshold = "cv";
  double m0 = 1.0;
  int grid_points = 100;
  int folds = 0;  // 0 = rule
  double level = 0.05;
  std::string null_values;
  std::string output;
  std::string format = "text";
  std::string unit_col = "unit";
  std::string time_col = "time";
  std::string y_col = "y";
  std::string x_cols;
  std::string dump_blocks;
  bool psd_floor = false;
};

int run_estimate(const EstimateArgs& args) {
  if (args.input.empty()) throw UsageError("estimate requires --input");
  check_level(args.level);
  if (args.format != "text" && args.format != "csv" && args.format != "json")
    throw UsageError("--format must be text, csv, or json");
  std::vector<EstimatorKind> kinds;
  for (const auto& tag : split_list(args.estimators))
    kinds.push_back(parse_estimator(tag));
  if (kinds.empty()) throw UsageError("--estimators selects nothing");

  CsvSchema schema;
  schema.unit_col = args.unit_col;
  schema.time_col = args.time_col;
  schema.y_col = args.y_col;
  schema.x_cols = split_list(args.x_cols);

  const PanelData panel = load_csv(args.input, schema);
  const PanelData demeaned = within_transform(panel).first;
  const FitResult fit = fit_ols(demeaned);
  const auto& x = demeaned.x();
  const auto& u = fit.residuals;
  const int n = demeaned.n_units();
  const int t = demeaned.n_periods();
  const int k = demeaned.n_regressors();

  int bandwidth = 0;
  if (args.bandwidth == "auto") {
    bandwidth = auto_bandwidth(t);
  } else {
    try {
      bandwidth = std::stoi(args.bandwidth);
    } catch (const std::exception&) {
      throw UsageError("--bandwidth must be an integer or \"auto\"");
    }
    if (bandwidth < 0) throw UsageError("--bandwidth must be nonnegative");
  }

  Eigen::VectorXd nulls = Eigen::VectorXd::Zero(k);
  if (!args.null_values.empty()) {
    const auto items = split_list(args.null_values);
    if (items.size() == 1) {
      nulls.setConstant(std::stod(items[0]));
    } else if (static_cast<int>(items.size()) == k) {
      for (int j = 0; j < k; ++j) nulls(j) = std::stod(items[static_cast<size_t>(j)]);
    } else {
      throw UsageError("--null needs 1 value or one per regressor");
    }
  }

  const bool wants_threshold =
      std::any_of(kinds.begin(), kinds.end(), [](EstimatorKind e) {
        return e == EstimatorKind::HardThreshold || e == EstimatorKind::SoftThreshold;
      });

  // Resolve M: an explicit number, or cross-validation per threshold mode.
  auto resolve_m = [&](ThresholdMode mode) -> double {
    if (args.threshold != "cv") {
      try {
        return std::stod(args.threshold);
      } catch (const std::exception&) {
        throw UsageError("--threshold must be a number or \"cv\"");
      }
    }
    CvConfig cv;
    cv.folds = args.folds > 0 ? args.folds : default_fold_count(t);
    cv.m0 = args.m0;
    cv.grid = default_grid(args.grid_points, args.m0);
    cv.bandwidth = bandwidth;
    cv.mode = mode;
    return cross_validate_threshold(x, u, cv).best_m;
  };

  std::optional<BlockSet> blocks;
  if (wants_threshold || !args.dump_blocks.empty())
    blocks = BlockSet::compute(x, u, KernelSpec{KernelKind::Bartlett, bandwidth});

  std::vector<io::EstimatorColumn> columns;
  for (EstimatorKind kind : kinds) {
    io::EstimatorColumn col;
    col.tag = estimator_tag(kind);
    try {
      CovEstimate cov;
      switch (kind) {
        case EstimatorKind::White: cov = white_cov(x, u); break;
        case EstimatorKind::ClusterUnits: cov = cluster_cov_by_unit(x, u); break;
        case EstimatorKind::ClusterTimes: cov = cluster_cov_by_time(x, u); break;
        case EstimatorKind::Hac:
          cov = hac_cov(x, u, KernelSpec{KernelKind::Bartlett, bandwidth});
          break;
        case EstimatorKind::DriscollKraay:
          cov = driscoll_kraay_cov(x, u, KernelSpec{KernelKind::Bartlett, bandwidth});
          break;
        case EstimatorKind::HardThreshold:
        case EstimatorKind::SoftThreshold: {
          const auto mode = kind == EstimatorKind::HardThreshold
                                ? ThresholdMode::Hard
                                : ThresholdMode::Soft;
          const double m = resolve_m(mode);
          const ThresholdConfig tc{m, mode, threshold_scale(bandwidth, n, t),
                                   args.psd_floor};
          cov = threshold_cov(*blocks, tc);
          const double min_eig = min_eigenvalue(cov.v);
          if (min_eig < 0.0)
            std::cerr << "warning: " << col.tag
                      << " estimate is not positive semidefinite (min eigenvalue "
                      << min_eig << "); consider --psd-floor\n";
          break;
        }
      }
      col.bandwidth = cov.bandwidth;
      col.threshold_m = cov.threshold_m;
      col.kept_blocks = cov.kept_blocks;
      col.report = infer(fit, cov, nulls, args.level);
    } catch (const Error& e) {
      col.error = e.what();
    }
    columns.push_back(std::move(col));
  }

  if (!args.dump_blocks.empty()) {
    const double m = wants_threshold ? resolve_m(ThresholdMode::Hard) : 0.0;
    const ThresholdConfig tc{m, ThresholdMode::Hard, threshold_scale(bandwidth, n, t),
                             false};
    write_pattern_csv(threshold_pattern(*blocks, tc), args.dump_blocks);
  }

  const auto& names = demeaned.regressor_labels();
  if (args.format == "text") {
    std::ostringstream head;
    head << "N=" << n << " T=" << t << " L=" << bandwidth << " level=" << args.level
         << "\n";
    for (const auto& col : columns)
      if (col.threshold_m)
        head << col.tag << ": M=" << *col.threshold_m
             << (args.threshold == "cv" ? " (cv)" : "")
             << (col.kept_blocks ? " kept_blocks=" + std::to_string(*col.kept_blocks)
                                 : "")
             << "\n";
    write_output(args.output,
                 head.str() + io::estimate_text(fit.beta, names, columns));
  } else if (args.format == "csv") {
    write_output(args.output, io::estimate_csv(fit.beta, names, columns));
  } else {
    write_output(args.output,
                 io::estimate_json(fit.beta, names, columns, args.level).dump(2) + "\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  int dgp_case = 1;
  int n = 50;
  int t = 100;
  double rho = 0.0;
  double gamma = 0.0;
  double psi = 0.5;
  bool chain_lattice = false;
  int factors = 2;
  double rho_f = 0.9;
  double rho_lambda = 0.3;
  double rho_x = 0.3;
  double gamma_x = 1.0;
  double beta0 = 1.0;
  int burn_in = 100;
  double fe_scale = 0.5;
  std::string bandwidths = "3";
  std::string thresholds = "0.10,0.15,0.20,0.25";
  std::string estimators = "hard,hac,dk,cx,ct,white";
  int reps = 1000;
  double level = 0.05;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  std::string output;
  std::string format = "csv";
};

int run_simulate(const SimulateArgs& args) {
  check_level(args.level);
  if (args.reps < 1) throw UsageError("--reps must be at least 1");
  if (args.threads < 1) throw UsageError("--threads must be at least 1");
  if (args.format != "text" && args.format != "csv" && args.format != "json")
    throw UsageError("--format must be text, csv, or json");

  mc::ExperimentGrid grid;
  switch (args.dgp_case) {
    case 1: grid.dgp.kind = mc::DgpCase::Case1; break;
    case 2: grid.dgp.kind = mc::DgpCase::Case2; break;
    case 3: grid.dgp.kind = mc::DgpCase::Case3; break;
    default: throw UsageError("--case must be 1, 2, or 3");
  }
  grid.dgp.n = args.n;
  grid.dgp.t = args.t;
  grid.dgp.beta0 = args.beta0;
  grid.dgp.rho_x = args.rho_x;
  grid.dgp.gamma_x = args.gamma_x;
  grid.dgp.case1 = {args.rho, args.gamma};
  grid.dgp.case2 = {args.psi, args.chain_lattice};
  grid.dgp.case3 = {args.factors, args.rho_f, args.rho_lambda};
  grid.dgp.burn_in = args.burn_in;
  grid.dgp.fe_scale = args.fe_scale;
  try {
    mc::validate(grid.dgp);
  } catch (const InvalidConfig& e) {
    throw UsageError(e.what());
  }

  grid.bandwidths.clear();
  for (const auto& item : split_list(args.bandwidths)) {
    if (item == "auto") {
      grid.bandwidths.push_back(auto_bandwidth(args.t));
    } else {
      const int l = std::stoi(item);
      if (l < 0) throw UsageError("--bandwidths entries must be nonnegative");
      grid.bandwidths.push_back(l);
    }
  }
  grid.thresholds.clear();
  for (const auto& item : split_list(args.thresholds)) {
    const double m = std::stod(item);
    if (m < 0.0) throw UsageError("--thresholds entries must be nonnegative");
    grid.thresholds.push_back(m);
  }
  grid.estimators.clear();
  for (const auto& tag : split_list(args.estimators))
    grid.estimators.push_back(parse_estimator(tag));
  grid.reps = args.reps;
  grid.level = args.level;
  grid.base_seed = args.seed_given ? args.seed : default_seed();

  const auto start = std::chrono::steady_clock::now();
  const auto table = mc::run_experiment(grid, args.threads);
  const auto elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (args.format == "csv") {
    write_output(args.output, io::experiment_csv(table));
  } else if (args.format == "text") {
    write_output(args.output, io::experiment_text(table));
  } else {
    write_output(args.output, io::experiment_json(table).dump(2) + "\n");
  }
  std::cerr << "elapsed " << elapsed << " s; max MC se "
            << [&] {
                 double worst = 0.0;
                 for (const auto& row : table.rows) worst = std::max(worst, row.mc_se);
                 return worst;
               }()
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cv
// ---------------------------------------------------------------------------

struct CvArgs {
  std::string config;
  std::string input;
  std::string bandwidth = "auto";
  int folds = 0;
  std::string mode = "hard";
  double m0 = 1.0;
  int grid_points = 100;
  std::string grid;  // explicit comma list overrides grid_points
  std::string output;
  std::string unit_col = "unit";
  std::string time_col = "time";
  std::string y_col = "y";
  std::string x_cols;
};

int run_cv(const CvArgs& args) {
  if (args.input.empty()) throw UsageError("cv requires --input");
  if (args.mode != "hard" && args.mode != "soft")
    throw UsageError("--mode must be hard or soft");

  CsvSchema schema;
  schema.unit_col = args.unit_col;
  schema.time_col = args.time_col;
  schema.y_col = args.y_col;
  schema.x_cols = split_list(args.x_cols);

  const PanelData panel = load_csv(args.input, schema);
  const PanelData demeaned = within_transform(panel).first;
  const FitResult fit = fit_ols(demeaned);
  const int t = demeaned.n_periods();

  CvConfig cv;
  cv.bandwidth = args.bandwidth == "auto" ? auto_bandwidth(t) : std::stoi(args.bandwidth);
  cv.folds = args.folds > 0 ? args.folds : default_fold_count(t);
  cv.m0 = args.m0;
  cv.mode = args.mode == "hard" ? ThresholdMode::Hard : ThresholdMode::Soft;
  if (!args.grid.empty()) {
    cv.grid.clear();
    for (const auto& item : split_list(args.grid)) cv.grid.push_back(std::stod(item));
  } else {
    cv.grid = default_grid(args.grid_points, args.m0);
  }

  const auto result = cross_validate_threshold(demeaned.x(), fit.residuals, cv);
  json out = io::cv_json(result);
  out["bandwidth"] = cv.bandwidth;
  out["folds"] = cv.folds;
  out["mode"] = args.mode;

  const std::string summary = "M* = " + detail::format_full(result.best_m) + "\n";
  if (args.output.empty()) {
    std::cout << out.dump(2) << "\n";
    std::cerr << summary;
  } else {
    write_output(args.output, out.dump(2) + "\n");
    std::cout << summary;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust standard errors for balanced panel data"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* cmd_est = app.add_subcommand(
      "estimate", "Fit a CSV panel and report robust standard errors");
  auto* est_config = cmd_est->add_option("--config", est.config, "JSON config file");
  auto* est_input = cmd_est->add_option("--input", est.input, "long-format CSV panel");
  auto* est_estimators = cmd_est->add_option(
      "--estimators", est.estimators,
      "comma list of white,cx,ct,hac,dk,hard,soft (default white,cx,ct,hac,dk,hard)");
  auto* est_bw = cmd_est->add_option("--bandwidth", est.bandwidth,
                                     "Newey-West lag L, or \"auto\" for the "
                                     "floor(4*(T/100)^(2/9)) rule (default auto)");
  auto* est_m = cmd_est->add_option(
      "--threshold", est.threshold,
      "threshold constant M, or \"cv\" for cross-validation (default cv)");
  auto* est_m0 = cmd_est->add_option("--m0", est.m0, "CV grid upper bound (default 1)");
  auto* est_gp =
      cmd_est->add_option("--grid-points", est.grid_points, "CV grid size (default 100)");
  auto* est_folds =
      cmd_est->add_option("--folds", est.folds, "CV folds (default round(ln T))");
  auto* est_level =
      cmd_est->add_option("--level", est.level, "two-sided test level (default 0.05)");
  auto* est_null = cmd_est->add_option(
      "--null", est.null_values, "null values, one or one-per-regressor (default 0)");
  auto* est_out = cmd_est->add_option("--output", est.output, "output path (default stdout)");
  auto* est_fmt =
      cmd_est->add_option("--format", est.format, "text, csv, or json (default text)");
  auto* est_uc = cmd_est->add_option("--unit-col", est.unit_col, "unit column name");
  auto* est_tc = cmd_est->add_option("--time-col", est.time_col, "time column name");
  auto* est_yc = cmd_est->add_option("--y-col", est.y_col, "outcome column name");
  auto* est_xc = cmd_est->add_option("--x-cols", est.x_cols,
                                     "comma list of regressor columns (default: rest)");
  auto* est_dump = cmd_est->add_option("--dump-blocks", est.dump_blocks,
                                       "write kept-block pattern CSV here");
  auto* est_floor = cmd_est->add_flag("--psd-floor", est.psd_floor,
                                      "clip negative eigenvalues of thresholded "
                                      "estimates to zero");

  SimulateArgs sim;
  auto* cmd_sim = app.add_subcommand(
      "simulate", "Run seeded rejection-probability experiments");
  auto* sim_config = cmd_sim->add_option("--config", sim.config, "JSON config file");
  auto* sim_case = cmd_sim->add_option("--case", sim.dgp_case, "error design 1, 2, or 3");
  auto* sim_n = cmd_sim->add_option("--n", sim.n, "units (default 50)");
  auto* sim_t = cmd_sim->add_option("--t", sim.t, "periods (default 100)");
  auto* sim_rho = cmd_sim->add_option("--rho", sim.rho, "case 1 error AR (default 0)");
  auto* sim_gamma =
      cmd_sim->add_option("--gamma", sim.gamma, "case 1 neighbor bound (default 0)");
  auto* sim_psi = cmd_sim->add_option("--psi", sim.psi, "case 2 SAR coefficient (default 0.5)");
  auto* sim_chain = cmd_sim->add_flag("--chain-lattice", sim.chain_lattice,
                                      "1-D chain weights instead of the lattice");
  auto* sim_r = cmd_sim->add_option("--factors", sim.factors, "case 3 factor count (default 2)");
  auto* sim_rf = cmd_sim->add_option("--rho-f", sim.rho_f, "case 3 factor AR (default 0.9)");
  auto* sim_rl = cmd_sim->add_option("--rho-lambda", sim.rho_lambda,
                                     "case 3 loading AR (default 0.3)");
  auto* sim_rx = cmd_sim->add_option("--rho-x", sim.rho_x, "regressor AR (default 0.3)");
  auto* sim_gx =
      cmd_sim->add_option("--gamma-x", sim.gamma_x, "regressor neighbor bound (default 1)");
  auto* sim_b0 = cmd_sim->add_option("--beta0", sim.beta0, "true coefficient (default 1)");
  auto* sim_burn = cmd_sim->add_option("--burn-in", sim.burn_in,
                                       "AR(1) burn-in periods (default 100)");
  auto* sim_fe = cmd_sim->add_option("--fe-scale", sim.fe_scale,
                                     "fixed-effect variance (default 0.5)");
  auto* sim_bw = cmd_sim->add_option("--bandwidths", sim.bandwidths,
                                     "comma list of lags, \"auto\" allowed (default 3)");
  auto* sim_m = cmd_sim->add_option("--thresholds", sim.thresholds,
                                    "comma list of M values (default 0.10,0.15,0.20,0.25)");
  auto* sim_est = cmd_sim->add_option("--estimators", sim.estimators,
                                      "comma list (default hard,hac,dk,cx,ct,white)");
  auto* sim_reps = cmd_sim->add_option("--reps", sim.reps, "replications (default 1000)");
  auto* sim_level = cmd_sim->add_option("--level", sim.level, "test level (default 0.05)");
  auto* sim_seed = cmd_sim->add_option("--seed", sim.seed,
                                       "base seed (default $PANEL_SE_SEED or 0)");
  auto* sim_threads =
      cmd_sim->add_option("--threads", sim.threads, "worker threads (default 1)");
  auto* sim_out = cmd_sim->add_option("--output", sim.output, "output path (default stdout)");
  auto* sim_fmt =
      cmd_sim->add_option("--format", sim.format, "csv, text, or json (default csv)");

  CvArgs cv;
  auto* cmd_cv = app.add_subcommand(
      "cv", "Cross-validate the threshold constant on a CSV panel");
  auto* cv_config = cmd_cv->add_option("--config", cv.config, "JSON config file");
  auto* cv_input = cmd_cv->add_option("--input", cv.input, "long-format CSV panel");
  auto* cv_bw = cmd_cv->add_option("--bandwidth", cv.bandwidth,
                                   "lag L or \"auto\" (default auto)");
  auto* cv_folds = cmd_cv->add_option("--folds", cv.folds, "folds (default round(ln T))");
  auto* cv_mode = cmd_cv->add_option("--mode", cv.mode, "hard or soft (default hard)");
  auto* cv_m0 = cmd_cv->add_option("--m0", cv.m0, "grid upper bound (default 1)");
  auto* cv_gp = cmd_cv->add_option("--grid-points", cv.grid_points,
                                   "grid size (default 100)");
  auto* cv_grid = cmd_cv->add_option("--grid", cv.grid, "explicit comma list of M values");
  auto* cv_out = cmd_cv->add_option("--output", cv.output, "JSON output path");
  auto* cv_uc = cmd_cv->add_option("--unit-col", cv.unit_col, "unit column name");
  auto* cv_tc = cmd_cv->add_option("--time-col", cv.time_col, "time column name");
  auto* cv_yc = cmd_cv->add_option("--y-col", cv.y_col, "outcome column name");
  auto* cv_xc = cmd_cv->add_option("--x-cols", cv.x_cols, "regressor columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cmd_est->parsed()) {
      const json cfg = load_config(est.config);
      merge(cfg, "input", est_input, est.input);
      merge(cfg, "estimators", est_estimators, est.estimators);
      merge(cfg, "bandwidth", est_bw, est.bandwidth);
      merge(cfg, "threshold", est_m, est.threshold);
      merge(cfg, "m0", est_m0, est.m0);
      merge(cfg, "grid_points", est_gp, est.grid_points);
      merge(cfg, "folds", est_folds, est.folds);
      merge(cfg, "level", est_level, est.level);
      merge(cfg, "null", est_null, est.null_values);
      merge(cfg, "output", est_out, est.output);
      merge(cfg, "format", est_fmt, est.format);
      merge(cfg, "unit_col", est_uc, est.unit_col);
      merge(cfg, "time_col", est_tc, est.time_col);
      merge(cfg, "y_col", est_yc, est.y_col);
      merge(cfg, "x_cols", est_xc, est.x_cols);
      merge(cfg, "dump_blocks", est_dump, est.dump_blocks);
      merge(cfg, "psd_floor", est_floor, est.psd_floor);
      (void)est_config;
      return run_estimate(est);
    }
    if (cmd_sim->parsed()) {
      const json cfg = load_config(sim.config);
      merge(cfg, "case", sim_case, sim.dgp_case);
      merge(cfg, "n", sim_n, sim.n);
      merge(cfg, "t", sim_t, sim.t);
      merge(cfg, "rho", sim_rho, sim.rho);
      merge(cfg, "gamma", sim_gamma, sim.gamma);
      merge(cfg, "psi", sim_psi, sim.psi);
      merge(cfg, "chain_lattice", sim_chain, sim.chain_lattice);
      merge(cfg, "factors", sim_r, sim.factors);
      merge(cfg, "rho_f", sim_rf, sim.rho_f);
      merge(cfg, "rho_lambda", sim_rl, sim.rho_lambda);
      merge(cfg, "rho_x", sim_rx, sim.rho_x);
      merge(cfg, "gamma_x", sim_gx, sim.gamma_x);
      merge(cfg, "beta0", sim_b0, sim.beta0);
      merge(cfg, "burn_in", sim_burn, sim.burn_in);
      merge(cfg, "fe_scale", sim_fe, sim.fe_scale);
      merge(cfg, "bandwidths", sim_bw, sim.bandwidths);
      merge(cfg, "thresholds", sim_m, sim.thresholds);
      merge(cfg, "estimators", sim_est, sim.estimators);
      merge(cfg, "reps", sim_reps, sim.reps);
      merge(cfg, "level", sim_level, sim.level);
      merge(cfg, "threads", sim_threads, sim.threads);
      merge(cfg, "output", sim_out, sim.output);
      merge(cfg, "format", sim_fmt, sim.format);
      sim.seed_given = sim_seed->count() > 0 || cfg.contains("seed");
      merge(cfg, "seed", sim_seed, sim.seed);
      (void)sim_config;
      return run_simulate(sim);
    }
    if (cmd_cv->parsed()) {
      const json cfg = load_config(cv.config);
      merge(cfg, "input", cv_input, cv.input);
      merge(cfg, "bandwidth", cv_bw, cv.bandwidth);
      merge(cfg, "folds", cv_folds, cv.folds);
      merge(cfg, "mode", cv_mode, cv.mode);
      merge(cfg, "m0", cv_m0, cv.m0);
      merge(cfg, "grid_points", cv_gp, cv.grid_points);
      merge(cfg, "grid", cv_grid, cv.grid);
      merge(cfg, "output", cv_out, cv.output);
      merge(cfg, "unit_col", cv_uc, cv.unit_col);
      merge(cfg, "time_col", cv_tc, cv.time_col);
      merge(cfg, "y_col", cv_yc, cv.y_col);
      merge(cfg, "x_cols", cv_xc, cv.x_cols);
      (void)cv_config;
      return run_cv(cv);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitComputation;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitComputation;
  }
  return kExitOk;
}
