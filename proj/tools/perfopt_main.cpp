// Command line front end: run experiments from a preset or JSONC config,
// sweep the statefulness level, and run the built in verification suite.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "perfopt/config.hpp"
#include "perfopt/emit.hpp"
#include "perfopt/errors.hpp"
#include "perfopt/experiment.hpp"
#include "perfopt/validate.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string out_dir = ".";
  std::string format = "both";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> steps;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("config", opts.config,
                  "preset:<name> or path to a JSONC config file")
      ->required();
  cmd->add_option("--out-dir", opts.out_dir, "output directory")
      ->capture_default_str();
  cmd->add_option("--format", opts.format, "csv, json, or both")
      ->check(CLI::IsMember({"csv", "json", "both"}))
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed,
                  "master seed (overrides PERFOPT_SEED and the config)");
  cmd->add_option("--trials", opts.trials, "trials per cell (overrides the config)");
  cmd->add_option("-T,--steps", opts.steps, "deployments per trial (overrides the config)");
  cmd->add_option("--threads", opts.threads, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

perfopt::ExperimentConfig load_with_overrides(const CommonOpts& opts) {
  perfopt::ExperimentConfig cfg = perfopt::load_config(opts.config);
  cfg.master_seed = perfopt::resolve_seed(opts.seed, std::getenv("PERFOPT_SEED"),
                                          cfg.master_seed);
  if (opts.trials) cfg.trials = *opts.trials;
  if (opts.steps) cfg.T = *opts.steps;
  cfg.validate();
  return cfg;
}

void report_result(const perfopt::ExperimentResult& result) {
  std::cout << "experiment " << result.config.id << ": " << result.cells.size()
            << " cells, " << result.config.trials << " trials, T="
            << result.config.T << "\n";
  std::cout << "  reference loss " << perfopt::format_double(result.opt.loss)
            << " (" << result.opt.provenance << ")\n";
  for (const auto& [method, idx] : result.best_cell) {
    const auto& cell = result.cells[static_cast<std::size_t>(idx)];
    std::cout << "  " << method << ": best cell " << idx << " final long-term loss "
              << perfopt::format_double(cell.final_lt_mean) << " (frac of optimal "
              << perfopt::format_double(cell.final_frac_mean) << ")\n";
  }
  for (const auto& w : result.validation.warnings)
    std::cout << "  warning: " << w << "\n";
}

int emit_result(const perfopt::ExperimentResult& result, const CommonOpts& opts) {
  namespace fs = std::filesystem;
  fs::create_directories(opts.out_dir);
  fs::path base = fs::path(opts.out_dir) / result.config.id;
  if (opts.format != "json") {
    perfopt::emit_csv(result, base.string() + ".csv");
    std::cout << "wrote " << base.string() + ".csv" << "\n";
  }
  if (opts.format != "csv") {
    perfopt::emit_summary_json(result, base.string() + "_summary.json");
    std::cout << "wrote " << base.string() + "_summary.json" << "\n";
  }
  return 0;
}

int cmd_run(const CommonOpts& opts, bool force_grid) {
  perfopt::ExperimentConfig cfg = load_with_overrides(opts);
  perfopt::ExperimentResult result =
      perfopt::run_experiment(cfg, force_grid, opts.threads);
  report_result(result);
  return emit_result(result, opts);
}

int cmd_sweep(const CommonOpts& opts, std::vector<int> k_list) {
  perfopt::ExperimentConfig base = load_with_overrides(opts);
  if (k_list.empty()) k_list = base.k_list;
  if (k_list.empty())
    throw perfopt::ConfigError("sweep needs --k-list or k_list in the config");

  std::vector<std::pair<int, perfopt::ExperimentResult>> by_k;
  for (int k : k_list) {
    perfopt::ExperimentConfig cfg = base;
    perfopt::apply_k_settle(cfg, k);
    cfg.id = base.id + "-k" + std::to_string(k);
    std::cout << "k=" << k << " (delta " << perfopt::format_double(cfg.env.delta)
              << ")\n";
    perfopt::ExperimentResult result =
        perfopt::run_experiment(cfg, true, opts.threads);
    report_result(result);
    by_k.emplace_back(k, std::move(result));
  }

  std::vector<perfopt::SweepPoint> points = perfopt::sweep_points(by_k);
  namespace fs = std::filesystem;
  fs::create_directories(opts.out_dir);
  fs::path base_path = fs::path(opts.out_dir) / base.id;
  if (opts.format != "json") {
    perfopt::emit_sweep_csv(points, base_path.string() + "_sweep.csv");
    std::cout << "wrote " << base_path.string() + "_sweep.csv" << "\n";
  }
  if (opts.format != "csv") {
    perfopt::emit_sweep_json(base, points, base_path.string() + "_sweep_summary.json");
    std::cout << "wrote " << base_path.string() + "_sweep_summary.json" << "\n";
  }
  return 0;
}

int cmd_validate(int threads) {
  std::vector<perfopt::CheckResult> checks = perfopt::run_validation_suite(threads);
  for (const auto& c : checks) {
    std::cout << "check " << c.id << " " << (c.pass ? "PASS" : "FAIL") << "  "
              << c.name << ": " << c.detail << "\n";
  }
  if (!perfopt::all_pass(checks)) {
    std::cout << "validation FAILED\n";
    return 1;
  }
  std::cout << "validation passed\n";
  return 0;
}

int cmd_presets() {
  for (const auto& name : perfopt::preset_names()) {
    perfopt::ExperimentConfig cfg = perfopt::preset_config(name);
    std::cout << name << ": " << perfopt::to_string(cfg.env.variant) << " d="
              << cfg.env.d << " delta=" << perfopt::format_double(cfg.env.delta)
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimizers for prediction problems whose data distribution "
               "reacts to the deployed model with lag"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "run the configured experiment");
  add_common(run, run_opts);

  CommonOpts grid_opts;
  CLI::App* grid = app.add_subcommand(
      "grid", "run the full hyperparameter grids, ignoring explicit cells");
  add_common(grid, grid_opts);

  CommonOpts sweep_opts;
  std::vector<int> k_list;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "rerun the grids across statefulness levels k");
  add_common(sweep, sweep_opts);
  sweep->add_option("--k-list", k_list, "settling horizons to sweep")
      ->delimiter(',');

  int validate_threads = 1;
  CLI::App* validate =
      app.add_subcommand("validate", "run the built in verification suite");
  validate->add_option("--threads", validate_threads, "worker threads")
      ->check(CLI::PositiveNumber);

  CLI::App* presets = app.add_subcommand("presets", "list named presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts, false);
    if (grid->parsed()) return cmd_run(grid_opts, true);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, k_list);
    if (validate->parsed()) return cmd_validate(validate_threads);
    if (presets->parsed()) return cmd_presets();
  } catch (const perfopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const perfopt::InvalidInputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
