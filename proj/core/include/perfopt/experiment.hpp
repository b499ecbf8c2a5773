// Experiment harness: runs every (cell, trial) job of a configuration,
// aggregates the trajectories into per step curves, and carries the oracle
// cross checks that accompany each result.
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "perfopt/config.hpp"
#include "perfopt/optimizers.hpp"

namespace perfopt {

struct CellSummary {
  int cell = 0;
  OptimizerConfig config;
  std::vector<RunRecord> runs;            // indexed by trial; failed ones empty
  std::vector<std::string> trial_errors;  // "" for successes

  std::vector<double> lt_mean, lt_se;
  std::vector<double> inst_mean, inst_se;
  std::vector<double> frac_mean, frac_se;
  std::vector<double> internal_lt_mean;  // DFO internal iterate, else empty

  double final_lt_mean = std::numeric_limits<double>::quiet_NaN();
  double final_lt_se = std::numeric_limits<double>::quiet_NaN();
  double final_frac_mean = std::numeric_limits<double>::quiet_NaN();
  double final_frac_se = std::numeric_limits<double>::quiet_NaN();
  double d2t_mean = std::numeric_limits<double>::quiet_NaN();
  int d2t_reached = 0;

  int failed_trials = 0;
  int degenerate_steps = 0;
  int noncontractive_steps = 0;
};

struct ValidationInfo {
  double fd_residual = std::numeric_limits<double>::quiet_NaN();
  double fd_threshold = std::numeric_limits<double>::quiet_NaN();
  bool fd_pass = false;
  bool settle_envelope_ok = false;
  std::vector<std::string> warnings;
};

struct ExperimentResult {
  ExperimentConfig config;
  OptReference opt;
  std::vector<CellSummary> cells;
  std::map<std::string, int> best_cell;  // method name -> winning cell index
  ValidationInfo validation;
};

// Deterministic per trial seed; depends on nothing but these four inputs.
std::uint64_t trial_seed(std::uint64_t master_seed, Method method, int cell,
                         int trial);

// Runs all cells of the configuration. force_grid ignores explicit optimizer
// cells and expands the full grid. Individual trial failures are recorded and
// excluded from the aggregates; only a cell with every trial failed aborts
// the experiment.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool force_grid,
                                int threads);

// Oracle cross checks on the environment itself (gradient fidelity at a probe
// point and the settling envelope). Included in every experiment result.
ValidationInfo validate_environment(const EnvironmentSpec& spec,
                                    const OptReference& opt);

}  // namespace perfopt
