// Experiment configuration: named presets, JSONC config files, and the
// hyperparameter grids the harness sweeps over.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perfopt/environment.hpp"
#include "perfopt/optimizers.hpp"

namespace perfopt {

struct GridSpec {
  std::vector<double> lr;
  std::vector<int> wait;
  std::vector<double> dfo_ps;
  std::vector<double> spgd_ps;
  std::vector<int> pgd_horizon;   // -1 encodes the full trajectory
  std::vector<int> spgd_horizon;  // shared by SPGD and BSPGD

  // lr 10^{-k/2} for k=1..6; wait {1,5,10,20}; probe radii 10^{-k/2} for
  // k=0..3 (SPGD additionally includes 0); horizons d..2d plus full for the
  // waiting baseline and 2d..3d plus full for SPGD.
  static GridSpec defaults(int d);
};

struct ExperimentConfig {
  std::string id = "experiment";
  EnvironmentSpec env;
  std::vector<Method> methods;
  GridSpec grid;
  // Explicit cells. When non-empty, `run` executes exactly these; when empty
  // it expands the full grid for each method.
  std::vector<OptimizerConfig> optimizers;
  int trials = 5;
  int T = 50;
  std::uint64_t master_seed = 12345;
  double tol_frac = 0.05;
  std::vector<int> k_list;  // statefulness sweep, used by the sweep command
  Vector theta0;            // default start shared by all cells; empty = zeros

  void validate() const;
};

// Adaptation rate delta at which k map applications shrink the deviation
// envelope (1 - delta)^k to 1%.
double delta_for_k_settle(int k);
void apply_k_settle(ExperimentConfig& cfg, int k);

std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

// Accepts "preset:<name>" or a path to a JSONC file (// and /* */ comments
// allowed). Unknown keys are rejected.
ExperimentConfig load_config(const std::string& source);

// All grid cells for one method, in a fixed enumeration order (outer to
// inner: lr, then wait or probe scale, then horizon).
std::vector<OptimizerConfig> expand_grid(Method m, const GridSpec& grid,
                                         const EnvironmentSpec& env);

// Cells to run: the explicit list, or the expanded grids.
std::vector<OptimizerConfig> experiment_cells(const ExperimentConfig& cfg,
                                              bool force_grid);

// Seed precedence: --seed flag, then the PERFOPT_SEED environment variable,
// then the config value.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag,
                           const char* env_value, std::uint64_t config_seed);

// Deterministic response matrix for the linear family: scale times a random
// PSD matrix, redrawn until the closed form optimum is strictly inside 0.9 R
// of the box. The draw does not depend on the experiment seed; the instance
// index picks among acceptable draws of the same family.
Matrix draw_response_matrix(int d, double scale, const Vector& b, double R,
                            std::uint64_t instance = 0);

}  // namespace perfopt
