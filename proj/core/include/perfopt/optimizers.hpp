// The stateful performative optimizer and the baselines it is compared
// against. Every runner deploys exactly T models, observes the shifted mean
// after each deployment, and logs one StepRecord per deployment.
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "perfopt/environment.hpp"
#include "perfopt/linalg.hpp"

namespace perfopt {

enum class Method { SPGD, BSPGD, RGD, PerfGD, DFO };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct OptimizerConfig {
  Method method = Method::SPGD;
  double lr = 0.1;
  // Exploration scale. SPGD/BSPGD: std of the Gaussian perturbation added to
  // every update (0 disables). PerfGD: std of the warmup perturbations.
  // DFO: radius of the one point probe (must be positive).
  double perturbation = 0.1;
  // Estimation window length. -1 uses the whole trajectory, 0 picks the
  // method default (3d for SPGD/BSPGD, 2d for PerfGD).
  int horizon = 0;
  int wait = 1;        // deployments per update for the waiting baselines
  int init_steps = -1; // SPGD/BSPGD random walk phase; -1 means d
  double clip_norm = 10.0;  // SPGD/BSPGD gradient clip threshold; <= 0 disables
  long mc_samples = 10000;  // per class draws for Monte Carlo gradients
  Vector theta0;            // empty means zeros projected into the box
  bool fixed_base = false;  // difference against the first window entry

  void validate(const EnvironmentSpec& spec) const;
};

struct StepRecord {
  int step = 0;   // 1-based deployment index
  Vector theta;   // deployed model
  Vector mu_hat;  // observed state after the deployment
  Vector grad;    // gradient used for the update from theta; empty if none
  double loss_instantaneous = 0.0;
  double loss_long_term = 0.0;
  double frac_opt = 0.0;
  // DFO keeps an internal iterate distinct from the deployed probe.
  double internal_loss_long_term = std::numeric_limits<double>::quiet_NaN();
  double internal_frac_opt = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
  Method method = Method::SPGD;
  OptimizerConfig config;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  int degenerate_steps = 0;     // estimation skipped, previous gradient reused
  int noncontractive_steps = 0; // estimated state block rescaled into the unit ball
};

RunRecord run_spgd(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                   int T, std::uint64_t seed, const OptReference& opt);
RunRecord run_rgd(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                  int T, std::uint64_t seed, const OptReference& opt);
RunRecord run_perfgd(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                     int T, std::uint64_t seed, const OptReference& opt);
RunRecord run_dfo(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                  int T, std::uint64_t seed, const OptReference& opt);

// Dispatches on cfg.method. BSPGD shares the SPGD runner; it differs only in
// building the window from the known score instead of the raw inputs.
RunRecord run_optimizer(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                        int T, std::uint64_t seed, const OptReference& opt);

// First 1-based step whose long-term loss is within tol_frac * |loss_opt| of
// loss_opt; nullopt when the run never gets there.
std::optional<int> deployments_to_tolerance(const RunRecord& record,
                                            double loss_opt, double tol_frac);

}  // namespace perfopt
