// Simulated environments with state dependent distribution shift. The sampled
// population at time t is Gaussian with mean mu_t, and deploying a model theta
// moves the mean through a one step map m(theta, mu). Five variants are
// implemented; they share the EnvironmentSpec container and differ in the map,
// the loss, and the state layout.
#pragma once

#include <cstdint>
#include <string>

#include "perfopt/linalg.hpp"
#include "perfopt/rng.hpp"

namespace perfopt {

enum class EnvVariant { Linear, Nonlinear, Spam, Bottleneck, Oscillating };

std::string to_string(EnvVariant v);
EnvVariant env_variant_from_string(const std::string& s);

enum class ObservationMode { DirectNoise, SampleMean };

struct EnvironmentSpec {
  EnvVariant variant = EnvVariant::Linear;
  int d = 1;            // model dimension
  double delta = 0.5;   // adaptation rate of the mean map, in (0, 1)
  Matrix A;             // linear family response matrix (d x d)
  Vector b;             // linear family offset
  double R = 5.0;       // box half width for theta

  // Spam variant. The state stacks [spam mean; non-spam mean]; only the spam
  // mean evolves. alpha is the sender utility weight from the narrative model;
  // the reduced dynamics depend only on eps and delta, so it is carried in the
  // config but never read by the map.
  Vector mu0_spam;
  Vector mu1_spam;
  double spam_fraction = 0.5;
  double eps = 0.5;
  double alpha = -2.0;
  double ridge_lambda = 0.0;

  // Bottleneck variant: base direction, unit norm with nonnegative entries.
  Vector mu0;

  Matrix Sigma;               // per sample covariance; empty means identity
  double sigma_err = 1e-3;    // observation noise std
  ObservationMode observation = ObservationMode::DirectNoise;
  long sample_n = 1000000;    // draws averaged per observation in sample mode

  Vector mu_init;             // optional initial state; empty means settled at the incumbent model

  int state_dim() const;
  Vector theta_lo() const;
  Vector theta_hi() const;
  // Settled mean for the zero model, the default incumbent.
  Vector default_mu_init() const;
  Matrix covariance() const;  // Sigma, or identity when unset

  // Checks dimensional and numeric invariants, throws ConfigError.
  void validate() const;
};

// Dimension of the part of the state that actually moves (the spam state is
// half static), and its slice of a full state vector.
int evolving_dim(const EnvironmentSpec& spec);
Vector evolving_part(const EnvironmentSpec& spec, const Vector& mu_state);

struct EnvState {
  Vector mu;             // current true mean(s)
  long deployments = 0;
  RngStream noise;
};

// The population starts in equilibrium with the model deployed before the
// run. Passing the run's starting theta as incumbent makes the first
// observation the settled mean of that model; with no incumbent (or when
// spec.mu_init is set) the state starts at default_mu_init or the override.
EnvState make_env_state(const EnvironmentSpec& spec, std::uint64_t seed,
                        const Vector& incumbent = Vector());

// One application of the mean map, no noise.
Vector mean_map(const EnvironmentSpec& spec, const Vector& theta, const Vector& mu);

// Noisy view of the current state without advancing it.
Vector observe(const EnvironmentSpec& spec, EnvState& state);

// Advances the state by one deployment of theta and returns the observation.
Vector deploy_and_observe(const EnvironmentSpec& spec, EnvState& state, const Vector& theta);

// Fixed point of mu -> m(theta, mu).
Vector long_term_mean(const EnvironmentSpec& spec, const Vector& theta);

// Expected loss under the settled distribution. Closed form where available;
// the spam variant evaluates a fixed seed Monte Carlo estimate that is
// deterministic across calls.
double long_term_loss(const EnvironmentSpec& spec, const Vector& theta);

// Expected loss of theta against the distribution with mean state mu.
double instantaneous_loss(const EnvironmentSpec& spec, const Vector& theta, const Vector& mu);

struct OptReference {
  Vector theta;
  double loss = 0.0;
  std::string provenance;  // "closed-form" or "opt-search"
  bool converged = true;
};

// Reference performative optimum, cached per spec within the process.
OptReference opt_reference(const EnvironmentSpec& spec);

}  // namespace perfopt
