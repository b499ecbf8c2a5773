// Ground truth oracles used to validate the estimators and environments.
// These are reference implementations: slower, independent code paths that the
// tests and the validate command compare against. Every oracle reports what it
// computed and with which parameters so results stay auditable.
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "perfopt/environment.hpp"
#include "perfopt/linalg.hpp"

namespace perfopt {

struct OracleReport {
  std::string quantity;
  std::string method;
  double parameter = 0.0;    // step size, sample count, or tolerance
  double error_bound = 0.0;  // a priori error scale; 0 when not applicable
};

struct FdGradientResult {
  Vector grad;
  OracleReport report;
};

// Central finite differences, O(h^2) truncation error.
FdGradientResult fd_gradient(const std::function<double(const Vector&)>& f,
                             const Vector& x, double h);

struct SettleResult {
  Vector mu;
  int steps = 0;
  OracleReport report;
};

// Iterates the noise free mean map k times from mu_start.
SettleResult settle_mu(const EnvironmentSpec& spec, const Vector& theta,
                       const Vector& mu_start, int k);

struct EnvelopeCheckResult {
  bool ok = false;
  double worst_ratio = 0.0;  // max over steps of ||deviation|| / envelope
  int steps = 0;
  OracleReport report;
};

// Verifies that the deviation from the fixed point contracts at least
// geometrically along the iterated map. The per step rate is 1 - delta for the
// linear, oscillating and spam maps, max_i (1 - delta^{mu_i^2}) for the
// nonlinear map (evaluated at the current state), and ||theta||_2 for the
// bottleneck map.
EnvelopeCheckResult settle_envelope_check(const EnvironmentSpec& spec,
                                          const Vector& theta,
                                          const Vector& mu_start, int k);

struct OptSearchResult {
  Vector theta;
  double loss = 0.0;
  bool converged = false;
  int iterations = 0;
  OracleReport report;
};

// Numerical minimizer of the long-term loss over the feasible box:
// multi-start projected gradient descent with backtracking line search.
// Deterministic; convergence is declared when the projected gradient residual
// falls below tol.
OptSearchResult opt_search(const EnvironmentSpec& spec, double tol);

struct McResult {
  double value = 0.0;
  double se = 0.0;
  OracleReport report;
};

// Monte Carlo estimate of E[f(z)] for z ~ N(mu, Sigma).
McResult mc_expectation(const std::function<double(const Vector&)>& f,
                        const Vector& mu, const Matrix& Sigma, long n,
                        std::uint64_t seed);

struct McVectorResult {
  Vector value;
  Vector se;
  OracleReport report;
};

McVectorResult mc_expectation_vec(const std::function<Vector(const Vector&)>& f,
                                  int out_dim, const Vector& mu,
                                  const Matrix& Sigma, long n,
                                  std::uint64_t seed);

// Exact Jacobian of the long-term mean with respect to theta (the evolving
// block only for the spam variant).
Matrix true_lt_jacobian(const EnvironmentSpec& spec, const Vector& theta);

}  // namespace perfopt
