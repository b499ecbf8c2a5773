// Finite difference estimators for the partial derivatives of the mean map,
// the long-term Jacobian d mu*/d theta, and the long-term loss gradient. The
// mean map is treated as a black box observed through the deployed trajectory:
// each window entry pairs the joint input psi_t = [theta_t; mu_{t-1}] with the
// observed next mean mu_t.
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "perfopt/environment.hpp"
#include "perfopt/linalg.hpp"
#include "perfopt/rng.hpp"

namespace perfopt {

struct TrajectoryWindow {
  // With fixed_base set, differences are taken against the first pushed pair
  // instead of the most recent one. This keeps the regression well posed for
  // maps whose iterates alternate around the fixed point.
  bool fixed_base = false;

  std::vector<Vector> psi;  // joint inputs, one per deployment
  std::vector<Vector> mu;   // observed next means, aligned with psi

  Vector anchor_psi;
  Vector anchor_mu;

  void push(const Vector& psi_t, const Vector& mu_t);
  std::size_t size() const { return psi.size(); }
};

struct PartialsEstimate {
  Matrix d1m;  // d mu'/d theta, d_mu x d_theta
  Matrix d2m;  // d mu'/d mu, d_mu x d_mu
  double regressor_condition = 0.0;
};

// Least squares fit of both partials from the last horizon+1 window entries.
// Requires horizon >= dim(psi) so the difference matrix can have full row
// rank; throws InsufficientHorizonError otherwise and DegenerateWindowError
// when the differences do not span the input space.
PartialsEstimate estimate_partials(const TrajectoryWindow& window, int horizon);

// Variant for maps that act through a known low dimensional score,
// m(theta, mu) = mbar(s(theta, mu), mu). The window stores psi_t =
// [s_t; mu_{t-1}]; the fitted partials of mbar are pulled back through the
// provided score derivatives, evaluated at the current point.
PartialsEstimate estimate_partials_bottleneck(const TrajectoryWindow& window,
                                              int horizon,
                                              const Matrix& ds_dtheta,
                                              const Matrix& ds_dmu);

// Long-term Jacobian (I - d2m)^{-1} d1m, the limit of unrolling the estimated
// dynamics. Throws NonContractiveError when ||d2m|| >= 1.
Matrix estimate_lt_jacobian(const PartialsEstimate& partials);

// Finite unrolling (I + d2m + ... + d2m^{k-1}) d1m. Used to confirm the
// closed form is the k -> infinity limit.
Matrix estimate_lt_jacobian_truncated(const PartialsEstimate& partials, int k);

struct LongTermGradient {
  Vector grad;
  Matrix jacobian;  // the d mu*/d theta used
  double d2m_spectral_norm = std::numeric_limits<double>::quiet_NaN();
  double regressor_condition = std::numeric_limits<double>::quiet_NaN();
};

// Gradient of the long-term loss for the linear loss family
// l(z; theta) = -z' theta (+ ridge): the distribution term contributes
// -mu_hat and the shift term contributes -jac' theta.
Vector estimate_lt_grad_closed_linear(const Vector& theta, const Vector& mu_hat,
                                      const Matrix& jac, double ridge_lambda);

struct PointLoss {
  std::function<double(const Vector& z, const Vector& theta)> value;
  std::function<Vector(const Vector& z, const Vector& theta)> grad_theta;
};

// Monte Carlo gradient for a general point loss under z ~ N(mu_hat, Sigma):
// E[grad_theta l] plus the distribution shift term jac' E[l(z) Sigma^{-1}(z - mu_hat)].
Vector estimate_lt_grad_mc(const PointLoss& loss, const Vector& theta,
                           const Vector& mu_hat, const Matrix& jac,
                           const Matrix& Sigma, long n, RngStream& rng);

// Direct regression of d mu*/d theta from settled (theta, mu*) pairs, the
// estimator used by the waiting baseline.
Matrix estimate_jac_direct(const std::vector<Vector>& theta_hist,
                           const std::vector<Vector>& mu_hist, int horizon);

// Environment aware assembly of the long-term gradient at the current
// observation. Dispatches to the closed form for the linear loss family and
// to Monte Carlo for the spam mixture. Passing a zero jacobian yields the
// gradient with the distribution held fixed (the repeated minimization
// direction). mu_hat_state is the full observed state.
LongTermGradient estimate_lt_grad_env(const EnvironmentSpec& spec,
                                      const Vector& theta,
                                      const Vector& mu_hat_state,
                                      const Matrix& jac, long mc_n,
                                      RngStream& rng);

}  // namespace perfopt
