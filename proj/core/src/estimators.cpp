#include "perfopt/estimators.hpp"

#include <cmath>

#include "perfopt/errors.hpp"

namespace perfopt {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

struct DifferenceFit {
  Matrix coeffs;  // d_out x d_in
  double condition = 0.0;
};

// Least squares fit of Y_diff = J X_diff from column differences against a
// base point, solved through the pseudoinverse of the difference matrix.
DifferenceFit fit_differences(const std::vector<Vector>& xs,
                              const std::vector<Vector>& ys,
                              const Vector& base_x, const Vector& base_y,
                              int horizon, const char* who) {
  int n = static_cast<int>(xs.size());
  int d_in = static_cast<int>(base_x.size());
  int d_out = static_cast<int>(base_y.size());
  if (horizon < d_in)
    throw InsufficientHorizonError(std::string(who) +
                                   ": horizon must be at least the input dimension");
  if (n < horizon + 1)
    throw InsufficientHorizonError(std::string(who) +
                                   ": window holds fewer than horizon+1 points");

  // The most recent `horizon` entries before the newest one form the columns;
  // the newest entry (or the fixed anchor) is the base.
  Matrix dx(d_in, horizon);
  Matrix dy(d_out, horizon);
  for (int j = 0; j < horizon; ++j) {
    int idx = n - 1 - horizon + j;
    dx.col(j) = xs[idx] - base_x;
    dy.col(j) = ys[idx] - base_y;
  }

  Eigen::JacobiSVD<Matrix> svd(dx, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double smax = sv(0);
  if (!(smax > 0.0))
    throw DegenerateWindowError(std::string(who) + ": all differences vanish");
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * smax) ++rank;
  if (rank < d_in)
    throw DegenerateWindowError(std::string(who) +
                                ": differences are rank deficient");

  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * smax) inv_sv(i) = 1.0 / sv(i);
  Matrix pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();

  DifferenceFit fit;
  fit.coeffs = dy * pinv;
  fit.condition = smax / sv(sv.size() - 1);
  return fit;
}

}  // namespace

void TrajectoryWindow::push(const Vector& psi_t, const Vector& mu_t) {
  if (!psi.empty() && (psi_t.size() != psi[0].size() || mu_t.size() != mu[0].size()))
    throw InvalidInputError("TrajectoryWindow: inconsistent point dimensions");
  if (fixed_base && psi.empty()) {
    anchor_psi = psi_t;
    anchor_mu = mu_t;
  }
  psi.push_back(psi_t);
  mu.push_back(mu_t);
}

PartialsEstimate estimate_partials(const TrajectoryWindow& window, int horizon) {
  if (window.size() == 0)
    throw InvalidInputError("estimate_partials: empty window");
  int d_psi = static_cast<int>(window.psi[0].size());
  int d_mu = static_cast<int>(window.mu[0].size());
  int d_theta = d_psi - d_mu;
  if (d_theta < 1)
    throw InvalidInputError("estimate_partials: psi must stack theta and mu");

  const Vector& base_psi = window.fixed_base ? window.anchor_psi : window.psi.back();
  const Vector& base_mu = window.fixed_base ? window.anchor_mu : window.mu.back();
  DifferenceFit fit = fit_differences(window.psi, window.mu, base_psi, base_mu,
                                      horizon, "estimate_partials");

  PartialsEstimate pe;
  pe.d1m = fit.coeffs.leftCols(d_theta);
  pe.d2m = fit.coeffs.rightCols(d_mu);
  pe.regressor_condition = fit.condition;
  return pe;
}

PartialsEstimate estimate_partials_bottleneck(const TrajectoryWindow& window,
                                              int horizon,
                                              const Matrix& ds_dtheta,
                                              const Matrix& ds_dmu) {
  if (window.size() == 0)
    throw InvalidInputError("estimate_partials_bottleneck: empty window");
  int d_psi = static_cast<int>(window.psi[0].size());
  int d_mu = static_cast<int>(window.mu[0].size());
  int d_s = d_psi - d_mu;
  if (d_s < 1)
    throw InvalidInputError("estimate_partials_bottleneck: psi must stack score and mu");
  if (ds_dtheta.rows() != d_s || ds_dmu.rows() != d_s || ds_dmu.cols() != d_mu)
    throw InvalidInputError("estimate_partials_bottleneck: score derivative shapes");

  const Vector& base_psi = window.fixed_base ? window.anchor_psi : window.psi.back();
  const Vector& base_mu = window.fixed_base ? window.anchor_mu : window.mu.back();
  DifferenceFit fit = fit_differences(window.psi, window.mu, base_psi, base_mu,
                                      horizon, "estimate_partials_bottleneck");

  // Chain rule: m(theta, mu) = mbar(s(theta, mu), mu), so
  // d1m = dmbar/ds * ds/dtheta and d2m = dmbar/ds * ds/dmu + dmbar/dmu.
  Matrix ds_block = fit.coeffs.leftCols(d_s);
  Matrix dmu_block = fit.coeffs.rightCols(d_mu);
  PartialsEstimate pe;
  pe.d1m = ds_block * ds_dtheta;
  pe.d2m = ds_block * ds_dmu + dmu_block;
  pe.regressor_condition = fit.condition;
  return pe;
}

Matrix estimate_lt_jacobian(const PartialsEstimate& partials) {
  double norm = spectral_norm(partials.d2m);
  if (norm >= 1.0) throw NonContractiveError(norm);
  int d_mu = static_cast<int>(partials.d2m.rows());
  return invert_small(Matrix(Matrix::Identity(d_mu, d_mu) - partials.d2m)) *
         partials.d1m;
}

Matrix estimate_lt_jacobian_truncated(const PartialsEstimate& partials, int k) {
  if (k < 0) throw InvalidInputError("estimate_lt_jacobian_truncated: k must be >= 0");
  Matrix jac = Matrix::Zero(partials.d1m.rows(), partials.d1m.cols());
  for (int i = 0; i < k; ++i) jac = partials.d1m + partials.d2m * jac;
  return jac;
}

Vector estimate_lt_grad_closed_linear(const Vector& theta, const Vector& mu_hat,
                                      const Matrix& jac, double ridge_lambda) {
  if (jac.rows() != mu_hat.size() || jac.cols() != theta.size())
    throw InvalidInputError("estimate_lt_grad_closed_linear: jacobian shape");
  return -mu_hat - jac.transpose() * theta + ridge_lambda * theta;
}

Vector estimate_lt_grad_mc(const PointLoss& loss, const Vector& theta,
                           const Vector& mu_hat, const Matrix& jac,
                           const Matrix& Sigma, long n, RngStream& rng) {
  if (n < 1) throw InvalidInputError("estimate_lt_grad_mc: n must be >= 1");
  Eigen::LLT<Matrix> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw InvalidInputError("estimate_lt_grad_mc: Sigma must be positive definite");
  Matrix L = llt.matrixL();
  int d_z = static_cast<int>(mu_hat.size());

  Vector direct = Vector::Zero(theta.size());
  Vector score = Vector::Zero(d_z);
  for (long i = 0; i < n; ++i) {
    Vector xi = rng.normal_vector(d_z);
    Vector z = mu_hat + L * xi;
    direct += loss.grad_theta(z, theta);
    // Sigma^{-1}(z - mu_hat) = L^{-T} xi for Sigma = L L'.
    score += loss.value(z, theta) *
             Vector(L.transpose().triangularView<Eigen::Upper>().solve(xi));
  }
  direct /= static_cast<double>(n);
  score /= static_cast<double>(n);
  return direct + jac.transpose() * score;
}

Matrix estimate_jac_direct(const std::vector<Vector>& theta_hist,
                           const std::vector<Vector>& mu_hist, int horizon) {
  if (theta_hist.empty() || theta_hist.size() != mu_hist.size())
    throw InvalidInputError("estimate_jac_direct: history sizes");
  DifferenceFit fit =
      fit_differences(theta_hist, mu_hist, theta_hist.back(), mu_hist.back(),
                      horizon, "estimate_jac_direct");
  return fit.coeffs;
}

LongTermGradient estimate_lt_grad_env(const EnvironmentSpec& spec,
                                      const Vector& theta,
                                      const Vector& mu_hat_state,
                                      const Matrix& jac, long mc_n,
                                      RngStream& rng) {
  if (mu_hat_state.size() != spec.state_dim())
    throw InvalidInputError("estimate_lt_grad_env: state size");
  LongTermGradient out;
  out.jacobian = jac;
  switch (spec.variant) {
    case EnvVariant::Linear:
    case EnvVariant::Nonlinear:
    case EnvVariant::Oscillating:
      out.grad = estimate_lt_grad_closed_linear(theta, mu_hat_state, jac, 0.0);
      return out;
    case EnvVariant::Bottleneck:
      out.grad = estimate_lt_grad_closed_linear(theta, mu_hat_state, jac,
                                                spec.ridge_lambda);
      return out;
    case EnvVariant::Spam: {
      Matrix S = spec.covariance();
      auto softplus = [](double x) {
        return x > 30.0 ? x : std::log1p(std::exp(x));
      };
      PointLoss spam_loss{
          [softplus](const Vector& z, const Vector& th) {
            return softplus(-th.dot(z));
          },
          [](const Vector& z, const Vector& th) {
            return Vector(-sigmoid(-th.dot(z)) * z);
          }};
      PointLoss ham_loss{
          [softplus](const Vector& z, const Vector& th) {
            return softplus(th.dot(z));
          },
          [](const Vector& z, const Vector& th) {
            return Vector(sigmoid(th.dot(z)) * z);
          }};
      Vector mu_spam = mu_hat_state.head(spec.d);
      Vector mu_ham = mu_hat_state.tail(spec.d);
      Matrix zero_jac = Matrix::Zero(spec.d, spec.d);
      Vector g_spam =
          estimate_lt_grad_mc(spam_loss, theta, mu_spam, jac, S, mc_n, rng);
      Vector g_ham =
          estimate_lt_grad_mc(ham_loss, theta, mu_ham, zero_jac, S, mc_n, rng);
      out.grad = spec.spam_fraction * g_spam +
                 (1.0 - spec.spam_fraction) * g_ham +
                 spec.ridge_lambda * theta;
      return out;
    }
  }
  throw InvalidInputError("estimate_lt_grad_env: unknown variant");
}

}  // namespace perfopt
