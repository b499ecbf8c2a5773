#include "perfopt/environment.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <mutex>
#include <vector>

#include "perfopt/errors.hpp"
#include "perfopt/oracles.hpp"

namespace perfopt {

namespace {

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

// Fixed standard normal draws shared by every spam loss evaluation. Freezing
// the draws makes the Monte Carlo loss a deterministic, smooth function of
// theta, which keeps finite differences and repeated evaluations consistent.
const std::vector<double>& spam_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(100000);
    RngStream r(0x5eedcafef00dULL);
    for (auto& x : t) x = r.normal();
    return t;
  }();
  return table;
}

// Mixture cross entropy for the spam classifier. Reduces the d dimensional
// Gaussian expectation to one dimension through u = theta' z.
double spam_mixture_loss(const EnvironmentSpec& spec, const Vector& theta,
                         const Vector& mu_spam, const Vector& mu_nonspam) {
  double u_s = theta.dot(mu_spam);
  double u_n = theta.dot(mu_nonspam);
  Matrix S = spec.covariance();
  double var = theta.dot(S * theta);
  double sd = var > 0.0 ? std::sqrt(var) : 0.0;
  const auto& xi = spam_table();
  double acc_s = 0.0, acc_n = 0.0;
  for (double x : xi) {
    acc_s += softplus(-(u_s + sd * x));  // spam labeled 1
    acc_n += softplus(u_n + sd * x);     // non-spam labeled 0
  }
  double n = static_cast<double>(xi.size());
  double w = spec.spam_fraction;
  return w * acc_s / n + (1.0 - w) * acc_n / n +
         0.5 * spec.ridge_lambda * theta.squaredNorm();
}

void append_double(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx,", static_cast<unsigned long long>(bits));
  out += buf;
}

std::string spec_key(const EnvironmentSpec& spec) {
  std::string key = to_string(spec.variant) + ";" + std::to_string(spec.d) + ";";
  append_double(key, spec.delta);
  append_double(key, spec.R);
  append_double(key, spec.eps);
  append_double(key, spec.spam_fraction);
  append_double(key, spec.ridge_lambda);
  for (const Vector* v : {&spec.b, &spec.mu0, &spec.mu0_spam, &spec.mu1_spam}) {
    key += "|";
    for (Eigen::Index i = 0; i < v->size(); ++i) append_double(key, (*v)[i]);
  }
  for (const Matrix* m : {&spec.A, &spec.Sigma}) {
    key += "|";
    for (Eigen::Index i = 0; i < m->size(); ++i) append_double(key, m->data()[i]);
  }
  return key;
}

bool is_linear_family(EnvVariant v) {
  return v == EnvVariant::Linear || v == EnvVariant::Nonlinear ||
         v == EnvVariant::Oscillating;
}

}  // namespace

std::string to_string(EnvVariant v) {
  switch (v) {
    case EnvVariant::Linear: return "linear";
    case EnvVariant::Nonlinear: return "nonlinear";
    case EnvVariant::Spam: return "spam";
    case EnvVariant::Bottleneck: return "bottleneck";
    case EnvVariant::Oscillating: return "oscillating";
  }
  throw InvalidInputError("unknown environment variant");
}

EnvVariant env_variant_from_string(const std::string& s) {
  if (s == "linear") return EnvVariant::Linear;
  if (s == "nonlinear") return EnvVariant::Nonlinear;
  if (s == "spam") return EnvVariant::Spam;
  if (s == "bottleneck") return EnvVariant::Bottleneck;
  if (s == "oscillating") return EnvVariant::Oscillating;
  throw ConfigError("unknown environment variant '" + s + "'");
}

int EnvironmentSpec::state_dim() const {
  return variant == EnvVariant::Spam ? 2 * d : d;
}

Vector EnvironmentSpec::theta_lo() const {
  if (variant == EnvVariant::Bottleneck) return Vector::Zero(d);
  return Vector::Constant(d, -R);
}

Vector EnvironmentSpec::theta_hi() const {
  if (variant == EnvVariant::Bottleneck)
    return Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  return Vector::Constant(d, R);
}

Vector EnvironmentSpec::default_mu_init() const {
  return long_term_mean(*this, Vector::Zero(d));
}

Matrix EnvironmentSpec::covariance() const {
  if (Sigma.size() > 0) return Sigma;
  return Matrix::Identity(d, d);
}

void EnvironmentSpec::validate() const {
  if (d < 1) throw ConfigError("env: d must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("env: delta must be in (0, 1)");
  if (!(R > 0.0)) throw ConfigError("env: R must be positive");
  if (sigma_err < 0.0) throw ConfigError("env: sigma_err must be >= 0");
  if (sample_n < 1) throw ConfigError("env: sample_n must be >= 1");
  if (Sigma.size() > 0) {
    if (Sigma.rows() != d || Sigma.cols() != d)
      throw ConfigError("env: Sigma must be d x d");
    if (!Sigma.isApprox(Matrix(Sigma.transpose()), 1e-10))
      throw ConfigError("env: Sigma must be symmetric");
    Eigen::LLT<Matrix> llt(Sigma);
    if (llt.info() != Eigen::Success)
      throw ConfigError("env: Sigma must be positive definite");
  }
  if (is_linear_family(variant)) {
    if (A.rows() != d || A.cols() != d) throw ConfigError("env: A must be d x d");
    if (b.size() != d) throw ConfigError("env: b must have length d");
    if (ridge_lambda != 0.0)
      throw ConfigError("env: ridge_lambda is only used by spam and bottleneck");
  }
  if (variant == EnvVariant::Spam) {
    if (mu0_spam.size() != d || mu1_spam.size() != d)
      throw ConfigError("env: spam class means must have length d");
    if (!(spam_fraction >= 0.0 && spam_fraction <= 1.0))
      throw ConfigError("env: spam_fraction must be in [0, 1]");
    if (!(eps > 0.0)) throw ConfigError("env: eps must be positive");
    if (ridge_lambda < 0.0) throw ConfigError("env: ridge_lambda must be >= 0");
  }
  if (variant == EnvVariant::Bottleneck) {
    if (mu0.size() != d) throw ConfigError("env: mu0 must have length d");
    if (std::abs(mu0.norm() - 1.0) > 1e-8)
      throw ConfigError("env: mu0 must have unit norm");
    if (mu0.minCoeff() < 0.0) throw ConfigError("env: mu0 must be nonnegative");
    if (ridge_lambda < 0.0) throw ConfigError("env: ridge_lambda must be >= 0");
  }
  if (mu_init.size() > 0 && mu_init.size() != state_dim())
    throw ConfigError("env: mu_init must match the state dimension");
}

int evolving_dim(const EnvironmentSpec& spec) { return spec.d; }

Vector evolving_part(const EnvironmentSpec& spec, const Vector& mu_state) {
  if (spec.variant == EnvVariant::Spam) return mu_state.head(spec.d);
  return mu_state;
}

EnvState make_env_state(const EnvironmentSpec& spec, std::uint64_t seed,
                        const Vector& incumbent) {
  EnvState state;
  if (spec.mu_init.size() > 0)
    state.mu = spec.mu_init;
  else if (incumbent.size() > 0)
    state.mu = long_term_mean(spec, incumbent);
  else
    state.mu = spec.default_mu_init();
  state.noise = RngStream(seed);
  return state;
}

Vector mean_map(const EnvironmentSpec& spec, const Vector& theta, const Vector& mu) {
  if (theta.size() != spec.d) throw InvalidInputError("mean_map: theta has wrong size");
  if (mu.size() != spec.state_dim()) throw InvalidInputError("mean_map: mu has wrong size");
  switch (spec.variant) {
    case EnvVariant::Linear:
      return spec.delta * (spec.A * theta + spec.b) + (1.0 - spec.delta) * mu;
    case EnvVariant::Nonlinear: {
      Vector target = spec.A * theta + spec.b;
      Vector out(spec.d);
      for (int i = 0; i < spec.d; ++i) {
        double w = std::pow(spec.delta, mu[i] * mu[i]);
        out[i] = w * target[i] + (1.0 - w) * mu[i];
      }
      return out;
    }
    case EnvVariant::Oscillating:
      return spec.delta * (spec.A * theta + spec.b) - (1.0 - spec.delta) * mu;
    case EnvVariant::Spam: {
      Vector out = mu;
      out.head(spec.d) = spec.delta * (spec.mu0_spam - spec.eps * theta) +
                         (1.0 - spec.delta) * mu.head(spec.d);
      return out;
    }
    case EnvVariant::Bottleneck: {
      double s = theta.dot(mu);
      if (s < -1e-9 || s > 1.0 + 1e-9)
        throw InvalidInputError("mean_map: bottleneck score outside [0, 1]");
      return (1.0 - s) * spec.mu0;
    }
  }
  throw InvalidInputError("mean_map: unknown variant");
}

Vector observe(const EnvironmentSpec& spec, EnvState& state) {
  int n = spec.state_dim();
  if (spec.observation == ObservationMode::DirectNoise) {
    if (spec.sigma_err == 0.0) return state.mu;
    return state.mu + state.noise.normal_vector(n, spec.sigma_err);
  }
  // Sample mean mode. The empirical mean of sample_n Gaussian draws is itself
  // Gaussian with covariance Sigma / n, so we draw it directly.
  Matrix S = spec.covariance();
  Eigen::LLT<Matrix> llt(S);
  Matrix L = llt.matrixL();
  double scale = 1.0 / std::sqrt(static_cast<double>(spec.sample_n));
  Vector out = state.mu;
  for (int block = 0; block * spec.d < n; ++block) {
    Vector xi = state.noise.normal_vector(spec.d);
    out.segment(block * spec.d, spec.d) += scale * (L * xi);
  }
  return out;
}

Vector deploy_and_observe(const EnvironmentSpec& spec, EnvState& state, const Vector& theta) {
  state.mu = mean_map(spec, theta, state.mu);
  if (spec.variant == EnvVariant::Bottleneck && state.mu.norm() > 1.0 + 1e-9)
    throw InvalidInputError("deploy_and_observe: bottleneck state left the unit ball");
  ++state.deployments;
  return observe(spec, state);
}

Vector long_term_mean(const EnvironmentSpec& spec, const Vector& theta) {
  if (theta.size() != spec.d)
    throw InvalidInputError("long_term_mean: theta has wrong size");
  switch (spec.variant) {
    case EnvVariant::Linear:
    case EnvVariant::Nonlinear:
      return spec.A * theta + spec.b;
    case EnvVariant::Oscillating:
      return (spec.delta / (2.0 - spec.delta)) * (spec.A * theta + spec.b);
    case EnvVariant::Spam: {
      Vector mu(2 * spec.d);
      mu.head(spec.d) = spec.mu0_spam - spec.eps * theta;
      mu.tail(spec.d) = spec.mu1_spam;
      return mu;
    }
    case EnvVariant::Bottleneck: {
      double denom = 1.0 + theta.dot(spec.mu0);
      if (denom <= 1e-12)
        throw InvalidInputError("long_term_mean: bottleneck denominator not positive");
      return spec.mu0 / denom;
    }
  }
  throw InvalidInputError("long_term_mean: unknown variant");
}

double long_term_loss(const EnvironmentSpec& spec, const Vector& theta) {
  switch (spec.variant) {
    case EnvVariant::Linear:
    case EnvVariant::Nonlinear:
      return -(spec.A * theta + spec.b).dot(theta);
    case EnvVariant::Oscillating:
      return -(spec.delta / (2.0 - spec.delta)) * (spec.A * theta + spec.b).dot(theta);
    case EnvVariant::Spam:
      return spam_mixture_loss(spec, theta, spec.mu0_spam - spec.eps * theta,
                               spec.mu1_spam);
    case EnvVariant::Bottleneck: {
      double denom = 1.0 + theta.dot(spec.mu0);
      if (denom <= 1e-12)
        throw InvalidInputError("long_term_loss: bottleneck denominator not positive");
      return -theta.dot(spec.mu0) / denom +
             0.5 * spec.ridge_lambda * theta.squaredNorm();
    }
  }
  throw InvalidInputError("long_term_loss: unknown variant");
}

double instantaneous_loss(const EnvironmentSpec& spec, const Vector& theta, const Vector& mu) {
  if (mu.size() != spec.state_dim())
    throw InvalidInputError("instantaneous_loss: mu has wrong size");
  switch (spec.variant) {
    case EnvVariant::Linear:
    case EnvVariant::Nonlinear:
    case EnvVariant::Oscillating:
      return -mu.dot(theta);
    case EnvVariant::Spam:
      return spam_mixture_loss(spec, theta, mu.head(spec.d), mu.tail(spec.d));
    case EnvVariant::Bottleneck:
      return -mu.dot(theta) + 0.5 * spec.ridge_lambda * theta.squaredNorm();
  }
  throw InvalidInputError("instantaneous_loss: unknown variant");
}

OptReference opt_reference(const EnvironmentSpec& spec) {
  static std::mutex cache_mutex;
  static std::map<std::string, OptReference> cache;
  std::string key = spec_key(spec);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }

  OptReference ref;
  if (is_linear_family(spec.variant)) {
    // argmin of -theta' (A theta + b) is -(A + A')^{-1} b, which reduces to
    // -A^{-1} b / 2 for symmetric A. The oscillating loss is a positive
    // multiple of the linear one, so the argmin is shared.
    Matrix sym = spec.A + Matrix(spec.A.transpose());
    ref.theta = project_box(Vector(-invert_small(sym) * spec.b),
                            spec.theta_lo(), spec.theta_hi());
    ref.loss = long_term_loss(spec, ref.theta);
    ref.provenance = "closed-form";
    ref.converged = true;
  } else {
    OptSearchResult res = opt_search(spec, 1e-6);
    ref.theta = res.theta;
    ref.loss = res.loss;
    ref.provenance = "opt-search";
    ref.converged = res.converged;
  }

  std::lock_guard<std::mutex> lock(cache_mutex);
  cache.emplace(key, ref);
  return ref;
}

}  // namespace perfopt
