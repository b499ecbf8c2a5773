#include "perfopt/optimizers.hpp"

#include <cmath>

#include "perfopt/errors.hpp"
#include "perfopt/estimators.hpp"
#include "perfopt/rng.hpp"

namespace perfopt {

namespace {

constexpr std::uint64_t kEnvSalt = 0x454e56;  // environment noise stream
constexpr std::uint64_t kOptSalt = 0x4f5054;  // optimizer randomness stream

double frac_of_opt(double loss, const OptReference& opt) {
  if (std::abs(opt.loss) < 1e-300) return std::numeric_limits<double>::quiet_NaN();
  return loss / opt.loss;
}

StepRecord make_step(const EnvironmentSpec& spec, const OptReference& opt, int t,
                     const Vector& theta, const Vector& mu_hat, const Vector& grad) {
  StepRecord s;
  s.step = t;
  s.theta = theta;
  s.mu_hat = mu_hat;
  s.grad = grad;
  s.loss_instantaneous = instantaneous_loss(spec, theta, mu_hat);
  s.loss_long_term = long_term_loss(spec, theta);
  s.frac_opt = frac_of_opt(s.loss_long_term, opt);
  return s;
}

Vector initial_theta(const EnvironmentSpec& spec, const OptimizerConfig& cfg) {
  Vector theta = cfg.theta0.size() > 0 ? cfg.theta0 : Vector::Zero(spec.d);
  return project_box(theta, spec.theta_lo(), spec.theta_hi());
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::SPGD: return "SPGD";
    case Method::BSPGD: return "BSPGD";
    case Method::RGD: return "RGD";
    case Method::PerfGD: return "PerfGD";
    case Method::DFO: return "DFO";
  }
  throw InvalidInputError("unknown method");
}

Method method_from_string(const std::string& s) {
  if (s == "SPGD") return Method::SPGD;
  if (s == "BSPGD") return Method::BSPGD;
  if (s == "RGD") return Method::RGD;
  if (s == "PerfGD") return Method::PerfGD;
  if (s == "DFO") return Method::DFO;
  throw ConfigError("unknown method '" + s + "'");
}

void OptimizerConfig::validate(const EnvironmentSpec& spec) const {
  if (!(lr > 0.0)) throw ConfigError("optimizer: lr must be positive");
  if (perturbation < 0.0) throw ConfigError("optimizer: perturbation must be >= 0");
  if (method == Method::DFO && !(perturbation > 0.0))
    throw ConfigError("optimizer: DFO requires a positive probe radius");
  if ((method == Method::DFO || method == Method::PerfGD) && wait < 1)
    throw ConfigError("optimizer: wait must be >= 1");
  if (horizon < -1) throw ConfigError("optimizer: horizon must be -1, 0, or positive");
  if (method == Method::BSPGD && spec.variant != EnvVariant::Bottleneck)
    throw ConfigError("optimizer: BSPGD needs the bottleneck environment");
  if (method == Method::SPGD || method == Method::BSPGD) {
    int d_psi = method == Method::BSPGD ? 1 + evolving_dim(spec)
                                        : spec.d + evolving_dim(spec);
    if (horizon > 0 && horizon < d_psi)
      throw ConfigError("optimizer: horizon below the regressor dimension");
  }
  if (method == Method::PerfGD && horizon > 0 && horizon < spec.d)
    throw ConfigError("optimizer: PerfGD horizon below d");
  if (init_steps < -1) throw ConfigError("optimizer: init_steps must be >= -1");
  if (mc_samples < 1) throw ConfigError("optimizer: mc_samples must be >= 1");
  if (theta0.size() > 0 && theta0.size() != spec.d)
    throw ConfigError("optimizer: theta0 must have length d");
}

RunRecord run_spgd(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                   int T, std::uint64_t seed, const OptReference& opt) {
  cfg.validate(spec);
  if (T < 1) throw InvalidInputError("run_spgd: T must be >= 1");
  bool score_window = cfg.method == Method::BSPGD;
  int d = spec.d;
  int d_ev = evolving_dim(spec);
  int d_psi = score_window ? 1 + d_ev : d + d_ev;
  int horizon_cfg = cfg.horizon == 0 ? 3 * d : cfg.horizon;
  int init_steps = cfg.init_steps < 0 ? d : cfg.init_steps;

  RunRecord rec;
  rec.method = cfg.method;
  rec.config = cfg;
  rec.seed = seed;

  RngStream opt_rng(mix_seed(seed, kOptSalt));
  Vector lo = spec.theta_lo(), hi = spec.theta_hi();
  Vector theta = initial_theta(spec, cfg);
  EnvState state = make_env_state(spec, mix_seed(seed, kEnvSalt), theta);
  // Look at the state once before the first deployment so psi_1 has a
  // predecessor mean. This read is not a deployment.
  Vector mu_prev = evolving_part(spec, observe(spec, state));

  TrajectoryWindow window;
  window.fixed_base = cfg.fixed_base;
  Vector last_grad = Vector::Zero(d);

  for (int t = 1; t <= T; ++t) {
    Vector mu_hat = deploy_and_observe(spec, state, theta);
    Vector mu_ev = evolving_part(spec, mu_hat);

    Vector psi(d_psi);
    if (score_window) {
      psi[0] = theta.dot(mu_prev);
      psi.tail(d_ev) = mu_prev;
    } else {
      psi.head(d) = theta;
      psi.tail(d_ev) = mu_prev;
    }
    window.push(psi, mu_ev);

    bool in_init = t <= init_steps;
    if (!in_init && static_cast<int>(window.size()) >= d_psi + 1) {
      int avail = static_cast<int>(window.size()) - 1;
      int H = horizon_cfg < 0 ? avail : std::min(horizon_cfg, avail);
      if (H >= d_psi) {
        try {
          PartialsEstimate pe =
              score_window
                  ? estimate_partials_bottleneck(window, H,
                                                 Matrix(mu_prev.transpose()),
                                                 Matrix(theta.transpose()))
                  : estimate_partials(window, H);
          double d2norm = spectral_norm(pe.d2m);
          Matrix jac;
          try {
            jac = estimate_lt_jacobian(pe);
          } catch (const NonContractiveError&) {
            // The fitted state block is outside the unit ball, usually a
            // noise artifact early on. Shrink it just inside and continue.
            ++rec.noncontractive_steps;
            pe.d2m *= (1.0 - 1e-3) / d2norm;
            d2norm = 1.0 - 1e-3;
            jac = estimate_lt_jacobian(pe);
          }
          LongTermGradient g =
              estimate_lt_grad_env(spec, theta, mu_hat, jac, cfg.mc_samples, opt_rng);
          last_grad = cfg.clip_norm > 0.0 ? clip_gradient(g.grad, cfg.clip_norm)
                                          : g.grad;
        } catch (const DegenerateWindowError&) {
          ++rec.degenerate_steps;  // reuse the previous gradient
        }
      }
    }

    rec.steps.push_back(
        make_step(spec, opt, t, theta, mu_hat, in_init ? Vector() : last_grad));

    Vector drive = in_init ? Vector(Vector::Zero(d)) : last_grad;
    if (cfg.perturbation > 0.0)
      drive += opt_rng.normal_vector(d, cfg.perturbation);
    theta = project_box(Vector(theta - cfg.lr * drive), lo, hi);
    mu_prev = mu_ev;
  }
  return rec;
}

RunRecord run_rgd(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                  int T, std::uint64_t seed, const OptReference& opt) {
  cfg.validate(spec);
  if (T < 1) throw InvalidInputError("run_rgd: T must be >= 1");
  RunRecord rec;
  rec.method = Method::RGD;
  rec.config = cfg;
  rec.seed = seed;

  RngStream opt_rng(mix_seed(seed, kOptSalt));
  Vector lo = spec.theta_lo(), hi = spec.theta_hi();
  Vector theta = initial_theta(spec, cfg);
  EnvState state = make_env_state(spec, mix_seed(seed, kEnvSalt), theta);
  Matrix zero_jac = Matrix::Zero(evolving_dim(spec), spec.d);

  for (int t = 1; t <= T; ++t) {
    Vector mu_hat = deploy_and_observe(spec, state, theta);
    // Repeated minimization: gradient with the distribution held fixed.
    LongTermGradient g =
        estimate_lt_grad_env(spec, theta, mu_hat, zero_jac, cfg.mc_samples, opt_rng);
    rec.steps.push_back(make_step(spec, opt, t, theta, mu_hat, g.grad));
    theta = project_box(Vector(theta - cfg.lr * g.grad), lo, hi);
  }
  return rec;
}

RunRecord run_perfgd(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                     int T, std::uint64_t seed, const OptReference& opt) {
  cfg.validate(spec);
  if (T < 1) throw InvalidInputError("run_perfgd: T must be >= 1");
  int d = spec.d;
  int horizon_cfg = cfg.horizon == 0 ? 2 * d : cfg.horizon;
  int n_perturb = horizon_cfg > 0 ? horizon_cfg : d + 1;

  RunRecord rec;
  rec.method = Method::PerfGD;
  rec.config = cfg;
  rec.seed = seed;

  RngStream opt_rng(mix_seed(seed, kOptSalt));
  Vector lo = spec.theta_lo(), hi = spec.theta_hi();
  Vector theta = initial_theta(spec, cfg);
  EnvState state = make_env_state(spec, mix_seed(seed, kEnvSalt), theta);

  std::vector<Vector> theta_hist, mu_hist;
  Vector last_grad = Vector::Zero(d);
  bool have_grad = false;

  int t = 0, outer = 0;
  while (t < T) {
    // Redeploy until the mean has (approximately) settled, then treat the
    // final observation as a long-term mean sample for theta.
    int w = std::min(cfg.wait, T - t);
    Vector mu_hat;
    for (int i = 0; i < w; ++i) {
      mu_hat = deploy_and_observe(spec, state, theta);
      ++t;
      rec.steps.push_back(
          make_step(spec, opt, t, theta, mu_hat, have_grad ? last_grad : Vector()));
    }
    ++outer;
    theta_hist.push_back(theta);
    mu_hist.push_back(evolving_part(spec, mu_hat));

    int avail = static_cast<int>(theta_hist.size()) - 1;
    int H = horizon_cfg < 0 ? avail : std::min(horizon_cfg, avail);
    if (H >= d) {
      try {
        Matrix jac = estimate_jac_direct(theta_hist, mu_hist, H);
        LongTermGradient g =
            estimate_lt_grad_env(spec, theta, mu_hat, jac, cfg.mc_samples, opt_rng);
        last_grad = g.grad;
        have_grad = true;
      } catch (const DegenerateWindowError&) {
        ++rec.degenerate_steps;
      }
    }

    Vector drive = last_grad;
    if (outer <= n_perturb && cfg.perturbation > 0.0)
      drive += opt_rng.normal_vector(d, cfg.perturbation);
    theta = project_box(Vector(theta - cfg.lr * drive), lo, hi);
  }
  return rec;
}

RunRecord run_dfo(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                  int T, std::uint64_t seed, const OptReference& opt) {
  cfg.validate(spec);
  if (T < 1) throw InvalidInputError("run_dfo: T must be >= 1");
  int d = spec.d;

  RunRecord rec;
  rec.method = Method::DFO;
  rec.config = cfg;
  rec.seed = seed;

  RngStream opt_rng(mix_seed(seed, kOptSalt));
  Vector lo = spec.theta_lo(), hi = spec.theta_hi();
  Vector theta_int = initial_theta(spec, cfg);
  EnvState state = make_env_state(spec, mix_seed(seed, kEnvSalt), theta_int);

  Vector last_grad;
  int t = 0;
  while (t < T) {
    Vector u = opt_rng.unit_sphere(d);
    Vector theta_q = project_box(Vector(theta_int + cfg.perturbation * u), lo, hi);
    double internal_loss = long_term_loss(spec, theta_int);
    double internal_frac = frac_of_opt(internal_loss, opt);

    int w = std::min(cfg.wait, T - t);
    Vector mu_hat;
    for (int i = 0; i < w; ++i) {
      mu_hat = deploy_and_observe(spec, state, theta_q);
      ++t;
      StepRecord s = make_step(spec, opt, t, theta_q, mu_hat, last_grad);
      s.internal_loss_long_term = internal_loss;
      s.internal_frac_opt = internal_frac;
      rec.steps.push_back(std::move(s));
    }

    // One point estimate: the settled instantaneous loss at the probe scales
    // the probe direction.
    double sampled_loss = instantaneous_loss(spec, theta_q, mu_hat);
    last_grad = (static_cast<double>(d) / cfg.perturbation) * sampled_loss * u;
    theta_int = project_box(Vector(theta_int - cfg.lr * last_grad), lo, hi);
  }
  return rec;
}

RunRecord run_optimizer(const EnvironmentSpec& spec, const OptimizerConfig& cfg,
                        int T, std::uint64_t seed, const OptReference& opt) {
  switch (cfg.method) {
    case Method::SPGD:
    case Method::BSPGD:
      return run_spgd(spec, cfg, T, seed, opt);
    case Method::RGD:
      return run_rgd(spec, cfg, T, seed, opt);
    case Method::PerfGD:
      return run_perfgd(spec, cfg, T, seed, opt);
    case Method::DFO:
      return run_dfo(spec, cfg, T, seed, opt);
  }
  throw InvalidInputError("run_optimizer: unknown method");
}

std::optional<int> deployments_to_tolerance(const RunRecord& record,
                                            double loss_opt, double tol_frac) {
  if (tol_frac < 0.0) throw InvalidInputError("deployments_to_tolerance: tol_frac");
  double band = loss_opt + tol_frac * std::abs(loss_opt);
  for (const auto& s : record.steps)
    if (s.loss_long_term <= band) return s.step;
  return std::nullopt;
}

}  // namespace perfopt
