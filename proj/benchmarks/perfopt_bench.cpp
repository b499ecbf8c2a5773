// Microbenchmarks for the hot paths: the per step window regression and
// jacobian solve that dominate the stateful optimizer, whole optimizer runs,
// and the two loss evaluations that dwarf everything else when present (the
// spam mixture table and the settled gradient cross check).

#include <benchmark/benchmark.h>

#include <cstdint>

#include "perfopt/config.hpp"
#include "perfopt/environment.hpp"
#include "perfopt/estimators.hpp"
#include "perfopt/optimizers.hpp"
#include "perfopt/oracles.hpp"
#include "perfopt/rng.hpp"

namespace {

using namespace perfopt;

EnvironmentSpec linear_spec(int d) {
  EnvironmentSpec spec;
  spec.variant = EnvVariant::Linear;
  spec.d = d;
  spec.delta = 0.5;
  spec.A = -0.8 * Matrix::Identity(d, d);
  spec.b = 2.0 * Vector::Ones(d);
  spec.sigma_err = 1e-3;
  spec.validate();
  return spec;
}

// Window fed by a contracting affine map with a little noise, the same shape
// the optimizer sees at steady state.
TrajectoryWindow affine_window(int d, int entries) {
  RngStream rng(42);
  const Matrix B1 = 0.5 * Matrix::Identity(d, d);
  const Matrix B2 = 0.3 * Matrix::Identity(d, d);
  const Vector c = Vector::Ones(d);
  TrajectoryWindow window;
  Vector mu = Vector::Zero(d);
  for (int t = 0; t < entries; ++t) {
    const Vector theta = rng.normal_vector(d);
    Vector psi(2 * d);
    psi << theta, mu;
    Vector next = B1 * theta + B2 * mu + c + rng.normal_vector(d, 1e-4);
    window.push(psi, next);
    mu = next;
  }
  return window;
}

void BM_EstimatePartials(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int horizon = 3 * d;
  const TrajectoryWindow window = affine_window(d, horizon + 1);
  for (auto _ : state) {
    PartialsEstimate est = estimate_partials(window, horizon);
    benchmark::DoNotOptimize(est.d1m);
  }
}
BENCHMARK(BM_EstimatePartials)->Arg(2)->Arg(5)->Arg(10);

void BM_LtJacobianSolve(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const TrajectoryWindow window = affine_window(d, 3 * d + 1);
  const PartialsEstimate est = estimate_partials(window, 3 * d);
  for (auto _ : state) {
    Matrix jac = estimate_lt_jacobian(est);
    benchmark::DoNotOptimize(jac);
  }
}
BENCHMARK(BM_LtJacobianSolve)->Arg(2)->Arg(5)->Arg(10);

void BM_SpgdLinearRun(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const EnvironmentSpec spec = linear_spec(d);
  const OptReference opt = opt_reference(spec);
  OptimizerConfig cfg;
  cfg.method = Method::SPGD;
  cfg.lr = 0.1;
  cfg.perturbation = 0.1;
  cfg.horizon = -1;
  for (auto _ : state) {
    RunRecord run = run_optimizer(spec, cfg, 50, 7, opt);
    benchmark::DoNotOptimize(run.steps.back().loss_long_term);
  }
}
BENCHMARK(BM_SpgdLinearRun)->Arg(2)->Arg(5);

void BM_PerfgdLinearRun(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const EnvironmentSpec spec = linear_spec(d);
  const OptReference opt = opt_reference(spec);
  OptimizerConfig cfg;
  cfg.method = Method::PerfGD;
  cfg.lr = 0.1;
  cfg.perturbation = 0.1;
  cfg.wait = 5;
  for (auto _ : state) {
    RunRecord run = run_optimizer(spec, cfg, 50, 7, opt);
    benchmark::DoNotOptimize(run.steps.back().loss_long_term);
  }
}
BENCHMARK(BM_PerfgdLinearRun)->Arg(2)->Arg(5);

void BM_SpamLongTermLoss(benchmark::State& state) {
  const EnvironmentSpec spec = preset_config("spam").env;
  const Vector theta = 0.3 * Vector::Ones(spec.d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(long_term_loss(spec, theta));
  }
}
BENCHMARK(BM_SpamLongTermLoss);

void BM_SettleEnvelopeCheck(benchmark::State& state) {
  const EnvironmentSpec spec = preset_config("nonlinear").env;
  const Vector theta = 0.5 * Vector::Ones(spec.d);
  const Vector mu0 = spec.default_mu_init();
  for (auto _ : state) {
    EnvelopeCheckResult res = settle_envelope_check(spec, theta, mu0, 100);
    benchmark::DoNotOptimize(res.worst_ratio);
  }
}
BENCHMARK(BM_SettleEnvelopeCheck);

}  // namespace

BENCHMARK_MAIN();
