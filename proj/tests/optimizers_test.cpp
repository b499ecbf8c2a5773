#include "perfopt/optimizers.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "perfopt/errors.hpp"

namespace perfopt {
namespace {

EnvironmentSpec linear_spec(int d, double delta, double sigma) {
  EnvironmentSpec spec;
  spec.variant = EnvVariant::Linear;
  spec.d = d;
  spec.delta = delta;
  spec.A = -0.8 * Matrix::Identity(d, d);
  spec.b = Vector::Constant(d, 2.0);
  spec.sigma_err = sigma;
  return spec;
}

EnvironmentSpec bottleneck_spec(int d) {
  EnvironmentSpec spec;
  spec.variant = EnvVariant::Bottleneck;
  spec.d = d;
  spec.mu0 = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  spec.ridge_lambda = 1.0;
  spec.sigma_err = 1e-3;
  return spec;
}

void expect_same_prefix(const RunRecord& a, const RunRecord& b, int n) {
  ASSERT_GE(static_cast<int>(a.steps.size()), n);
  ASSERT_GE(static_cast<int>(b.steps.size()), n);
  for (int i = 0; i < n; ++i) {
    const StepRecord& sa = a.steps[i];
    const StepRecord& sb = b.steps[i];
    ASSERT_EQ(sa.step, sb.step) << "at record " << i;
    ASSERT_TRUE(sa.theta == sb.theta) << "theta differs at record " << i;
    ASSERT_TRUE(sa.mu_hat == sb.mu_hat) << "mu_hat differs at record " << i;
    ASSERT_EQ(sa.grad.size(), sb.grad.size()) << "at record " << i;
    if (sa.grad.size() > 0) {
      ASSERT_TRUE(sa.grad == sb.grad) << "grad differs at record " << i;
    }
    ASSERT_EQ(sa.loss_instantaneous, sb.loss_instantaneous) << "at record " << i;
    ASSERT_EQ(sa.loss_long_term, sb.loss_long_term) << "at record " << i;
  }
}

OptimizerConfig make_cfg(Method m, double lr, double ps, int horizon, int wait) {
  OptimizerConfig cfg;
  cfg.method = m;
  cfg.lr = lr;
  cfg.perturbation = ps;
  cfg.horizon = horizon;
  cfg.wait = wait;
  return cfg;
}

TEST(Runners, SameSeedReproducesEveryMethodBitForBit) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 1e-3);
  OptReference opt = opt_reference(lin);
  struct Case {
    OptimizerConfig cfg;
    int T;
  };
  std::vector<Case> cases = {
      {make_cfg(Method::SPGD, 0.1, 0.1, -1, 1), 40},
      {make_cfg(Method::RGD, 0.1, 0.0, 0, 1), 40},
      {make_cfg(Method::PerfGD, 0.1, 0.1, -1, 5), 40},
      {make_cfg(Method::DFO, 0.05, 0.5, 0, 5), 40},
  };
  for (const auto& c : cases) {
    RunRecord a = run_optimizer(lin, c.cfg, c.T, 12345, opt);
    RunRecord b = run_optimizer(lin, c.cfg, c.T, 12345, opt);
    ASSERT_EQ(a.steps.size(), static_cast<std::size_t>(c.T));
    expect_same_prefix(a, b, c.T);
  }

  EnvironmentSpec bn = bottleneck_spec(3);
  OptReference bopt = opt_reference(bn);
  OptimizerConfig bcfg = make_cfg(Method::BSPGD, 0.1, 0.03, -1, 1);
  RunRecord a = run_optimizer(bn, bcfg, 30, 999, bopt);
  RunRecord b = run_optimizer(bn, bcfg, 30, 999, bopt);
  expect_same_prefix(a, b, 30);
}

TEST(Runners, DeployExactlyTModelsEvenWhenWaitDoesNotDivideT) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 1e-3);
  OptReference opt = opt_reference(lin);
  for (Method m : {Method::PerfGD, Method::DFO}) {
    OptimizerConfig cfg = make_cfg(m, 0.05, 0.3, 0, 5);
    RunRecord rec = run_optimizer(lin, cfg, 13, 7, opt);
    ASSERT_EQ(rec.steps.size(), 13u);
    for (int i = 0; i < 13; ++i) EXPECT_EQ(rec.steps[i].step, i + 1);
  }
  EXPECT_THROW(run_optimizer(lin, make_cfg(Method::SPGD, 0.1, 0.1, -1, 1), 0, 1,
                             opt),
               InvalidInputError);
}

TEST(Runners, SpgdApproachesTheOptimumOnTheNoiselessLinearMap) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 0.0);
  OptReference opt = opt_reference(lin);
  OptimizerConfig cfg = make_cfg(Method::SPGD, 0.1, 0.05, -1, 1);
  RunRecord rec = run_spgd(lin, cfg, 300, 3, opt);
  EXPECT_GE(rec.steps.back().frac_opt, 0.9);
  EXPECT_LE((rec.steps.back().theta - opt.theta).norm(), 0.5);
}

TEST(Runners, RgdSettlesAtTheStablePointNotTheOptimum) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 0.0);
  OptReference opt = opt_reference(lin);
  OptimizerConfig cfg = make_cfg(Method::RGD, 0.31622776601683794, 0.0, 0, 1);
  RunRecord rec = run_rgd(lin, cfg, 500, 3, opt);
  Vector theta_stab = Vector::Constant(2, 2.5);  // -A^{-1} b
  EXPECT_LE((rec.steps.back().theta - theta_stab).norm(), 1e-8);
  EXPECT_GT((rec.steps.back().theta - opt.theta).norm(), 1.0);
}

TEST(Runners, ConfigValidationRejectsBadCombinations) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 1e-3);
  OptReference opt = opt_reference(lin);
  EXPECT_THROW(run_optimizer(lin, make_cfg(Method::BSPGD, 0.1, 0.1, -1, 1), 10,
                             1, opt),
               ConfigError);
  EXPECT_THROW(run_optimizer(lin, make_cfg(Method::DFO, 0.1, 0.0, 0, 5), 10, 1,
                             opt),
               ConfigError);
  EXPECT_THROW(run_optimizer(lin, make_cfg(Method::PerfGD, 0.1, 0.1, 0, 0), 10,
                             1, opt),
               ConfigError);
  // horizon 3 is below dim(psi) = 4 for SPGD on a d=2 environment
  EXPECT_THROW(run_optimizer(lin, make_cfg(Method::SPGD, 0.1, 0.1, 3, 1), 10, 1,
                             opt),
               ConfigError);
  EXPECT_THROW(run_optimizer(lin, make_cfg(Method::SPGD, 0.0, 0.1, -1, 1), 10,
                             1, opt),
               ConfigError);
  OptimizerConfig bad_theta0 = make_cfg(Method::RGD, 0.1, 0.0, 0, 1);
  bad_theta0.theta0 = Vector::Zero(3);
  EXPECT_THROW(run_optimizer(lin, bad_theta0, 10, 1, opt), ConfigError);
}

TEST(Runners, SpgdGradIsEmptyDuringInitAndAppearsAfterward) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 0.0);
  OptReference opt = opt_reference(lin);
  OptimizerConfig cfg = make_cfg(Method::SPGD, 0.1, 0.05, -1, 1);
  RunRecord rec = run_spgd(lin, cfg, 20, 11, opt);
  // init_steps defaults to d = 2
  EXPECT_EQ(rec.steps[0].grad.size(), 0);
  EXPECT_EQ(rec.steps[1].grad.size(), 0);
  EXPECT_EQ(rec.steps[2].grad.size(), 2);
  bool any_nonzero = false;
  for (const auto& s : rec.steps)
    if (s.grad.size() > 0 && s.grad.norm() > 0.0) any_nonzero = true;
  EXPECT_TRUE(any_nonzero);
}

TEST(Runners, DfoCarriesInternalIterateLossesAndOthersDoNot) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 1e-3);
  OptReference opt = opt_reference(lin);
  RunRecord dfo =
      run_dfo(lin, make_cfg(Method::DFO, 0.05, 0.5, 0, 5), 20, 4, opt);
  for (const auto& s : dfo.steps) {
    EXPECT_TRUE(std::isfinite(s.internal_loss_long_term));
    EXPECT_TRUE(std::isfinite(s.internal_frac_opt));
  }
  RunRecord spgd =
      run_spgd(lin, make_cfg(Method::SPGD, 0.1, 0.1, -1, 1), 10, 4, opt);
  EXPECT_TRUE(std::isnan(spgd.steps.back().internal_loss_long_term));
  EXPECT_TRUE(std::isnan(spgd.steps.back().internal_frac_opt));
}

TEST(Runners, SpgdRespectsTheGradientClip) {
  // A large offset makes the raw long-term gradient exceed the clip threshold
  // while the optimum sits outside the box, so clipping must engage.
  EnvironmentSpec lin = linear_spec(2, 0.5, 0.0);
  lin.b = Vector::Constant(2, 20.0);
  OptReference opt = opt_reference(lin);
  OptimizerConfig cfg = make_cfg(Method::SPGD, 0.05, 0.05, -1, 1);
  cfg.clip_norm = 10.0;
  RunRecord rec = run_spgd(lin, cfg, 60, 21, opt);
  bool any_at_bound = false;
  for (const auto& s : rec.steps) {
    if (s.grad.size() == 0) continue;
    EXPECT_LE(s.grad.norm(), 10.0 + 1e-9);
    if (std::abs(s.grad.norm() - 10.0) < 1e-9) any_at_bound = true;
  }
  EXPECT_TRUE(any_at_bound);
}

TEST(Runners, ShorterRunsAreExactPrefixesOfLongerOnes) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 1e-3);
  OptReference opt = opt_reference(lin);

  OptimizerConfig spgd = make_cfg(Method::SPGD, 0.1, 0.1, -1, 1);
  expect_same_prefix(run_spgd(lin, spgd, 20, 5, opt),
                     run_spgd(lin, spgd, 60, 5, opt), 20);

  // wait = 7 does not divide 20, so the short run ends mid block
  OptimizerConfig dfo = make_cfg(Method::DFO, 0.05, 0.5, 0, 7);
  expect_same_prefix(run_dfo(lin, dfo, 20, 5, opt),
                     run_dfo(lin, dfo, 60, 5, opt), 20);

  OptimizerConfig pgd = make_cfg(Method::PerfGD, 0.1, 0.1, 0, 7);
  expect_same_prefix(run_perfgd(lin, pgd, 20, 5, opt),
                     run_perfgd(lin, pgd, 60, 5, opt), 20);
}

TEST(Runners, DispatchMatchesTheDirectEntryPoints) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 1e-3);
  OptReference opt = opt_reference(lin);
  OptimizerConfig cfg = make_cfg(Method::PerfGD, 0.1, 0.1, 0, 5);
  RunRecord via_dispatch = run_optimizer(lin, cfg, 15, 8, opt);
  RunRecord direct = run_perfgd(lin, cfg, 15, 8, opt);
  EXPECT_EQ(via_dispatch.method, Method::PerfGD);
  expect_same_prefix(via_dispatch, direct, 15);
}

TEST(Runners, InitialThetaIsProjectedIntoTheBox) {
  EnvironmentSpec lin = linear_spec(2, 0.5, 0.0);
  OptReference opt = opt_reference(lin);
  OptimizerConfig cfg = make_cfg(Method::RGD, 0.1, 0.0, 0, 1);
  cfg.theta0 = Vector(2);
  cfg.theta0 << 10.0, -10.0;
  RunRecord rec = run_rgd(lin, cfg, 1, 1, opt);
  EXPECT_EQ(rec.steps[0].theta[0], 5.0);
  EXPECT_EQ(rec.steps[0].theta[1], -5.0);
}

TEST(DeploymentsToTolerance, PicksTheFirstStepInsideTheBand) {
  RunRecord rec;
  double losses[] = {-1.0, -1.85, -1.7, -1.9};
  for (int i = 0; i < 4; ++i) {
    StepRecord s;
    s.step = i + 1;
    s.loss_long_term = losses[i];
    rec.steps.push_back(s);
  }
  // band = -2 + 0.1 * 2 = -1.8
  auto hit = deployments_to_tolerance(rec, -2.0, 0.1);
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(*hit, 2);
  EXPECT_FALSE(deployments_to_tolerance(rec, -2.0, 0.01).has_value());
  EXPECT_THROW(deployments_to_tolerance(rec, -2.0, -0.1), InvalidInputError);
}

}  // namespace
}  // namespace perfopt
