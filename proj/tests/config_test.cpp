#include "perfopt/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "perfopt/errors.hpp"

namespace perfopt {
namespace {

namespace fs = std::filesystem;

// Writes a config to a temp file and removes it when the test ends.
class TempConfig {
 public:
  explicit TempConfig(const std::string& body) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("perfopt_cfg_test_" + std::to_string(counter++) + ".jsonc");
    std::ofstream out(path_);
    out << body;
  }
  ~TempConfig() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  std::string path() const { return path_.string(); }

 private:
  fs::path path_;
};

TEST(Presets, EveryNamedPresetLoadsAndValidates) {
  auto names = preset_names();
  ASSERT_EQ(names.size(), 6u);
  for (const auto& name : names) {
    ExperimentConfig cfg = preset_config(name);
    EXPECT_EQ(cfg.id, name);
    EXPECT_FALSE(cfg.methods.empty());
    EXPECT_FALSE(cfg.grid.lr.empty());
  }
  EXPECT_THROW(preset_config("no-such-preset"), ConfigError);
}

TEST(Presets, CarryTheirHeadlineSettings) {
  ExperimentConfig lin = preset_config("linear");
  EXPECT_EQ(lin.env.d, 5);
  EXPECT_EQ(lin.methods.size(), 4u);
  EXPECT_EQ(lin.optimizers.size(), 4u);
  EXPECT_EQ(lin.k_list.size(), 7u);
  EXPECT_NEAR(lin.env.delta, delta_for_k_settle(16), 1e-15);

  ExperimentConfig spam = preset_config("spam");
  EXPECT_EQ(spam.env.variant, EnvVariant::Spam);
  EXPECT_EQ(spam.env.d, 2);
  EXPECT_EQ(spam.trials, 50);
  EXPECT_DOUBLE_EQ(spam.tol_frac, 0.02);

  ExperimentConfig bn = preset_config("bottleneck");
  EXPECT_EQ(bn.methods.size(), 5u);
  EXPECT_EQ(bn.theta0.size(), 5);
  EXPECT_DOUBLE_EQ(bn.theta0[0], 0.0);

  ExperimentConfig osc = preset_config("oscillating");
  for (const auto& cell : osc.optimizers) {
    bool is_spgd = cell.method == Method::SPGD || cell.method == Method::BSPGD;
    EXPECT_EQ(cell.fixed_base, is_spgd);
  }

  ExperimentConfig ext = preset_config("linear-extended");
  EXPECT_EQ(ext.env.sigma_err, 0.0);
  EXPECT_EQ(ext.methods.size(), 1u);
  EXPECT_EQ(ext.k_list.size(), 4u);
}

TEST(KSettle, MapsSettlingBudgetsToAdaptationRates) {
  EXPECT_DOUBLE_EQ(delta_for_k_settle(1), 0.99);
  EXPECT_NEAR(delta_for_k_settle(2), 0.9, 1e-12);
  for (int k : {4, 16, 64}) {
    double delta = delta_for_k_settle(k);
    EXPECT_NEAR(std::pow(1.0 - delta, k), 0.01, 1e-12);
  }
  EXPECT_THROW(delta_for_k_settle(0), ConfigError);

  ExperimentConfig cfg = preset_config("linear");
  apply_k_settle(cfg, 2);
  EXPECT_NEAR(cfg.env.delta, 0.9, 1e-12);
}

TEST(Grid, DefaultsFollowTheDocumentedSchedules) {
  GridSpec g = GridSpec::defaults(5);
  ASSERT_EQ(g.lr.size(), 6u);
  EXPECT_NEAR(g.lr[0], std::pow(10.0, -0.5), 1e-15);
  EXPECT_NEAR(g.lr[5], 1e-3, 1e-15);
  EXPECT_EQ(g.wait, (std::vector<int>{1, 5, 10, 20}));
  ASSERT_EQ(g.dfo_ps.size(), 4u);
  EXPECT_DOUBLE_EQ(g.dfo_ps[0], 1.0);
  ASSERT_EQ(g.spgd_ps.size(), 5u);
  EXPECT_DOUBLE_EQ(g.spgd_ps[0], 0.0);
  EXPECT_EQ(g.pgd_horizon, (std::vector<int>{5, 6, 7, 8, 9, 10, -1}));
  EXPECT_EQ(g.spgd_horizon, (std::vector<int>{10, 11, 12, 13, 14, 15, -1}));
}

TEST(Grid, ExpansionCountsAndOrderAreFixed) {
  ExperimentConfig cfg = preset_config("linear");
  auto spgd = expand_grid(Method::SPGD, cfg.grid, cfg.env);
  auto pgd = expand_grid(Method::PerfGD, cfg.grid, cfg.env);
  auto dfo = expand_grid(Method::DFO, cfg.grid, cfg.env);
  auto rgd = expand_grid(Method::RGD, cfg.grid, cfg.env);
  EXPECT_EQ(spgd.size(), 210u);  // 6 lr x 5 ps x 7 horizons
  EXPECT_EQ(pgd.size(), 168u);   // 6 lr x 4 wait x 7 horizons
  EXPECT_EQ(dfo.size(), 96u);    // 6 lr x 4 wait x 4 probe radii
  EXPECT_EQ(rgd.size(), 6u);

  // horizon varies fastest, then the middle axis, then lr
  EXPECT_DOUBLE_EQ(spgd[0].lr, cfg.grid.lr[0]);
  EXPECT_DOUBLE_EQ(spgd[0].perturbation, 0.0);
  EXPECT_EQ(spgd[0].horizon, 10);
  EXPECT_EQ(spgd[1].horizon, 11);
  EXPECT_EQ(spgd[6].horizon, -1);
  EXPECT_DOUBLE_EQ(spgd[7].perturbation, cfg.grid.spgd_ps[1]);
  EXPECT_DOUBLE_EQ(spgd[35].lr, cfg.grid.lr[1]);

  for (const auto& c : pgd) EXPECT_DOUBLE_EQ(c.perturbation, 0.1);
  for (const auto& c : rgd) EXPECT_DOUBLE_EQ(c.perturbation, 0.0);
  for (const auto& c : spgd) EXPECT_FALSE(c.fixed_base);

  ExperimentConfig osc = preset_config("oscillating");
  auto osc_spgd = expand_grid(Method::SPGD, osc.grid, osc.env);
  for (const auto& c : osc_spgd) EXPECT_TRUE(c.fixed_base);
}

TEST(LoadConfig, ParsesAJsoncFileWithGeneratorsAndComments) {
  TempConfig file(R"json({
    // full experiment block with both generator forms
    "experiment": "custom-a",
    "env": {
      "variant": "linear",
      "d": 2,
      "k_settle": 4, /* delta comes from the settling budget */
      "b": {"kind": "constant", "value": 2.0},
      "A": {"kind": "random_psd", "scale": -0.8},
      "sigma_err": 0.0
    },
    "methods": ["SPGD", "RGD"],
    "trials": 3,
    "T": 25,
    "seed": 42,
    "theta0": [0.5, 0.5]
  })json");
  ExperimentConfig cfg = load_config(file.path());
  EXPECT_EQ(cfg.id, "custom-a");
  EXPECT_EQ(cfg.env.d, 2);
  EXPECT_NEAR(cfg.env.delta, 1.0 - std::pow(0.01, 0.25), 1e-12);
  EXPECT_TRUE(cfg.env.b == Vector::Constant(2, 2.0));
  EXPECT_EQ(cfg.env.A.rows(), 2);
  EXPECT_TRUE(cfg.env.A.isApprox(Matrix(cfg.env.A.transpose()), 1e-12));
  EXPECT_EQ(cfg.methods.size(), 2u);
  EXPECT_TRUE(cfg.optimizers.empty());
  EXPECT_EQ(cfg.trials, 3);
  EXPECT_EQ(cfg.T, 25);
  EXPECT_EQ(cfg.master_seed, 42u);
  EXPECT_EQ(cfg.theta0.size(), 2);
  // no grid block: the defaults for d = 2 fill in
  EXPECT_EQ(cfg.grid.spgd_horizon, (std::vector<int>{4, 5, 6, -1}));
}

TEST(LoadConfig, PresetReferenceAndOverrides) {
  ExperimentConfig direct = preset_config("linear");
  ExperimentConfig via = load_config("preset:linear");
  EXPECT_EQ(via.id, direct.id);
  EXPECT_EQ(via.trials, direct.trials);
  EXPECT_TRUE(via.env.A == direct.env.A);

  TempConfig file(R"json({
    "preset": "linear",
    "experiment": "linear-slim",
    "methods": ["SPGD"],
    "trials": 2
  })json");
  ExperimentConfig cfg = load_config(file.path());
  EXPECT_EQ(cfg.id, "linear-slim");
  EXPECT_EQ(cfg.methods.size(), 1u);
  // overriding methods drops the preset's tuned cells
  EXPECT_TRUE(cfg.optimizers.empty());
  EXPECT_EQ(cfg.trials, 2);
  EXPECT_EQ(cfg.env.d, 5);
}

TEST(LoadConfig, ExplicitOptimizerCellsAndFullHorizon) {
  TempConfig file(R"json({
    "experiment": "cells",
    "env": {"variant": "linear", "d": 2, "delta": 0.5,
            "A": [[-0.8, 0.0], [0.0, -0.8]], "b": [2.0, 2.0]},
    "optimizers": [
      {"method": "SPGD", "lr": 0.1, "perturbation": 0.05, "horizon": "full"},
      {"method": "DFO", "lr": 0.01, "perturbation": 0.5, "wait": 5}
    ],
    "trials": 1,
    "T": 10
  })json");
  ExperimentConfig cfg = load_config(file.path());
  ASSERT_EQ(cfg.optimizers.size(), 2u);
  EXPECT_EQ(cfg.optimizers[0].method, Method::SPGD);
  EXPECT_EQ(cfg.optimizers[0].horizon, -1);
  EXPECT_EQ(cfg.optimizers[1].wait, 5);
  EXPECT_TRUE(cfg.methods.empty());
}

TEST(LoadConfig, RejectsMalformedInputs) {
  EXPECT_THROW(load_config("/no/such/file.jsonc"), ConfigError);

  TempConfig broken("{ not json");
  EXPECT_THROW(load_config(broken.path()), ConfigError);

  TempConfig unknown_root(R"json({"experiment": "x", "bogus": 1,
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "A": [[-1.0]], "b": [1.0]},
    "methods": ["RGD"]})json");
  EXPECT_THROW(load_config(unknown_root.path()), ConfigError);

  TempConfig unknown_env(R"json({"experiment": "x",
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "A": [[-1.0]], "b": [1.0],
            "frobnicate": true},
    "methods": ["RGD"]})json");
  EXPECT_THROW(load_config(unknown_env.path()), ConfigError);

  TempConfig unknown_cell(R"json({"experiment": "x",
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "A": [[-1.0]], "b": [1.0]},
    "optimizers": [{"method": "RGD", "momentum": 0.9}]})json");
  EXPECT_THROW(load_config(unknown_cell.path()), ConfigError);

  TempConfig unknown_grid(R"json({"experiment": "x",
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "A": [[-1.0]], "b": [1.0]},
    "methods": ["RGD"], "grid": {"lr": [0.1], "step": [1]}})json");
  EXPECT_THROW(load_config(unknown_grid.path()), ConfigError);

  TempConfig both_rates(R"json({"experiment": "x",
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "k_settle": 4,
            "A": [[-1.0]], "b": [1.0]},
    "methods": ["RGD"]})json");
  EXPECT_THROW(load_config(both_rates.path()), ConfigError);

  TempConfig negative_seed(R"json({"experiment": "x", "seed": -3,
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "A": [[-1.0]], "b": [1.0]},
    "methods": ["RGD"]})json");
  EXPECT_THROW(load_config(negative_seed.path()), ConfigError);

  TempConfig fractional_T(R"json({"experiment": "x", "T": 2.5,
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "A": [[-1.0]], "b": [1.0]},
    "methods": ["RGD"]})json");
  EXPECT_THROW(load_config(fractional_T.path()), ConfigError);

  TempConfig bad_horizon(R"json({"experiment": "x",
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "A": [[-1.0]], "b": [1.0]},
    "optimizers": [{"method": "SPGD", "horizon": "whole"}]})json");
  EXPECT_THROW(load_config(bad_horizon.path()), ConfigError);

  TempConfig psd_without_b(R"json({"experiment": "x",
    "env": {"variant": "linear", "d": 2, "delta": 0.5,
            "A": {"kind": "random_psd", "scale": -0.8}},
    "methods": ["RGD"]})json");
  EXPECT_THROW(load_config(psd_without_b.path()), ConfigError);

  TempConfig no_methods(R"json({"experiment": "x",
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "A": [[-1.0]], "b": [1.0]}})json");
  EXPECT_THROW(load_config(no_methods.path()), ConfigError);

  TempConfig bad_observation(R"json({"experiment": "x",
    "env": {"variant": "linear", "d": 1, "delta": 0.5, "A": [[-1.0]], "b": [1.0],
            "observation": "census"},
    "methods": ["RGD"]})json");
  EXPECT_THROW(load_config(bad_observation.path()), ConfigError);
}

TEST(ConfigValidate, RejectsUnsafeIdsAndBadCounts) {
  ExperimentConfig cfg = preset_config("linear");
  cfg.id = "a/b";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.id = "ok-id_1.2";
  cfg.validate();

  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.trials = 1;
  cfg.T = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.T = 10;
  cfg.tol_frac = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.tol_frac = 0.05;
  cfg.k_list = {4, 0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.k_list = {4};
  cfg.theta0 = Vector::Zero(3);
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ResolveSeed, FlagThenEnvironmentThenConfig) {
  EXPECT_EQ(resolve_seed(std::uint64_t{7}, "9", 3), 7u);
  EXPECT_EQ(resolve_seed(std::nullopt, "9", 3), 9u);
  EXPECT_EQ(resolve_seed(std::nullopt, "", 3), 3u);
  EXPECT_EQ(resolve_seed(std::nullopt, nullptr, 3), 3u);
  EXPECT_THROW(resolve_seed(std::nullopt, "12x", 3), ConfigError);
}

TEST(ResponseMatrix, DeterministicAndKeepsReferencePointsInTheBox) {
  Vector b = Vector::Constant(5, 2.0);
  Matrix a1 = draw_response_matrix(5, -0.8, b, 5.0);
  Matrix a2 = draw_response_matrix(5, -0.8, b, 5.0);
  EXPECT_TRUE(a1 == a2);
  EXPECT_TRUE(a1.isApprox(Matrix(a1.transpose()), 1e-12));

  Vector theta_opt = -invert_small(Matrix(a1 + Matrix(a1.transpose()))) * b;
  Vector theta_stab = -invert_small(a1) * b;
  EXPECT_LE(theta_opt.cwiseAbs().maxCoeff(), 0.9 * 5.0);
  EXPECT_LE(theta_stab.cwiseAbs().maxCoeff(), 0.9 * 5.0);

  EXPECT_THROW(draw_response_matrix(5, -0.8, Vector::Zero(3), 5.0), ConfigError);
}

TEST(ExperimentCells, PropagatesTheSharedStartAndHonorsForceGrid) {
  ExperimentConfig cfg = preset_config("linear");
  cfg.theta0 = Vector::Constant(5, 0.7);
  OptimizerConfig own = cfg.optimizers[0];
  own.theta0 = Vector::Constant(5, -0.2);
  cfg.optimizers[0] = own;

  auto cells = experiment_cells(cfg, false);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_DOUBLE_EQ(cells[0].theta0[0], -0.2);
  EXPECT_DOUBLE_EQ(cells[1].theta0[0], 0.7);

  auto grid_cells = experiment_cells(cfg, true);
  EXPECT_EQ(grid_cells.size(), 210u + 6u + 168u + 96u);
  for (const auto& c : grid_cells) EXPECT_EQ(c.theta0.size(), 5);
}

}  // namespace
}  // namespace perfopt
