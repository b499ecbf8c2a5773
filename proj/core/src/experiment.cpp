#include "perfopt/experiment.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "perfopt/errors.hpp"
#include "perfopt/estimators.hpp"
#include "perfopt/oracles.hpp"
#include "perfopt/rng.hpp"

namespace perfopt {

namespace {

struct MeanSe {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() == 1) {
    out.se = 0.0;
    return out;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                     static_cast<double>(xs.size()));
  return out;
}

void aggregate_cell(CellSummary& cell, const ExperimentConfig& cfg,
                    const OptReference& opt) {
  std::vector<const RunRecord*> ok;
  for (int t = 0; t < cfg.trials; ++t) {
    if (cell.trial_errors[t].empty()) ok.push_back(&cell.runs[t]);
    else ++cell.failed_trials;
  }
  if (ok.empty()) return;

  for (const RunRecord* r : ok) {
    cell.degenerate_steps += r->degenerate_steps;
    cell.noncontractive_steps += r->noncontractive_steps;
  }

  bool internal = cell.config.method == Method::DFO;
  std::vector<double> buf(ok.size());
  for (int s = 0; s < cfg.T; ++s) {
    for (std::size_t i = 0; i < ok.size(); ++i) buf[i] = ok[i]->steps[s].loss_long_term;
    MeanSe lt = mean_se(buf);
    cell.lt_mean.push_back(lt.mean);
    cell.lt_se.push_back(lt.se);
    for (std::size_t i = 0; i < ok.size(); ++i) buf[i] = ok[i]->steps[s].loss_instantaneous;
    MeanSe in = mean_se(buf);
    cell.inst_mean.push_back(in.mean);
    cell.inst_se.push_back(in.se);
    for (std::size_t i = 0; i < ok.size(); ++i) buf[i] = ok[i]->steps[s].frac_opt;
    MeanSe fr = mean_se(buf);
    cell.frac_mean.push_back(fr.mean);
    cell.frac_se.push_back(fr.se);
    if (internal) {
      for (std::size_t i = 0; i < ok.size(); ++i)
        buf[i] = ok[i]->steps[s].internal_loss_long_term;
      cell.internal_lt_mean.push_back(mean_se(buf).mean);
    }
  }
  cell.final_lt_mean = cell.lt_mean.back();
  cell.final_lt_se = cell.lt_se.back();
  cell.final_frac_mean = cell.frac_mean.back();
  cell.final_frac_se = cell.frac_se.back();

  double d2t_sum = 0.0;
  for (const RunRecord* r : ok) {
    auto reached = deployments_to_tolerance(*r, opt.loss, cfg.tol_frac);
    if (reached) {
      d2t_sum += static_cast<double>(*reached);
      ++cell.d2t_reached;
    }
  }
  if (cell.d2t_reached > 0)
    cell.d2t_mean = d2t_sum / static_cast<double>(cell.d2t_reached);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master_seed, Method method, int cell,
                         int trial) {
  std::uint64_t s = mix_seed(master_seed, 0x6d65ULL ^ static_cast<std::uint64_t>(method));
  s = mix_seed(s, 0xce11ULL ^ static_cast<std::uint64_t>(cell));
  return mix_seed(s, 0x7269ULL ^ static_cast<std::uint64_t>(trial));
}

ValidationInfo validate_environment(const EnvironmentSpec& spec,
                                    const OptReference& opt) {
  ValidationInfo v;
  Vector lo = spec.theta_lo(), hi = spec.theta_hi();
  Vector probe = project_box(Vector(0.7 * opt.theta), lo, hi);

  bool mc_loss = spec.variant == EnvVariant::Spam;
  double h = mc_loss ? 1e-3 : 1e-5;
  v.fd_threshold = mc_loss ? 5e-3 : 1e-5;
  Vector fd =
      fd_gradient([&spec](const Vector& t) { return long_term_loss(spec, t); },
                  probe, h)
          .grad;
  Matrix jac = true_lt_jacobian(spec, probe);
  RngStream rng(0xfd5eedULL);
  Vector mu_star = long_term_mean(spec, probe);
  Vector closed =
      estimate_lt_grad_env(spec, probe, mu_star, jac, 1000000, rng).grad;
  v.fd_residual = (closed - fd).norm() / std::max(1.0, fd.norm());
  v.fd_pass = v.fd_residual < v.fd_threshold;
  if (!v.fd_pass)
    v.warnings.push_back("gradient residual above threshold at the probe point");

  v.settle_envelope_ok =
      settle_envelope_check(spec, probe, spec.default_mu_init(), 200).ok;
  if (!v.settle_envelope_ok)
    v.warnings.push_back("settling envelope violated at the probe point");
  if (!opt.converged)
    v.warnings.push_back("opt reference search did not converge");
  return v;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool force_grid,
                                int threads) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;

  std::vector<OptimizerConfig> cells_cfg = experiment_cells(cfg, force_grid);
  if (cells_cfg.empty()) throw ExperimentError("no cells to run");

  // Warm the cached reference before fanning out.
  result.opt = opt_reference(cfg.env);

  int n_cells = static_cast<int>(cells_cfg.size());
  result.cells.resize(n_cells);
  for (int c = 0; c < n_cells; ++c) {
    result.cells[c].cell = c;
    result.cells[c].config = cells_cfg[c];
    result.cells[c].runs.resize(cfg.trials);
    result.cells[c].trial_errors.resize(cfg.trials);
  }

  struct Job {
    int cell;
    int trial;
  };
  std::vector<Job> jobs;
  jobs.reserve(static_cast<std::size_t>(n_cells) * cfg.trials);
  for (int c = 0; c < n_cells; ++c)
    for (int t = 0; t < cfg.trials; ++t) jobs.push_back({c, t});

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      const Job& job = jobs[k];
      CellSummary& cell = result.cells[job.cell];
      try {
        cell.runs[job.trial] = run_optimizer(
            cfg.env, cell.config, cfg.T,
            trial_seed(cfg.master_seed, cell.config.method, job.cell, job.trial),
            result.opt);
      } catch (const std::exception& e) {
        cell.trial_errors[job.trial] = e.what();
      }
    }
  };

  int n_threads = std::max(1, threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::string dead;
  for (auto& cell : result.cells) {
    aggregate_cell(cell, cfg, result.opt);
    if (cell.failed_trials == cfg.trials && dead.empty())
      dead = "cell " + std::to_string(cell.cell) + " (" +
             to_string(cell.config.method) + "): " + cell.trial_errors[0];
  }
  if (!dead.empty())
    throw ExperimentError("all trials failed for " + dead);

  for (const auto& cell : result.cells) {
    if (cell.failed_trials == cfg.trials) continue;
    std::string m = to_string(cell.config.method);
    auto it = result.best_cell.find(m);
    if (it == result.best_cell.end() ||
        cell.final_lt_mean < result.cells[it->second].final_lt_mean)
      result.best_cell[m] = cell.cell;
  }

  result.validation = validate_environment(cfg.env, result.opt);
  return result;
}

}  // namespace perfopt
