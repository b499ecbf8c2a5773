#include "perfopt/emit.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "perfopt/errors.hpp"

namespace perfopt {

namespace {

using ordered_json = nlohmann::ordered_json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExperimentError("cannot open output file '" + path + "'");
  return out;
}

ordered_json config_json(const OptimizerConfig& c) {
  ordered_json j;
  j["method"] = to_string(c.method);
  j["lr"] = c.lr;
  j["perturbation"] = c.perturbation;
  j["horizon"] = c.horizon;
  j["wait"] = c.wait;
  j["init_steps"] = c.init_steps;
  j["clip_norm"] = c.clip_norm;
  j["mc_samples"] = c.mc_samples;
  j["fixed_base"] = c.fixed_base;
  return j;
}

ordered_json cell_json(const CellSummary& cell, int trials) {
  ordered_json j;
  j["cell"] = cell.cell;
  j["config"] = config_json(cell.config);
  j["final"] = {{"loss_long_term_mean", cell.final_lt_mean},
                {"loss_long_term_se", cell.final_lt_se},
                {"frac_opt_mean", cell.final_frac_mean},
                {"frac_opt_se", cell.final_frac_se}};
  ordered_json d2t;
  if (cell.d2t_reached > 0) d2t["mean"] = cell.d2t_mean;
  else d2t["mean"] = nullptr;
  d2t["reached"] = cell.d2t_reached;
  d2t["trials"] = trials;
  j["deployments_to_tolerance"] = d2t;
  j["failed_trials"] = cell.failed_trials;
  j["degenerate_steps"] = cell.degenerate_steps;
  j["noncontractive_steps"] = cell.noncontractive_steps;
  ordered_json curves;
  curves["loss_long_term_mean"] = cell.lt_mean;
  curves["loss_long_term_se"] = cell.lt_se;
  curves["loss_instantaneous_mean"] = cell.inst_mean;
  curves["frac_opt_mean"] = cell.frac_mean;
  curves["frac_opt_se"] = cell.frac_se;
  if (!cell.internal_lt_mean.empty())
    curves["internal_loss_long_term_mean"] = cell.internal_lt_mean;
  j["curves"] = curves;
  return j;
}

}  // namespace

std::string csv_field(const std::string& s) {
  bool needs_quote = s.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void emit_csv(const ExperimentResult& result, const std::string& path) {
  std::ofstream out = open_out(path);
  int d = result.config.env.d;
  int sd = result.config.env.state_dim();

  out << "experiment,method,cell,trial,step";
  for (int i = 0; i < d; ++i) out << ",theta_" << i;
  for (int i = 0; i < sd; ++i) out << ",mu_hat_" << i;
  out << ",loss_instantaneous,loss_long_term,frac_opt\r\n";

  for (const auto& cell : result.cells) {
    for (int trial = 0; trial < result.config.trials; ++trial) {
      if (!cell.trial_errors[trial].empty()) continue;
      const RunRecord& run = cell.runs[trial];
      for (const auto& s : run.steps) {
        out << csv_field(result.config.id) << ','
            << to_string(cell.config.method) << ',' << cell.cell << ','
            << trial << ',' << s.step;
        for (int i = 0; i < d; ++i) out << ',' << format_double(s.theta[i]);
        for (int i = 0; i < sd; ++i) out << ',' << format_double(s.mu_hat[i]);
        out << ',' << format_double(s.loss_instantaneous) << ','
            << format_double(s.loss_long_term) << ','
            << format_double(s.frac_opt) << "\r\n";
      }
    }
  }
}

void emit_summary_json(const ExperimentResult& result, const std::string& path) {
  const ExperimentConfig& cfg = result.config;
  ordered_json j;
  j["experiment"] = cfg.id;
  ordered_json jc;
  jc["variant"] = to_string(cfg.env.variant);
  jc["d"] = cfg.env.d;
  jc["delta"] = cfg.env.delta;
  jc["R"] = cfg.env.R;
  jc["sigma_err"] = cfg.env.sigma_err;
  jc["trials"] = cfg.trials;
  jc["T"] = cfg.T;
  jc["seed"] = cfg.master_seed;
  jc["tol_frac"] = cfg.tol_frac;
  jc["cells"] = result.cells.size();
  j["config"] = jc;

  ordered_json jopt;
  jopt["theta"] = std::vector<double>(result.opt.theta.data(),
                                      result.opt.theta.data() + result.opt.theta.size());
  jopt["loss"] = result.opt.loss;
  jopt["provenance"] = result.opt.provenance;
  jopt["converged"] = result.opt.converged;
  j["opt_reference"] = jopt;

  ordered_json jv;
  jv["fd_residual"] = result.validation.fd_residual;
  jv["fd_threshold"] = result.validation.fd_threshold;
  jv["fd_pass"] = result.validation.fd_pass;
  jv["settle_envelope_ok"] = result.validation.settle_envelope_ok;
  jv["warnings"] = result.validation.warnings;
  j["validation"] = jv;

  ordered_json jm;
  for (const auto& cell : result.cells) {
    std::string m = to_string(cell.config.method);
    if (!jm.contains(m)) {
      jm[m] = ordered_json::object();
      auto best = result.best_cell.find(m);
      jm[m]["best_cell"] = best == result.best_cell.end()
                               ? ordered_json(nullptr)
                               : ordered_json(best->second);
      jm[m]["cells"] = ordered_json::array();
    }
    jm[m]["cells"].push_back(cell_json(cell, cfg.trials));
  }
  j["methods"] = jm;

  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

std::vector<SweepPoint> sweep_points(
    const std::vector<std::pair<int, ExperimentResult>>& by_k) {
  std::vector<SweepPoint> points;
  for (const auto& [k, result] : by_k) {
    for (const auto& [method, cell_idx] : result.best_cell) {
      const CellSummary& cell = result.cells[cell_idx];
      SweepPoint p;
      p.k = k;
      p.delta = result.config.env.delta;
      p.method = method;
      p.best_cell = cell_idx;
      p.lr = cell.config.lr;
      p.perturbation = cell.config.perturbation;
      p.horizon = cell.config.horizon;
      p.wait = cell.config.wait;
      p.final_frac_mean = cell.final_frac_mean;
      p.final_frac_se = cell.final_frac_se;
      p.final_lt_mean = cell.final_lt_mean;
      p.final_lt_se = cell.final_lt_se;
      points.push_back(p);
    }
  }
  return points;
}

void emit_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "k,delta,method,best_cell,lr,perturbation,horizon,wait,"
         "final_frac_opt_mean,final_frac_opt_se,"
         "final_loss_long_term_mean,final_loss_long_term_se\r\n";
  for (const auto& p : points) {
    out << p.k << ',' << format_double(p.delta) << ',' << csv_field(p.method)
        << ',' << p.best_cell << ',' << format_double(p.lr) << ','
        << format_double(p.perturbation) << ',' << p.horizon << ',' << p.wait
        << ',' << format_double(p.final_frac_mean) << ','
        << format_double(p.final_frac_se) << ','
        << format_double(p.final_lt_mean) << ','
        << format_double(p.final_lt_se) << "\r\n";
  }
}

void emit_sweep_json(const ExperimentConfig& base,
                     const std::vector<SweepPoint>& points,
                     const std::string& path) {
  ordered_json j;
  j["experiment"] = base.id;
  j["variant"] = to_string(base.env.variant);
  j["d"] = base.env.d;
  j["trials"] = base.trials;
  j["T"] = base.T;
  j["seed"] = base.master_seed;
  j["points"] = ordered_json::array();
  for (const auto& p : points) {
    ordered_json pj;
    pj["k"] = p.k;
    pj["delta"] = p.delta;
    pj["method"] = p.method;
    pj["best_cell"] = p.best_cell;
    pj["config"] = {{"lr", p.lr},
                    {"perturbation", p.perturbation},
                    {"horizon", p.horizon},
                    {"wait", p.wait}};
    pj["final_frac_opt_mean"] = p.final_frac_mean;
    pj["final_frac_opt_se"] = p.final_frac_se;
    pj["final_loss_long_term_mean"] = p.final_lt_mean;
    pj["final_loss_long_term_se"] = p.final_lt_se;
    j["points"].push_back(pj);
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace perfopt
