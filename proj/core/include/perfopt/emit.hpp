// Result serialization: per step CSV dumps, aggregate JSON summaries, and the
// statefulness sweep tables. Output is deterministic byte for byte for a
// given experiment result; nothing time or host dependent is written.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "perfopt/experiment.hpp"

namespace perfopt {

// RFC 4180 quoting: wraps the field in quotes when it contains a comma,
// quote, or line break, doubling embedded quotes.
std::string csv_field(const std::string& s);

// Shortest decimal string that round-trips the value.
std::string format_double(double v);

// One row per (cell, successful trial, step):
// experiment,method,cell,trial,step,theta_*,mu_hat_*,loss_instantaneous,
// loss_long_term,frac_opt
void emit_csv(const ExperimentResult& result, const std::string& path);

void emit_summary_json(const ExperimentResult& result, const std::string& path);

struct SweepPoint {
  int k = 0;
  double delta = 0.0;
  std::string method;
  int best_cell = -1;
  double lr = 0.0;
  double perturbation = 0.0;
  int horizon = 0;
  int wait = 1;
  double final_frac_mean = 0.0;
  double final_frac_se = 0.0;
  double final_lt_mean = 0.0;
  double final_lt_se = 0.0;
};

// Best cell per (method, k) across a statefulness sweep.
std::vector<SweepPoint> sweep_points(
    const std::vector<std::pair<int, ExperimentResult>>& by_k);

void emit_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path);
void emit_sweep_json(const ExperimentConfig& base,
                     const std::vector<SweepPoint>& points,
                     const std::string& path);

}  // namespace perfopt
