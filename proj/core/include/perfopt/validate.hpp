// Built in verification suite: estimator exactness, Neumann limit agreement,
// gradient fidelity, settling envelopes, the repeated minimization fixed
// point, the descent trend, and byte level reproducibility. The CLI exposes
// these as `perfopt validate`; the acceptance tests run the same code.
#pragma once

#include <string>
#include <vector>

namespace perfopt {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CheckResult> run_validation_suite(int threads);
bool all_pass(const std::vector<CheckResult>& checks);

}  // namespace perfopt
