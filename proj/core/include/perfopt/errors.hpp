// Exception types thrown by the perfopt library. Estimator failures that an
// optimizer is expected to recover from get their own types so callers can
// catch them narrowly.
#pragma once

#include <stdexcept>
#include <string>

namespace perfopt {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Estimation window has fewer usable points than the regression needs.
struct InsufficientHorizonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Window points do not span the regressor space (rank deficient).
struct DegenerateWindowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Estimated state-feedback block has spectral norm >= 1, so the long-term
// Jacobian series does not converge.
struct NonContractiveError : std::runtime_error {
  explicit NonContractiveError(double norm)
      : std::runtime_error("estimated state block is non-contractive, spectral norm " +
                           std::to_string(norm)),
        spectral_norm(norm) {}
  double spectral_norm;
};

struct ExperimentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace perfopt
