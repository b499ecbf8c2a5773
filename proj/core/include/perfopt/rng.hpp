// Deterministic random streams. All randomness in the library flows through
// RngStream so that a run is reproducible bit for bit from its seed. Seeds for
// sub-streams (per trial, per purpose) are derived with a splitmix64-style
// mixer rather than arithmetic offsets to avoid correlated streams.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "perfopt/linalg.hpp"

namespace perfopt {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed ^ (salt + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. mt19937_64 output is fully specified by
  // the standard and we avoid std::normal_distribution, whose algorithm is
  // implementation defined, so sequences match across toolchains.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vector normal_vector(int n, double scale = 1.0) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * normal();
    return v;
  }

  // Uniform direction on the unit sphere in R^n.
  Vector unit_sphere(int n) {
    Vector v = normal_vector(n);
    double norm = v.norm();
    while (norm < 1e-12) {
      v = normal_vector(n);
      norm = v.norm();
    }
    return v / norm;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace perfopt
