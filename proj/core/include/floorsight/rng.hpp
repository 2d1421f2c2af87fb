#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace floorsight {

// Deterministic sampling helpers. mt19937_64 output is pinned by the
// standard; the distributions here are hand-rolled because the standard
// library's are implementation-defined, and seeded runs must be
// byte-reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t bits() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // Rejection keeps it exactly uniform.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  bool chance(double p) { return uniform() < p; }

  // Box-Muller; one value per call keeps replay simple.
  double normal(double mean, double sd) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + sd * z;
  }

  // Parameterized by median (= exp(mu)) and sigma of log.
  double lognormal_median(double median, double sigma) {
    return median * std::exp(sigma * normal(0.0, 1.0));
  }

  double exponential(double mean) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -mean * std::log(u);
  }

  // Independent child stream (for per-attempt substreams).
  Rng fork(uint64_t salt) {
    uint64_t s = gen_() ^ (salt * 0x9e3779b97f4a7c15ULL);
    return Rng(s);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace floorsight
