#ifndef CAMR_RNG_HPP
#define CAMR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace camr {

// Seeded generator used everywhere randomness is needed. The engine is
// std::mt19937_64 (fixed by the standard, so streams reproduce across
// platforms) and the variate transforms below are hand-written for the
// same reason: std::normal_distribution is implementation-defined.
// Algorithm id recorded in manifests as "mt19937_64/box-muller-v1".
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/box-muller-v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  // Standard normal via Box-Muller (one variate per pair of uniforms).
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Exponential waiting time with unit rate.
  double exponential() { return -std::log(uniform_pos()); }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo bias is negligible for the ensemble sizes used
    // here, but keep it exact anyway.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace camr

#endif
