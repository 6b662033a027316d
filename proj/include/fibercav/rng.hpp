#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "fibercav/common.hpp"

namespace fibercav {

// splitmix64; used to derive independent per-trial / per-scan-point streams
// from (master_seed, index) so that partial scans reproduce full-scan columns.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

// Thin RNG wrapper. The engine is std::mt19937_64; all samplers are written
// out explicitly because the std distributions are implementation-defined and
// CSV byte-reproducibility is part of the contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller, one value per call (cache the pair)
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * constants::pi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * constants::pi * u2);
  }

  // Exact multiplicative (Knuth) sampling below the crossover; for large means
  // a normal approximation is used. All asserted statistics in this project
  // use either small per-trial means (exact path) or aggregated means >> 10^3
  // where the normal approximation is indistinguishable at the tested level.
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 64.0) {
      const double limit = std::exp(-mean);
      long long k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform();
      } while (p > limit);
      return k - 1;
    }
    const double v = mean + std::sqrt(mean) * normal() + 0.5;
    return v < 0.0 ? 0 : static_cast<long long>(v);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fibercav
