#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qmix/types.hpp"

namespace qmix {

// Seeded generator with pinned sampling algorithms. std::* distributions
// are implementation-defined, so uniform/normal/integer are implemented
// here to keep "same seed, same stream" a portable contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // [a, b)
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // (-pi, pi]
  double angle() { return -uniform(-std::numbers::pi, std::numbers::pi); }

  // standard normal, Box-Muller with cached spare
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re, im};
  }

  // uniform in [0, n), rejection sampled to avoid modulo bias
  std::uint64_t integer(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

  int binomial(int trials, double p) {
    int k = 0;
    for (int i = 0; i < trials; ++i) k += uniform() < p ? 1 : 0;
    return k;
  }

  bool coin() { return (eng_() >> 63) != 0; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(integer(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent derived stream; (seed, stream) -> new seed via splitmix64.
  Rng derive(std::uint64_t stream) const {
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qmix
