#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

// Deterministic random helpers. std::mt19937_64 output is pinned by the
// standard, but the std::*_distribution wrappers are not, and reports must be
// byte-identical across toolchains for the same seed. So the engine comes
// from <random> and the value transforms live here.
namespace ixbandit {

// splitmix64 finaliser, used to derive well-separated stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

  // Independent child stream, e.g. per (round, query, component).
  Rng fork(std::uint64_t tag) { return Rng(mix64(eng_(), tag)); }

  std::uint64_t bits() { return eng_(); }

  // [0, 1)
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return v % n;
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive
    if (hi < lo) throw std::invalid_argument("Rng::uniform_int: empty range");
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller; two engine draws per sample, no cached
  // spare so the draw count per call is fixed.
  double gaussian() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Multiplicative noise factor with mean exactly 1 and the given coefficient
  // of variation. cv = 0 returns 1 without consuming engine state.
  double lognormal_unit_mean(double cv) {
    if (cv < 0.0) throw std::invalid_argument("Rng::lognormal_unit_mean: cv must be >= 0");
    if (cv == 0.0) return 1.0;
    const double s2 = std::log1p(cv * cv);
    return std::exp(gaussian() * std::sqrt(s2) - 0.5 * s2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ixbandit
