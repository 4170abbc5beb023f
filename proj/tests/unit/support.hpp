#pragma once

// Seeded generators for the property tests.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "hkvf/mobius.hpp"

namespace hkvf::prop {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  Complex complex(double r = 2.0) { return {uniform(-r, r), uniform(-r, r)}; }

  Complex in_disc(double r = 1.0) {
    return std::polar(r * std::sqrt(uniform(0.0, 1.0)), uniform(0.0, 2.0 * std::numbers::pi));
  }

  /// det = 1 by construction; entries of moderate size.
  MobiusTransform mobius(double r = 2.0) {
    while (true) {
      const Complex a = complex(r), b = complex(r), c = complex(r);
      if (std::abs(a) < 0.2) continue;
      return {a, b, c, (1.0 + b * c) / a};
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Largest chordal distance between f and g at the sample points.
template <class F, class G>
double max_chordal(F&& f, G&& g, const std::vector<ExtendedPoint>& pts) {
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, chordal_distance(f(p), g(p)));
  return worst;
}

}  // namespace hkvf::prop
