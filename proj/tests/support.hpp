#pragma once

#include <cmath>
#include <random>
#include <vector>

namespace fbl::testing {

inline double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Random point of the simplex; entries are zero with probability zero_chance.
inline std::vector<double> random_simplex(std::size_t k, std::mt19937_64& rng,
                                          double zero_chance = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(k);
  double s = 0.0;
  for (double& v : p) {
    v = u(rng) < zero_chance ? 0.0 : 0.05 + u(rng);
    s += v;
  }
  if (s == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (double& v : p) v /= s;
  return p;
}

// Row-stochastic matrix, row-major.
inline std::vector<double> random_channel(std::size_t in, std::size_t out, std::mt19937_64& rng,
                                          double zero_chance = 0.0) {
  std::vector<double> w;
  for (std::size_t r = 0; r < in; ++r) {
    const std::vector<double> row = random_simplex(out, rng, zero_chance);
    w.insert(w.end(), row.begin(), row.end());
  }
  return w;
}

}  // namespace fbl::testing
