#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace testing_support {

inline std::vector<double> gaussian_vector(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

inline std::vector<double> random_matrix(std::mt19937_64& rng, std::size_t n) {
  // Identity plus a small perturbation keeps the condition number moderate.
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = (i == j ? 1.0 : 0.0) + g(rng);
  }
  return m;
}

inline double ln_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace testing_support
