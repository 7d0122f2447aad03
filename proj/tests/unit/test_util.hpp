// Seeded random matrices for property tests.
#pragma once

#include <random>

#include "btc/types.hpp"

namespace btc::testing {

inline Matrix random_complex(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = Complex(n01(rng), n01(rng));
  return m;
}

inline Matrix random_hermitian(int d, std::mt19937_64& rng) {
  const Matrix m = random_complex(d, rng);
  return 0.5 * (m + m.adjoint());
}

inline Matrix random_density(int d, std::mt19937_64& rng) {
  const Matrix m = random_complex(d, rng);
  Matrix rho = m * m.adjoint();
  return rho / rho.trace();
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace btc::testing
