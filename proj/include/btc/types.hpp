// types.hpp - Shared numeric aliases and error types.

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace btc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

// Raised when a state or generator leaves its admissible set during a run
// (negative eigenvalues, non-finite entries, divergence). The CLI maps it to
// exit code 2.
class NumericalInvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the dense-superoperator memory guard.
class MemoryGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace btc
