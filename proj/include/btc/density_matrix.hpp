// density_matrix.hpp - Density-matrix value type and its admissibility checks.

#pragma once

#include <optional>

#include "btc/types.hpp"

namespace btc {

struct DensityMatrix {
  Matrix matrix;
  std::optional<double> time_label;  // in units of 1/kappa

  int dim() const { return static_cast<int>(matrix.rows()); }
};

struct DensityTolerance {
  double hermiticity = 1e-10;
  double trace = 1e-10;
  double min_eigenvalue = -1e-8;
};

struct DensityDiagnostics {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger|
  double trace_error = 0.0;        // |Tr rho - 1|
  double min_eigenvalue = 0.0;     // of the Hermitian part
  bool finite = true;

  bool satisfies(const DensityTolerance& tol) const {
    return finite && hermiticity_error <= tol.hermiticity && trace_error <= tol.trace &&
           min_eigenvalue >= tol.min_eigenvalue;
  }
};

DensityDiagnostics diagnose(const Matrix& rho);

// Throws NumericalInvariantError describing the first violated invariant.
void check_density(const Matrix& rho, const DensityTolerance& tol = {});

// (rho + rho^dagger)/2 rescaled to unit trace.
Matrix hermitize_normalize(const Matrix& rho);
void hermitize_normalize_inplace(Matrix& rho);

double min_eigenvalue(const Matrix& rho);
double purity(const Matrix& rho);
// (1/2) sum |eigenvalues of (a - b)| for Hermitian a, b.
double trace_distance(const Matrix& a, const Matrix& b);

DensityMatrix maximally_mixed(int dim);
DensityMatrix pure_state(const Vector& psi);

}  // namespace btc
