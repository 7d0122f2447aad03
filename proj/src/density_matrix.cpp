#include "btc/density_matrix.hpp"

#include <cmath>
#include <sstream>

namespace btc {

namespace {

Matrix hermitian_part(const Matrix& rho) { return 0.5 * (rho + rho.adjoint()); }

}  // namespace

double min_eigenvalue(const Matrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(rho), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

DensityDiagnostics diagnose(const Matrix& rho) {
  DensityDiagnostics d;
  d.finite = rho.allFinite();
  if (!d.finite) return d;
  d.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  d.trace_error = std::abs(rho.trace() - 1.0);
  d.min_eigenvalue = min_eigenvalue(rho);
  return d;
}

void check_density(const Matrix& rho, const DensityTolerance& tol) {
  const DensityDiagnostics d = diagnose(rho);
  if (d.satisfies(tol)) return;
  std::ostringstream msg;
  msg.precision(6);
  if (!d.finite) {
    msg << "density matrix has non-finite entries";
  } else if (d.hermiticity_error > tol.hermiticity) {
    msg << "density matrix not Hermitian: max |rho - rho^H| = " << d.hermiticity_error;
  } else if (d.trace_error > tol.trace) {
    msg << "density matrix trace off by " << d.trace_error;
  } else {
    msg << "density matrix not positive: min eigenvalue = " << d.min_eigenvalue
        << " (tolerance " << tol.min_eigenvalue << ")";
  }
  throw NumericalInvariantError(msg.str());
}

Matrix hermitize_normalize(const Matrix& rho) {
  Matrix out = rho;
  hermitize_normalize_inplace(out);
  return out;
}

void hermitize_normalize_inplace(Matrix& rho) {
  rho = hermitian_part(rho);
  const double tr = rho.trace().real();
  if (tr != 0.0) rho /= tr;
}

double purity(const Matrix& rho) { return (rho.transpose().cwiseProduct(rho)).sum().real(); }

double trace_distance(const Matrix& a, const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(a - b), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

DensityMatrix maximally_mixed(int dim) {
  return {Matrix::Identity(dim, dim) / static_cast<double>(dim), std::nullopt};
}

DensityMatrix pure_state(const Vector& psi) {
  const Vector v = psi / psi.norm();
  return {v * v.adjoint(), std::nullopt};
}

}  // namespace btc
